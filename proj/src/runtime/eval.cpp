#include <cmath>
#include <set>

#include "adl/runtime.hpp"
#include "adl/typecheck.hpp"
#include "terms.hpp"

namespace adl {

namespace {

constexpr int kMaxDepth = 4000;

bool numeric(const Value& v) { return v.holds<std::int64_t>() || v.holds<double>(); }

double as_real(const Value& v) {
  return v.holds<double>() ? v.as<double>() : static_cast<double>(v.as<std::int64_t>());
}

bool mentions(const Node& n, const std::string& name) {
  if (n.is(NodeKind::kName) && n.text == name) return true;
  for (const auto& c : n.children) {
    if (mentions(c, name)) return true;
  }
  return false;
}

Value literal_value(const Scalar& s) {
  if (auto* i = std::get_if<std::int64_t>(&s)) return Value{*i};
  if (auto* r = std::get_if<double>(&s)) return Value{*r};
  if (auto* b = std::get_if<bool>(&s)) return Value{*b};
  return Value{std::get<std::string>(s)};
}

}  // namespace

Value Engine::evaluate(const Node& expr, const EvalContext& ctx) { return eval(expr, ctx, 0); }

Node Engine::close_over(Node n, const std::map<std::string, Value>& env) {
  for (const auto& [name, v] : env) {
    if (!mentions(n, name)) continue;
    detail::substitute(n, name, make_link(store_.bind(v), name));
  }
  return n;
}

Value Engine::call(const FunctionValue& f, const std::vector<Value>& args, const EvalContext& ctx) {
  const Closure& c = *f.closure;
  if (args.size() != c.param_types.size()) {
    throw RuntimeFault("function expects " + std::to_string(c.param_types.size()) +
                       " argument(s), given " + std::to_string(args.size()));
  }
  if (!c.native.empty()) {
    auto it = natives_.find(c.native);
    if (it == natives_.end()) throw RuntimeFault("native function '" + c.native + "' is not available");
    Value r = it->second.fn(*this, args);
    emit("call", {{"function", c.native},
                  {"behaviour", ctx.thread ? nlohmann::json(ctx.thread->id) : nlohmann::json(nullptr)}});
    return r;
  }
  std::map<std::string, Value> env;
  for (size_t i = 0; i < args.size(); ++i) env[c.params[i]] = args[i];
  EvalContext inner{ctx.owner, ctx.thread, &env};
  static thread_local int depth = 0;
  if (++depth > kMaxDepth) {
    depth = 0;
    throw RuntimeFault("function call depth exceeded");
  }
  struct Unwind {
    ~Unwind() { if (depth > 0) --depth; }
  } unwind;
  Value r = eval(c.body, inner, 0);
  if (c.result && type_of_value(r) != *c.result) {
    throw RuntimeFault("function returned " + to_string(type_of_value(r)) + ", declared " +
                       to_string(*c.result));
  }
  return r;
}

Value Engine::behaviour_literal(const Node& n, const EvalContext& ctx) {
  auto g = new_group(ctx.owner);
  Node term = ctx.env ? close_over(n, *ctx.env) : n;
  // Reified parts declare their endpoints up front; bind them statically.
  term = detail::split_endpoints(term, store_, g->endpoints);
  spawn(std::move(term), g, false, ctx.thread);
  return Value{BehaviourValue{g}};
}

Value Engine::eval(const Node& n, const EvalContext& ctx, int depth) {
  if (depth > kMaxDepth) throw RuntimeFault("expression nesting too deep");
  auto sub = [&](const Node& c) { return eval(c, ctx, depth + 1); };
  switch (n.kind) {
    case NodeKind::kLiteral:
      return literal_value(n.literal);
    case NodeKind::kName:
      if (ctx.env) {
        auto it = ctx.env->find(n.text);
        if (it != ctx.env->end()) return it->second;
      }
      throw RuntimeFault("unbound name '" + n.text + "'");
    case NodeKind::kLink:
      if (!store_.contains(n.link)) {
        throw RuntimeFault("unresolvable link @[" + std::to_string(raw(n.link)) + "]");
      }
      return store_.lookup(n.link);
    case NodeKind::kBinop:
      return eval_binop(n, ctx, depth);
    case NodeKind::kConnectionNew: {
      auto c = std::make_shared<ConnectionCell>();
      c->id = store_.next_cell_id();
      c->payload = n.types;
      return Value{ConnectionValue{std::move(c)}};
    }
    case NodeKind::kLocationNew: {
      Value v = sub(n.children[0]);
      auto c = std::make_shared<LocationCell>();
      c->id = store_.next_cell_id();
      c->content = type_of_value(v);
      c->contents = std::move(v);
      return Value{LocationValue{std::move(c)}};
    }
    case NodeKind::kDeref: {
      Value l = sub(n.children[0]);
      if (!l.holds<LocationValue>()) throw RuntimeFault("deref of a non-location");
      return l.as<LocationValue>().cell->contents;
    }
    case NodeKind::kViewLiteral: {
      ViewValue v;
      v.names = n.names;
      for (const auto& c : n.children) v.values.push_back(sub(c));
      return Value{std::move(v)};
    }
    case NodeKind::kSequenceLiteral: {
      SequenceValue s;
      for (const auto& c : n.children) s.items.push_back(sub(c));
      if (!n.types.empty()) {
        s.element = n.types[0];
      } else if (!s.items.empty()) {
        s.element = type_of_value(s.items[0]);
      } else {
        throw RuntimeFault("empty sequence without an element type");
      }
      for (const auto& i : s.items) {
        if (type_of_value(i) != s.element) throw RuntimeFault("sequence elements differ in type");
      }
      return Value{std::move(s)};
    }
    case NodeKind::kIndex: {
      Value s = sub(n.children[0]);
      if (!s.holds<SequenceValue>()) throw RuntimeFault("indexing a non-sequence");
      const auto& items = s.as<SequenceValue>().items;
      auto i = std::get<std::int64_t>(n.literal);
      if (i < 1 || static_cast<std::size_t>(i) > items.size()) {
        throw RuntimeFault("index " + std::to_string(i) + " out of range 1.." +
                           std::to_string(items.size()));
      }
      return items[static_cast<std::size_t>(i - 1)];
    }
    case NodeKind::kProjection: {
      Value v = sub(n.children[0]);
      if (!v.holds<ViewValue>()) throw RuntimeFault("projecting '" + n.text + "' from a non-view");
      const auto& view = v.as<ViewValue>();
      for (size_t i = 0; i < view.names.size(); ++i) {
        if (view.names[i] == n.text) return view.values[i];
      }
      throw RuntimeFault("view has no field '" + n.text + "'");
    }
    case NodeKind::kApplication: {
      Value callee = sub(n.children[0]);
      std::vector<Value> args;
      for (size_t i = 1; i < n.children.size(); ++i) args.push_back(sub(n.children[i]));
      if (callee.holds<FunctionValue>()) return call(callee.as<FunctionValue>(), args, ctx);
      if (callee.holds<AbstractionValue>()) {
        auto g = instantiate(*callee.as<AbstractionValue>().closure, args, ctx.owner, ctx.thread);
        return Value{BehaviourValue{g}};
      }
      throw RuntimeFault("cannot apply " + summarize(callee));
    }
    case NodeKind::kIf: {
      Value c = sub(n.children[0]);
      if (!c.holds<bool>()) throw RuntimeFault("if condition is not a boolean");
      if (n.children.size() < 3) throw RuntimeFault("if expression without else");
      return sub(c.as<bool>() ? n.children[1] : n.children[2]);
    }
    case NodeKind::kAnyInject:
      return make_any(sub(n.children[0]));
    case NodeKind::kAnyProject: {
      Value a = sub(n.children[0]);
      if (!a.holds<AnyValue>()) throw RuntimeFault("project of a non-any value");
      const auto& any = a.as<AnyValue>();
      if (any.witness != n.types[0]) {
        throw RuntimeFault("projection failed: value has type " + to_string(any.witness) +
                           ", not " + to_string(n.types[0]));
      }
      return *any.inner;
    }
    case NodeKind::kAbstraction:
    case NodeKind::kFunction: {
      Node closed = ctx.env ? close_over(n, *ctx.env) : n;
      auto c = std::make_shared<Closure>();
      c->params = closed.names;
      c->param_types = closed.types;
      if (closed.is(NodeKind::kFunction)) {
        c->result = c->param_types.back();
        c->param_types.pop_back();
      }
      c->body = std::move(closed.children[0]);
      if (closed.is(NodeKind::kFunction)) return Value{FunctionValue{std::move(c)}};
      return Value{AbstractionValue{std::move(c)}};
    }
    case NodeKind::kReplicate:
    case NodeKind::kChoose:
    case NodeKind::kSequence:
    case NodeKind::kBody:
      return behaviour_literal(n, ctx);
    case NodeKind::kCompose:
      return eval_compose(n, ctx, depth);
    case NodeKind::kDecompose: {
      Value b = sub(n.children[0]);
      if (!b.holds<BehaviourValue>()) throw RuntimeFault("decompose of a non-behaviour");
      return decompose(b.as<BehaviourValue>().cell);
    }
    default:
      throw RuntimeFault(std::string("'") + std::string(kind_name(n.kind)) +
                         "' cannot be evaluated as an expression");
  }
}

Value Engine::eval_binop(const Node& n, const EvalContext& ctx, int depth) {
  auto sub = [&](const Node& c) { return eval(c, ctx, depth + 1); };
  const std::string& op = n.text;
  if (n.children.size() == 1) {
    Value v = sub(n.children[0]);
    if (op == "not") {
      if (!v.holds<bool>()) throw RuntimeFault("not of a non-boolean");
      return Value{!v.as<bool>()};
    }
    if (v.holds<std::int64_t>()) return Value{-v.as<std::int64_t>()};
    if (v.holds<double>()) return Value{-v.as<double>()};
    throw RuntimeFault("unary minus of a non-number");
  }
  if (op == "and" || op == "or") {
    Value a = sub(n.children[0]);
    if (!a.holds<bool>()) throw RuntimeFault(op + " of a non-boolean");
    if (op == "and" && !a.as<bool>()) return Value{false};
    if (op == "or" && a.as<bool>()) return Value{true};
    Value b = sub(n.children[1]);
    if (!b.holds<bool>()) throw RuntimeFault(op + " of a non-boolean");
    return b;
  }
  Value a = sub(n.children[0]);
  Value b = sub(n.children[1]);
  if (op == "+" || op == "-" || op == "*" || op == "/") {
    if (!numeric(a) || !numeric(b)) throw RuntimeFault("arithmetic on non-numbers");
    if (a.holds<std::int64_t>() && b.holds<std::int64_t>()) {
      // Wrap on overflow rather than invoke undefined behaviour.
      auto x = static_cast<std::uint64_t>(a.as<std::int64_t>());
      auto y = static_cast<std::uint64_t>(b.as<std::int64_t>());
      if (op == "+") return Value{static_cast<std::int64_t>(x + y)};
      if (op == "-") return Value{static_cast<std::int64_t>(x - y)};
      if (op == "*") return Value{static_cast<std::int64_t>(x * y)};
      if (b.as<std::int64_t>() == 0) throw RuntimeFault("integer division by zero");
      if (a.as<std::int64_t>() == std::numeric_limits<std::int64_t>::min() &&
          b.as<std::int64_t>() == -1) {
        return a;
      }
      return Value{a.as<std::int64_t>() / b.as<std::int64_t>()};
    }
    double x = as_real(a);
    double y = as_real(b);
    if (op == "+") return Value{x + y};
    if (op == "-") return Value{x - y};
    if (op == "*") return Value{x * y};
    return Value{x / y};
  }
  if (op == "<" || op == "<=" || op == ">" || op == ">=") {
    int cmp;
    if (numeric(a) && numeric(b)) {
      if (a.holds<std::int64_t>() && b.holds<std::int64_t>()) {
        auto x = a.as<std::int64_t>();
        auto y = b.as<std::int64_t>();
        cmp = x < y ? -1 : (x > y ? 1 : 0);
      } else {
        double x = as_real(a);
        double y = as_real(b);
        cmp = x < y ? -1 : (x > y ? 1 : 0);
      }
    } else if (a.holds<std::string>() && b.holds<std::string>()) {
      int c = a.as<std::string>().compare(b.as<std::string>());
      cmp = c < 0 ? -1 : (c > 0 ? 1 : 0);
    } else {
      throw RuntimeFault("cannot compare these values with " + op);
    }
    if (op == "<") return Value{cmp < 0};
    if (op == "<=") return Value{cmp <= 0};
    if (op == ">") return Value{cmp > 0};
    return Value{cmp >= 0};
  }
  if (op == "=" || op == "~=") {
    bool eq = (numeric(a) && numeric(b) && a.v.index() != b.v.index())
                  ? as_real(a) == as_real(b)
                  : value_equal(a, b);
    return Value{op == "=" ? eq : !eq};
  }
  if (op == "++") {
    if (a.holds<std::string>() && b.holds<std::string>()) {
      return Value{a.as<std::string>() + b.as<std::string>()};
    }
    if (a.holds<SequenceValue>() && b.holds<SequenceValue>()) {
      SequenceValue s = a.as<SequenceValue>();
      for (const auto& i : b.as<SequenceValue>().items) s.items.push_back(i);
      return Value{std::move(s)};
    }
    throw RuntimeFault("++ needs two strings or two sequences");
  }
  throw RuntimeFault("unknown operator " + op);
}

Value Engine::eval_compose(const Node& n, const EvalContext& ctx, int depth) {
  std::set<std::string> labels;
  for (const auto& l : n.names) {
    if (!l.empty() && !labels.insert(l).second) {
      throw RuntimeFault("duplicate composition label '" + l + "'");
    }
  }
  auto k = new_group(ctx.owner);
  k->composition = true;
  std::set<std::uint64_t> fresh;
  EvalContext inner{k, ctx.thread, ctx.env};
  for (size_t i = 0; i < n.children.size(); ++i) {
    size_t before = k->children.size();
    Value v = eval(n.children[i], inner, depth + 1);
    if (!v.holds<BehaviourValue>()) throw RuntimeFault("compose part is not a behaviour");
    auto b = v.as<BehaviourValue>().cell;
    if (b == k || b == root_) throw RuntimeFault("a composition cannot contain itself");
    if (k->children.size() > before && k->children.back() == b) {
      fresh.insert(b->id);
    } else {
      attach(b, k);
      b->suspended = false;
    }
    const std::string& label = i < n.names.size() ? n.names[i] : std::string();
    b->label = label.empty() ? std::nullopt : std::optional<std::string>(label);
  }
  for (const auto& u : n.unifications) {
    if (try_unify(*k, u, false)) continue;
    for (const auto& [label, name] : {std::pair(u.left_label, u.left_conn),
                                      std::pair(u.right_label, u.right_conn)}) {
      for (const auto& c : k->children) {
        if (c->label == label && !fresh.count(c->id) && !resolve_endpoint(*c, name)) {
          throw RuntimeFault("part '" + label + "' has no connection named '" + name + "'");
        }
      }
    }
    // Fresh parts declare their connections as they run.
    k->pending.push_back(u);
  }
  return Value{BehaviourValue{k}};
}

}  // namespace adl
