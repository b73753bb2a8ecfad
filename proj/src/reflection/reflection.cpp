#include "adl/reflection.hpp"

#include <map>

#include "adl/serialize.hpp"
#include "runtime/terms.hpp"

namespace adl {

ReflectError::ReflectError(std::vector<TypeError> errors)
    : Error(errors.empty() ? std::string("reflect failed")
                           : "type error: " + errors.front().message +
                                 (errors.size() > 1
                                      ? " (and " + std::to_string(errors.size() - 1) + " more)"
                                      : std::string())),
      errors_(std::move(errors)) {}

namespace {

class Reifier {
 public:
  explicit Reifier(Engine& engine) : engine_(engine) {}

  Node value(const Value& v) {
    return std::visit(
        [&](const auto& x) -> Node {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, std::int64_t> || std::is_same_v<T, double> ||
                        std::is_same_v<T, bool> || std::is_same_v<T, std::string>) {
            return make_literal(Scalar{x});
          } else if constexpr (std::is_same_v<T, AnyValue>) {
            Node n(NodeKind::kAnyInject);
            n.children.push_back(value(*x.inner));
            return n;
          } else if constexpr (std::is_same_v<T, SequenceValue>) {
            Node n(NodeKind::kSequenceLiteral);
            n.types.push_back(x.element);
            for (const auto& item : x.items) n.children.push_back(value(item));
            return n;
          } else if constexpr (std::is_same_v<T, ViewValue>) {
            Node n(NodeKind::kViewLiteral);
            n.names = x.names;
            for (const auto& item : x.values) n.children.push_back(value(item));
            return n;
          } else if constexpr (std::is_same_v<T, FunctionValue> ||
                               std::is_same_v<T, AbstractionValue>) {
            const Closure& c = *x.closure;
            if (!c.native.empty()) return link(v, x.closure.get(), c.native);
            Node n(std::is_same_v<T, FunctionValue> ? NodeKind::kFunction
                                                    : NodeKind::kAbstraction);
            n.names = c.params;
            n.types = c.param_types;
            if (c.result) n.types.push_back(*c.result);
            n.children.push_back(c.body);
            return n;
          } else {
            return link(v, x.cell.get(), "");
          }
        },
        v.v);
  }

  // Parts of a suspended composition cannot step, so `frozen` carries an
  // ancestor's suspension down.
  Node behaviour(const BehaviourCell& b, bool frozen = false) {
    if (b.is_thread) return b.term;
    frozen = frozen || state_of(b) != BehaviourState::kRunning;
    if (!frozen) {
      throw Error("behaviour " + std::to_string(b.id) +
                  " is running; quiesce and decompose it before reifying");
    }
    std::vector<const BehaviourCell*> parts;
    for (const auto& c : b.children) {
      if (c->is_thread && c->terminated) continue;
      if (!c->is_thread && c->shell) continue;
      parts.push_back(c.get());
    }
    if (!b.composition) {
      Node term = parts.size() == 1 ? behaviour(*parts.front(), frozen) : Node(NodeKind::kSequence);
      if (parts.size() > 1) {
        term = Node(NodeKind::kCompose);
        for (const BehaviourCell* p : parts) {
          term.children.push_back(as_block(behaviour(*p, frozen)));
          term.names.push_back(p->label.value_or(""));
        }
      }
      return with_endpoints(b, std::move(term));
    }
    Node n(NodeKind::kCompose);
    for (const BehaviourCell* p : parts) {
      n.children.push_back(as_block(behaviour(*p, frozen)));
      n.names.push_back(p->label.value_or(""));
    }
    return n;
  }

 private:
  static Node as_block(Node term) {
    if (term.is(NodeKind::kSequence) || term.is(NodeKind::kReplicate) || term.is(NodeKind::kChoose) ||
        term.is(NodeKind::kCompose)) {
      return term;
    }
    Node block(NodeKind::kSequence);
    block.children.push_back(std::move(term));
    return block;
  }

  // Endpoints a part was composed by are part of its environment even when
  // the remaining term no longer mentions them, so they lead the block as
  // declarations of links.
  Node with_endpoints(const BehaviourCell& b, Node term) {
    if (b.endpoints.empty()) return term;
    Node block(NodeKind::kSequence);
    for (const auto& [name, conn] : b.endpoints) {
      Node decl(NodeKind::kValueDecl);
      decl.text = name;
      decl.children.push_back(value(conn));
      decl.children.back().hint = name;
      block.children.push_back(std::move(decl));
    }
    if (term.is(NodeKind::kSequence)) {
      for (auto& c : term.children) block.children.push_back(std::move(c));
    } else {
      block.children.push_back(std::move(term));
    }
    return block;
  }

  Node link(const Value& v, const void* identity, const std::string& hint) {
    if (!index_built_) {
      for (const auto& [id, entry] : engine_.store().entries()) {
        if (!entry) continue;
        if (const void* key = identity_of(*entry)) index_.emplace(key, id);
      }
      index_built_ = true;
    }
    auto it = index_.find(identity);
    if (it == index_.end()) it = index_.emplace(identity, engine_.store().bind(v)).first;
    return make_link(it->second, hint.empty() ? std::nullopt : std::optional<std::string>(hint));
  }

  static const void* identity_of(const Value& v) {
    if (v.holds<LocationValue>()) return v.as<LocationValue>().cell.get();
    if (v.holds<ConnectionValue>()) return v.as<ConnectionValue>().cell.get();
    if (v.holds<BehaviourValue>()) return v.as<BehaviourValue>().cell.get();
    if (v.holds<FunctionValue>()) return v.as<FunctionValue>().closure.get();
    if (v.holds<AbstractionValue>()) return v.as<AbstractionValue>().closure.get();
    return nullptr;
  }

  Engine& engine_;
  bool index_built_ = false;
  std::map<const void*, ValueId> index_;
};

bool statement_shaped(const Node& n) {
  switch (n.kind) {
    case NodeKind::kCompose:
    case NodeKind::kApplication:
    case NodeKind::kLink:
    case NodeKind::kName:
    case NodeKind::kIndex:
    case NodeKind::kProjection:
    case NodeKind::kDeref:
    case NodeKind::kAnyProject:
      return false;
    default:
      return true;
  }
}

Node* at_path(Node& root, const std::vector<std::size_t>& path) {
  Node* n = &root;
  for (std::size_t i : path) {
    if (i >= n->children.size()) {
      throw Error("bad edit path: node has " + std::to_string(n->children.size()) +
                  " children, index " + std::to_string(i) + " requested");
    }
    n = &n->children[i];
  }
  return n;
}

Node parse_replacement(const std::string& text, const ValueStore& store,
                       const TypeAliases* aliases) {
  ParseResult e = parse_expression(text, store, aliases);
  if (e.ok()) return std::move(*e.tree);
  TypeAliases local = aliases ? *aliases : TypeAliases{};
  ParseResult p = parse(text, store, &local);
  if (!p.ok()) throw ParseFailure(std::move(p.errors));
  Node body = std::move(*p.tree);
  if (body.children.size() == 1) return std::move(body.children.front());
  body.kind = NodeKind::kSequence;
  return body;
}

}  // namespace

Representation reify(const Entity& e, Engine& engine) {
  Reifier r(engine);
  if (e.holds<BehaviourValue>()) return r.behaviour(*e.as<BehaviourValue>().cell);
  return r.value(e);
}

Entity reflect(const Representation& r, Engine& engine) {
  const Node* tree = &r;
  if (tree->is(NodeKind::kBody) && tree->children.size() == 1 &&
      !tree->children.front().is(NodeKind::kValueDecl)) {
    tree = &tree->children.front();
  }
  CheckResult checked = typecheck(*tree, TypeEnv{}, engine.store());
  if (!checked.ok()) throw ReflectError(std::move(checked.errors));

  if (*checked.type == Type::Behaviour() && statement_shaped(*tree)) {
    std::vector<std::pair<std::string, Value>> endpoints;
    Node body = detail::split_endpoints(*tree, engine.store(), endpoints);
    auto g = engine.new_group(nullptr);
    g->suspended = true;
    g->endpoints = std::move(endpoints);
    engine.spawn(std::move(body), g);
    return Value{BehaviourValue{g}};
  }
  Value v = engine.evaluate(*tree, EvalContext{nullptr, nullptr, nullptr});
  if (v.holds<BehaviourValue>() &&
      (tree->is(NodeKind::kCompose) || tree->is(NodeKind::kApplication))) {
    v.as<BehaviourValue>().cell->suspended = true;
  }
  return v;
}

Entity execute(const Entity& e, Engine& engine) {
  if (e.holds<BehaviourValue>()) {
    auto b = e.as<BehaviourValue>().cell;
    if (b->shell) throw Error("behaviour " + std::to_string(b->id) + " was decomposed");
    engine.resume(b);
    return e;
  }
  if (e.holds<FunctionValue>()) {
    const auto& f = e.as<FunctionValue>();
    if (!f.closure->params.empty()) throw Error("execute needs a function of no arguments");
    return engine.call(f, {}, EvalContext{engine.root(), nullptr, nullptr});
  }
  if (e.holds<AbstractionValue>()) {
    const auto& a = e.as<AbstractionValue>();
    if (!a.closure->params.empty()) throw Error("execute needs an abstraction of no arguments");
    return Value{BehaviourValue{engine.instantiate(*a.closure, {}, engine.root())}};
  }
  throw Error("cannot execute a value of type " + to_string(type_of_value(e)));
}

Representation transform(const Representation& r, const Edit& edit, const ValueStore& store,
                         const TypeAliases* aliases) {
  Node out = r;
  if (const auto* sub = std::get_if<ReplaceSubtree>(&edit)) {
    *at_path(out, sub->path) = sub->subtree;
  } else if (const auto* text = std::get_if<ReplaceWithText>(&edit)) {
    Node* target = at_path(out, text->path);
    *target = parse_replacement(text->text, store, aliases);
  } else {
    const auto& e = std::get<RelinkValue>(edit);
    if (!store.contains(e.to)) throw Error("relink target @[" + std::to_string(raw(e.to)) + "] is unknown");
    std::function<void(Node&)> relink = [&](Node& n) {
      if (n.is(NodeKind::kLink) && n.link == e.from) n.link = e.to;
      for (auto& c : n.children) relink(c);
    };
    relink(out);
  }
  return out;
}

Edit edit_from_json(const nlohmann::json& j, const ValueStore& store) {
  try {
    const std::string op = j.at("op").get<std::string>();
    if (op == "replace_text") {
      return ReplaceWithText{j.at("path").get<std::vector<std::size_t>>(),
                             j.at("text").get<std::string>()};
    }
    if (op == "replace_subtree") {
      return ReplaceSubtree{j.at("path").get<std::vector<std::size_t>>(),
                            node_from_json(j.at("hypercode"), store)};
    }
    if (op == "relink") {
      return RelinkValue{ValueId{j.at("from").get<std::uint64_t>()},
                         ValueId{j.at("to").get<std::uint64_t>()}};
    }
    throw Error("unknown edit op '" + op + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed edit: ") + e.what());
  }
}

}  // namespace adl
