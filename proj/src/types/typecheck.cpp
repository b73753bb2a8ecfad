#include "adl/typecheck.hpp"

#include <set>

namespace adl {

TypeEnv TypeEnv::bind(const std::string& name, Type type) const {
  TypeEnv out;
  out.head_ = std::make_shared<const Frame>(Frame{name, std::move(type), head_});
  return out;
}

const Type* TypeEnv::lookup(const std::string& name) const {
  for (const Frame* f = head_.get(); f; f = f->next.get()) {
    if (f->name == name) return &f->type;
  }
  return nullptr;
}

Type decomposed_element_type() {
  Type endpoint = Type::View({{"name", Type::String()}, {"conn", Type::Any()}});
  return Type::View({{"label", Type::String()},
                     {"bhvr", Type::Behaviour()},
                     {"connections", Type::SequenceOf(endpoint)}});
}

Type type_of_value(const Value& v) {
  return std::visit(
      [](const auto& x) -> Type {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::int64_t>) {
          return Type::Integer();
        } else if constexpr (std::is_same_v<T, double>) {
          return Type::Real();
        } else if constexpr (std::is_same_v<T, bool>) {
          return Type::Boolean();
        } else if constexpr (std::is_same_v<T, std::string>) {
          return Type::String();
        } else if constexpr (std::is_same_v<T, AnyValue>) {
          return Type::Any();
        } else if constexpr (std::is_same_v<T, LocationValue>) {
          return Type::LocationOf(x.cell->content);
        } else if constexpr (std::is_same_v<T, SequenceValue>) {
          return Type::SequenceOf(x.element);
        } else if constexpr (std::is_same_v<T, ViewValue>) {
          std::vector<std::pair<std::string, Type>> fields;
          for (size_t i = 0; i < x.names.size(); ++i) {
            fields.emplace_back(x.names[i], type_of_value(x.values[i]));
          }
          return Type::View(std::move(fields));
        } else if constexpr (std::is_same_v<T, FunctionValue>) {
          return Type::Function(x.closure->param_types, *x.closure->result);
        } else if constexpr (std::is_same_v<T, ConnectionValue>) {
          return Type::Connection(x.cell->payload);
        } else if constexpr (std::is_same_v<T, AbstractionValue>) {
          return Type::Abstraction(x.closure->param_types);
        } else {
          return Type::Behaviour();
        }
      },
      v.v);
}

namespace {

bool numeric(const Type& t) { return t.is(TypeKind::kInteger) || t.is(TypeKind::kReal); }

class Checker {
 public:
  explicit Checker(const ValueStore& store) : store_(store) {}

  std::vector<TypeError> errors;

  std::optional<Type> top(const Node& n, const TypeEnv& env) {
    if (is_statement_only(n) || n.is(NodeKind::kBody)) {
      TypeEnv scope = env;
      statement(n, scope);
      return Type::Behaviour();
    }
    return expression(n, env);
  }

 private:
  static bool is_statement_only(const Node& n) {
    switch (n.kind) {
      case NodeKind::kValueDecl:
      case NodeKind::kSend:
      case NodeKind::kReceive:
      case NodeKind::kAssign:
      case NodeKind::kWhile:
      case NodeKind::kFree:
        return true;
      default:
        return false;
    }
  }

  void error(const Node& at, std::string message, std::optional<Type> expected = {},
             std::optional<Type> found = {}) {
    errors.push_back(TypeError{at.span, std::move(message), std::move(expected),
                               std::move(found)});
  }

  void mismatch(const Node& at, const std::string& what, const Type& expected,
                const Type& found) {
    error(at,
          what + ": expected " + to_string(expected) + ", found " + to_string(found),
          expected, found);
  }

  // ---- statements ----

  // Checks a list of statements in a fresh block scope of `env`; returns the
  // bindings exported by `free`.
  std::vector<std::pair<std::string, Type>> block(const std::vector<Node>& stmts,
                                                  TypeEnv env) {
    std::vector<std::string> freed;
    for (const auto& s : stmts) {
      statement(s, env);
      if (s.is(NodeKind::kFree)) {
        for (const auto& name : s.names) freed.push_back(name);
      }
    }
    std::vector<std::pair<std::string, Type>> exports;
    for (const auto& name : freed) {
      if (const Type* t = env.lookup(name)) exports.emplace_back(name, *t);
    }
    return exports;
  }

  static std::optional<Type> literal_type(const Node& rhs) {
    if (rhs.is(NodeKind::kAbstraction)) return Type::Abstraction(rhs.types);
    if (rhs.is(NodeKind::kFunction)) {
      std::vector<Type> params(rhs.types.begin(), rhs.types.end() - 1);
      return Type::Function(std::move(params), rhs.types.back());
    }
    return std::nullopt;
  }

  void statement(const Node& n, TypeEnv& env) {
    switch (n.kind) {
      case NodeKind::kValueDecl: {
        const Node& rhs = n.children[0];
        if (auto rec = literal_type(rhs)) {
          env = env.bind(n.text, *rec);
          expression(rhs, env);
          return;
        }
        if (auto t = expression(rhs, env)) {
          env = env.bind(n.text, *t);
        } else {
          poisoned_.insert(n.text);
        }
        return;
      }
      case NodeKind::kSend: {
        auto conn = connection_of(n.children[0], env);
        std::vector<std::optional<Type>> payload;
        for (size_t i = 1; i < n.children.size(); ++i) {
          payload.push_back(expression(n.children[i], env));
        }
        if (!conn) return;
        if (payload.size() != conn->args.size()) {
          error(n, "send arity mismatch: connection carries " +
                       std::to_string(conn->args.size()) + " value(s), sending " +
                       std::to_string(payload.size()));
          return;
        }
        for (size_t i = 0; i < payload.size(); ++i) {
          if (payload[i] && *payload[i] != conn->args[i]) {
            mismatch(n.children[i + 1], "send payload", conn->args[i], *payload[i]);
          }
        }
        return;
      }
      case NodeKind::kReceive: {
        auto conn = connection_of(n.children[0], env);
        if (conn) {
          if (n.names.size() != conn->args.size()) {
            error(n, "receive arity mismatch: connection carries " +
                         std::to_string(conn->args.size()) + " value(s), binding " +
                         std::to_string(n.names.size()));
          } else {
            for (size_t i = 0; i < n.names.size(); ++i) {
              if (n.types[i] != conn->args[i]) {
                mismatch(n, "receive binder '" + n.names[i] + "'", conn->args[i],
                         n.types[i]);
              }
            }
          }
        }
        for (size_t i = 0; i < n.names.size(); ++i) {
          env = env.bind(n.names[i], n.types[i]);
        }
        return;
      }
      case NodeKind::kReplicate:
        for (const auto& c : n.children) {
          TypeEnv scope = env;
          statement(c, scope);
        }
        return;
      case NodeKind::kChoose:
        for (const auto& c : n.children) {
          TypeEnv scope = env;
          statement(c, scope);
        }
        return;
      case NodeKind::kSequence:
      case NodeKind::kBody:
        for (auto& [name, type] : block(n.children, env)) {
          env = env.bind(name, type);
        }
        return;
      case NodeKind::kIf: {
        condition(n.children[0], env);
        for (size_t i = 1; i < n.children.size(); ++i) {
          TypeEnv scope = env;
          statement(n.children[i], scope);
        }
        return;
      }
      case NodeKind::kWhile: {
        condition(n.children[0], env);
        TypeEnv scope = env;
        statement(n.children[1], scope);
        return;
      }
      case NodeKind::kFree:
        for (const auto& name : n.names) {
          if (!env.lookup(name)) error(n, "free of unbound name '" + name + "'");
        }
        return;
      case NodeKind::kAssign: {
        auto target = expression(n.children[0], env);
        auto value = expression(n.children[1], env);
        if (!target || !value) return;
        if (!target->is(TypeKind::kLocation)) {
          error(n.children[0], "assignment target is not a location", std::nullopt,
                *target);
          return;
        }
        if (target->element() != *value) {
          mismatch(n, "assignment type mismatch", target->element(), *value);
        }
        return;
      }
      default:
        expression(n, env);
        return;
    }
  }

  void condition(const Node& n, const TypeEnv& env) {
    if (auto t = expression(n, env); t && !t->is(TypeKind::kBoolean)) {
      mismatch(n, "condition", Type::Boolean(), *t);
    }
  }

  std::optional<Type> connection_of(const Node& n, const TypeEnv& env) {
    auto t = expression(n, env);
    if (!t) return std::nullopt;
    if (!t->is(TypeKind::kConnection)) {
      error(n, "expected a connection, found " + to_string(*t), std::nullopt, *t);
      return std::nullopt;
    }
    return t;
  }

  // ---- expressions ----

  std::optional<Type> expression(const Node& n, const TypeEnv& env) {
    switch (n.kind) {
      case NodeKind::kLiteral:
        if (std::holds_alternative<std::int64_t>(n.literal)) return Type::Integer();
        if (std::holds_alternative<double>(n.literal)) return Type::Real();
        if (std::holds_alternative<bool>(n.literal)) return Type::Boolean();
        return Type::String();
      case NodeKind::kName: {
        if (const Type* t = env.lookup(n.text)) return *t;
        if (!poisoned_.count(n.text)) error(n, "unbound name '" + n.text + "'");
        return std::nullopt;
      }
      case NodeKind::kLink:
        if (!store_.contains(n.link)) {
          error(n, "unresolvable link @[" + std::to_string(raw(n.link)) + "]");
          return std::nullopt;
        }
        return type_of_value(store_.lookup(n.link));
      case NodeKind::kBinop:
        return binop(n, env);
      case NodeKind::kConnectionNew:
        return Type::Connection(n.types);
      case NodeKind::kLocationNew: {
        auto t = expression(n.children[0], env);
        if (!t) return std::nullopt;
        return Type::LocationOf(*t);
      }
      case NodeKind::kDeref: {
        auto t = expression(n.children[0], env);
        if (!t) return std::nullopt;
        if (!t->is(TypeKind::kLocation)) {
          error(n, "deref of a non-location " + to_string(*t), std::nullopt, *t);
          return std::nullopt;
        }
        return t->element();
      }
      case NodeKind::kViewLiteral: {
        std::vector<std::pair<std::string, Type>> fields;
        std::set<std::string> seen;
        bool ok = true;
        for (size_t i = 0; i < n.names.size(); ++i) {
          if (!seen.insert(n.names[i]).second) {
            error(n, "duplicate view field '" + n.names[i] + "'");
            ok = false;
          }
          auto t = expression(n.children[i], env);
          if (!t) {
            ok = false;
            continue;
          }
          fields.emplace_back(n.names[i], *t);
        }
        if (!ok) return std::nullopt;
        return Type::View(std::move(fields));
      }
      case NodeKind::kSequenceLiteral: {
        std::optional<Type> element;
        if (!n.types.empty()) element = n.types[0];
        bool ok = true;
        for (const auto& c : n.children) {
          auto t = expression(c, env);
          if (!t) {
            ok = false;
            continue;
          }
          if (!element) {
            element = *t;
          } else if (*element != *t) {
            mismatch(c, "sequence element", *element, *t);
            ok = false;
          }
        }
        if (!element) {
          error(n, "cannot determine the element type of an empty sequence; "
                   "write sequence[T]{ }");
          return std::nullopt;
        }
        if (!ok) return std::nullopt;
        return Type::SequenceOf(*element);
      }
      case NodeKind::kIndex: {
        auto t = expression(n.children[0], env);
        if (!t) return std::nullopt;
        if (!t->is(TypeKind::kSequence)) {
          error(n, "indexing a non-sequence " + to_string(*t), std::nullopt, *t);
          return std::nullopt;
        }
        if (std::get<std::int64_t>(n.literal) < 1) {
          error(n, "sequence indices start at 1");
        }
        return t->element();
      }
      case NodeKind::kProjection: {
        auto t = expression(n.children[0], env);
        if (!t) return std::nullopt;
        if (!t->is(TypeKind::kView)) {
          error(n, "projecting field '" + n.text + "' from non-view " + to_string(*t),
                std::nullopt, *t);
          return std::nullopt;
        }
        int idx = t->field_index(n.text);
        if (idx < 0) {
          error(n, "view " + to_string(*t) + " has no field '" + n.text + "'",
                std::nullopt, *t);
          return std::nullopt;
        }
        return t->args[idx];
      }
      case NodeKind::kApplication:
        return application(n, env);
      case NodeKind::kIf: {
        condition(n.children[0], env);
        if (n.children.size() < 3) {
          error(n, "if expression needs an else branch");
          return std::nullopt;
        }
        auto a = expression(n.children[1], env);
        auto b = expression(n.children[2], env);
        if (!a || !b) return std::nullopt;
        if (*a != *b) {
          mismatch(n.children[2], "if branches differ", *a, *b);
          return std::nullopt;
        }
        return a;
      }
      case NodeKind::kAnyInject:
        if (!expression(n.children[0], env)) return std::nullopt;
        return Type::Any();
      case NodeKind::kAnyProject: {
        auto t = expression(n.children[0], env);
        if (t && !t->is(TypeKind::kAny)) {
          mismatch(n.children[0], "project operand", Type::Any(), *t);
        }
        return n.types[0];
      }
      case NodeKind::kAbstraction: {
        TypeEnv scope = env;
        for (size_t i = 0; i < n.names.size(); ++i) scope = scope.bind(n.names[i], n.types[i]);
        statement(n.children[0], scope);
        return Type::Abstraction(n.types);
      }
      case NodeKind::kFunction: {
        TypeEnv scope = env;
        for (size_t i = 0; i < n.names.size(); ++i) scope = scope.bind(n.names[i], n.types[i]);
        const Type& result = n.types.back();
        if (auto t = expression(n.children[0], scope); t && *t != result) {
          mismatch(n.children[0], "function result", result, *t);
        }
        std::vector<Type> params(n.types.begin(), n.types.end() - 1);
        return Type::Function(std::move(params), result);
      }
      case NodeKind::kReplicate:
      case NodeKind::kChoose:
      case NodeKind::kSequence: {
        TypeEnv scope = env;
        statement(n, scope);
        return Type::Behaviour();
      }
      case NodeKind::kCompose:
        return compose(n, env);
      case NodeKind::kDecompose: {
        auto t = expression(n.children[0], env);
        if (t && !t->is(TypeKind::kBehaviour)) {
          mismatch(n.children[0], "decompose operand", Type::Behaviour(), *t);
        }
        return Type::SequenceOf(decomposed_element_type());
      }
      default:
        error(n, std::string("'") + std::string(kind_name(n.kind)) +
                     "' is a statement and cannot be used as an expression");
        return std::nullopt;
    }
  }

  std::optional<Type> application(const Node& n, const TypeEnv& env) {
    auto callee = expression(n.children[0], env);
    std::vector<std::optional<Type>> args;
    for (size_t i = 1; i < n.children.size(); ++i) {
      args.push_back(expression(n.children[i], env));
    }
    if (!callee) return std::nullopt;
    if (!callee->is(TypeKind::kFunction) && !callee->is(TypeKind::kAbstraction)) {
      error(n.children[0], "cannot apply a value of type " + to_string(*callee),
            std::nullopt, *callee);
      return std::nullopt;
    }
    auto params = callee->params();
    if (params.size() != args.size()) {
      error(n, "arity mismatch: expected " + std::to_string(params.size()) +
                   " argument(s), found " + std::to_string(args.size()));
      return std::nullopt;
    }
    for (size_t i = 0; i < args.size(); ++i) {
      if (args[i] && *args[i] != params[i]) {
        mismatch(n.children[i + 1], "argument " + std::to_string(i + 1), params[i],
                 *args[i]);
      }
    }
    if (callee->is(TypeKind::kFunction)) return callee->result();
    return Type::Behaviour();
  }

  std::optional<Type> compose(const Node& n, const TypeEnv& env) {
    std::set<std::string> labels;
    for (size_t i = 0; i < n.children.size(); ++i) {
      auto t = expression(n.children[i], env);
      if (t && !t->is(TypeKind::kBehaviour)) {
        mismatch(n.children[i], "compose part", Type::Behaviour(), *t);
      }
      const std::string& label = n.names[i];
      if (!label.empty() && !labels.insert(label).second) {
        error(n.children[i], "duplicate composition label '" + label + "'");
      }
    }
    for (const auto& u : n.unifications) {
      for (const auto* l : {&u.left_label, &u.right_label}) {
        if (!labels.count(*l)) error(n, "unknown label '" + *l + "' in where clause");
      }
    }
    return Type::Behaviour();
  }

  std::optional<Type> binop(const Node& n, const TypeEnv& env) {
    const std::string& op = n.text;
    if (n.children.size() == 1) {
      auto t = expression(n.children[0], env);
      if (!t) return std::nullopt;
      if (op == "not") {
        if (!t->is(TypeKind::kBoolean)) mismatch(n, "operand of not", Type::Boolean(), *t);
        return Type::Boolean();
      }
      if (!numeric(*t)) {
        error(n, "unary minus needs a number, found " + to_string(*t));
        return std::nullopt;
      }
      return t;
    }
    auto a = expression(n.children[0], env);
    auto b = expression(n.children[1], env);
    if (!a || !b) return std::nullopt;
    auto bad = [&]() -> std::optional<Type> {
      error(n, "operator " + op + " is not defined for " + to_string(*a) + " and " +
                   to_string(*b));
      return std::nullopt;
    };
    if (op == "+" || op == "-" || op == "*" || op == "/") {
      if (!numeric(*a) || !numeric(*b)) return bad();
      if (a->is(TypeKind::kInteger) && b->is(TypeKind::kInteger)) return Type::Integer();
      return Type::Real();
    }
    if (op == "<" || op == "<=" || op == ">" || op == ">=") {
      bool ok = (numeric(*a) && numeric(*b)) ||
                (a->is(TypeKind::kString) && b->is(TypeKind::kString));
      if (!ok) return bad();
      return Type::Boolean();
    }
    if (op == "=" || op == "~=") {
      if (*a != *b && !(numeric(*a) && numeric(*b))) return bad();
      return Type::Boolean();
    }
    if (op == "and" || op == "or") {
      if (!a->is(TypeKind::kBoolean) || !b->is(TypeKind::kBoolean)) return bad();
      return Type::Boolean();
    }
    if (op == "++") {
      if (a->is(TypeKind::kString) && b->is(TypeKind::kString)) return Type::String();
      if (a->is(TypeKind::kSequence) && *a == *b) return a;
      return bad();
    }
    return bad();
  }

  const ValueStore& store_;
  std::set<std::string> poisoned_;
};

}  // namespace

CheckResult typecheck(const Node& h, const TypeEnv& env, const ValueStore& store) {
  Checker checker(store);
  CheckResult result;
  auto t = checker.top(h, env);
  result.errors = std::move(checker.errors);
  if (result.errors.empty()) result.type = t;
  return result;
}

}  // namespace adl
