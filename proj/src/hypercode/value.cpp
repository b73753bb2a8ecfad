#include "adl/value.hpp"

#include <sstream>

#include "adl/error.hpp"
#include "adl/typecheck.hpp"

namespace adl {

Value make_any(Value inner) {
  Type witness = type_of_value(inner);
  return Value{AnyValue{std::move(witness),
                        std::make_shared<const Value>(std::move(inner))}};
}

std::shared_ptr<ConnectionCell> find_class(std::shared_ptr<ConnectionCell> c) {
  auto root = c;
  while (root->parent) root = root->parent;
  while (c->parent && c->parent != root) {
    auto next = c->parent;
    c->parent = root;
    c = next;
  }
  return root;
}

bool value_equal(const Value& a, const Value& b) {
  if (a.v.index() != b.v.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.v);
        if constexpr (std::is_same_v<T, std::int64_t> ||
                      std::is_same_v<T, double> || std::is_same_v<T, bool> ||
                      std::is_same_v<T, std::string>) {
          return x == y;
        } else if constexpr (std::is_same_v<T, AnyValue>) {
          return x.witness == y.witness && value_equal(*x.inner, *y.inner);
        } else if constexpr (std::is_same_v<T, SequenceValue>) {
          if (x.element != y.element || x.items.size() != y.items.size()) {
            return false;
          }
          for (size_t i = 0; i < x.items.size(); ++i) {
            if (!value_equal(x.items[i], y.items[i])) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, ViewValue>) {
          if (x.names != y.names) return false;
          for (size_t i = 0; i < x.values.size(); ++i) {
            if (!value_equal(x.values[i], y.values[i])) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, ConnectionValue>) {
          return find_class(x.cell) == find_class(y.cell);
        } else if constexpr (std::is_same_v<T, FunctionValue> ||
                             std::is_same_v<T, AbstractionValue>) {
          return x.closure == y.closure;
        } else {
          return x.cell == y.cell;
        }
      },
      a.v);
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string summarize(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          std::ostringstream os;
          os.precision(17);
          os << x;
          return os.str();
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return quote(x);
        } else if constexpr (std::is_same_v<T, AnyValue>) {
          return "any(" + summarize(*x.inner) + ")";
        } else if constexpr (std::is_same_v<T, SequenceValue>) {
          std::string out = "sequence{";
          for (size_t i = 0; i < x.items.size(); ++i) {
            if (i) out += ", ";
            out += summarize(x.items[i]);
          }
          return out + "}";
        } else if constexpr (std::is_same_v<T, ViewValue>) {
          std::string out = "view{";
          for (size_t i = 0; i < x.names.size(); ++i) {
            if (i) out += ", ";
            out += x.names[i] + " = " + summarize(x.values[i]);
          }
          return out + "}";
        } else if constexpr (std::is_same_v<T, LocationValue>) {
          return "location#" + std::to_string(x.cell->id);
        } else if constexpr (std::is_same_v<T, ConnectionValue>) {
          return "connection#" + std::to_string(find_class(x.cell)->id);
        } else if constexpr (std::is_same_v<T, FunctionValue>) {
          return x.closure->native.empty() ? "function"
                                           : "function " + x.closure->native;
        } else if constexpr (std::is_same_v<T, AbstractionValue>) {
          return "abstraction";
        } else {
          return "behaviour";
        }
      },
      v.v);
}

BehaviourState state_of(const BehaviourCell& b) {
  if (b.is_thread) {
    return b.terminated ? BehaviourState::kTerminated : BehaviourState::kRunning;
  }
  if (b.shell) return BehaviourState::kTerminated;
  bool all_done = true;
  for (const auto& c : b.children) {
    if (state_of(*c) != BehaviourState::kTerminated) all_done = false;
  }
  if (all_done) return BehaviourState::kTerminated;
  return b.suspended ? BehaviourState::kSuspended : BehaviourState::kRunning;
}

std::string_view state_name(BehaviourState s) {
  switch (s) {
    case BehaviourState::kRunning:
      return "running";
    case BehaviourState::kSuspended:
      return "suspended";
    case BehaviourState::kTerminated:
      return "terminated";
  }
  return "?";
}

ValueId ValueStore::bind(Value v) {
  ValueId id{next_++};
  entries_.emplace(id, std::move(v));
  return id;
}

ValueId ValueStore::reserve() {
  ValueId id{next_++};
  entries_.emplace(id, std::nullopt);
  return id;
}

void ValueStore::fill(ValueId id, Value v) {
  auto it = entries_.find(id);
  if (it == entries_.end() || it->second) {
    throw Error("value id " + std::to_string(raw(id)) + " was not reserved");
  }
  it->second = std::move(v);
}

const Value& ValueStore::lookup(ValueId id) const {
  auto it = entries_.find(id);
  if (it == entries_.end() || !it->second) {
    throw Error("unknown value id " + std::to_string(raw(id)));
  }
  return *it->second;
}

bool ValueStore::contains(ValueId id) const {
  auto it = entries_.find(id);
  return it != entries_.end() && it->second.has_value();
}

Node bind_link(ValueStore& store, Value v, std::string hint) {
  return make_link(store.bind(std::move(v)), std::move(hint));
}

}  // namespace adl
