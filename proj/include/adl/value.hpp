#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "adl/hypercode.hpp"
#include "adl/type.hpp"

namespace adl {

struct Value;
struct LocationCell;
struct ConnectionCell;
struct BehaviourCell;

// Closed code shared by function and abstraction values. Free names of the
// body have already been replaced by links, so no environment is carried.
struct Closure {
  std::vector<std::string> params;
  std::vector<Type> param_types;
  std::optional<Type> result;  // functions only
  Node body;
  std::string native;  // non-empty for host-provided functions
};

struct AnyValue {
  Type witness;
  std::shared_ptr<const Value> inner;
};

struct SequenceValue {
  Type element;
  std::vector<Value> items;
};

struct ViewValue {
  std::vector<std::string> names;
  std::vector<Value> values;
};

struct FunctionValue {
  std::shared_ptr<const Closure> closure;
};

struct AbstractionValue {
  std::shared_ptr<const Closure> closure;
};

struct LocationValue {
  std::shared_ptr<LocationCell> cell;
};

struct ConnectionValue {
  std::shared_ptr<ConnectionCell> cell;
};

struct BehaviourValue {
  std::shared_ptr<BehaviourCell> cell;
};

struct Value {
  std::variant<std::int64_t, double, bool, std::string, AnyValue, LocationValue,
               SequenceValue, ViewValue, FunctionValue, ConnectionValue,
               AbstractionValue, BehaviourValue>
      v;

  template <typename T>
  bool holds() const {
    return std::holds_alternative<T>(v);
  }
  template <typename T>
  const T& as() const {
    return std::get<T>(v);
  }
};

Value make_any(Value inner);

// Equality used by tests and by `=`: scalars and immutable aggregates by
// content, cells (location, connection, behaviour) and closures by identity.
bool value_equal(const Value& a, const Value& b);

// Short human-readable form used in traces and the REPL.
std::string summarize(const Value& v);

struct LocationCell {
  std::uint64_t id = 0;
  Type content;
  Value contents;
};

// A channel identity. `parent` forms the union-find forest; the class
// representative is the root reached through parents.
struct ConnectionCell {
  std::uint64_t id = 0;
  std::vector<Type> payload;
  std::shared_ptr<ConnectionCell> parent;
};

std::shared_ptr<ConnectionCell> find_class(std::shared_ptr<ConnectionCell> c);

// A behaviour is either a thread (a continuation term) or a group of
// behaviours executing in parallel. Behaviour values always denote groups;
// threads are internal to them.
struct BehaviourCell {
  std::uint64_t id = 0;
  bool is_thread = false;
  std::optional<std::string> label;
  std::weak_ptr<BehaviourCell> parent;
  std::uint64_t comm_count = 0;

  // group
  std::vector<std::shared_ptr<BehaviourCell>> children;
  bool composition = false;
  bool suspended = false;
  bool shell = false;  // emptied by decompose
  std::vector<std::pair<std::string, Value>> endpoints;
  std::vector<Unification> pending;

  // thread
  Node term;
  bool session_scope = false;  // top-level bindings become session bindings
  bool terminated = false;
  std::string error;
};

enum class BehaviourState { kRunning, kSuspended, kTerminated };

BehaviourState state_of(const BehaviourCell& b);
std::string_view state_name(BehaviourState s);

class ValueStore {
 public:
  ValueId bind(Value v);
  // Two-phase binding for recursive values: the id is issued first and the
  // value supplied once.
  ValueId reserve();
  void fill(ValueId id, Value v);

  const Value& lookup(ValueId id) const;
  bool contains(ValueId id) const;

  std::uint64_t next_cell_id() { return next_cell_++; }

  const std::map<ValueId, std::optional<Value>>& entries() const {
    return entries_;
  }
  std::uint64_t next_id() const { return next_; }
  std::uint64_t next_cell() const { return next_cell_; }

  // Snapshot restoration only.
  void restore(ValueId id, Value v) { entries_[id] = std::move(v); }
  void restore_counters(std::uint64_t next_id, std::uint64_t next_cell) {
    next_ = next_id;
    next_cell_ = next_cell;
  }

 private:
  std::map<ValueId, std::optional<Value>> entries_;
  std::uint64_t next_ = 0;
  std::uint64_t next_cell_ = 1;
};

// Convenience: bind then link.
Node bind_link(ValueStore& store, Value v, std::string hint);

}  // namespace adl
