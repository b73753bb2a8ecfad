#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adl/error.hpp"
#include "adl/runtime.hpp"
#include "adl/syntax.hpp"
#include "adl/typecheck.hpp"

namespace adl {

class CheckFailure : public Error {
 public:
  explicit CheckFailure(std::vector<TypeError> errors);
  const std::vector<TypeError>& errors() const { return errors_; }

 private:
  std::vector<TypeError> errors_;
};

// Decodes a JSON rendering of a value of type `t`: numbers, booleans and
// strings as themselves, views as objects, sequences as arrays, any-values as
// {"type": T, "value": V}. Throws Error for other types.
Value value_from_json(const nlohmann::json& j, const Type& t);

// Built-in test double for the experiment externals: connections the
// experiment writes to or reads from, host functions, and phases of scripted
// sends released one at a time.
//
//   {"aliases":     {"exp_view": "view[step: integer, status: string]"},
//    "connections": {"exp_input": "connection[exp_view]", ...},
//    "sinks":       ["c_display"],
//    "natives":     {"start_experiment": "function[] -> boolean", ...},
//    "phases":      [[{"send": "exp_input", "values": [{"step": 1, ...}]}], ...]}
//
// Every connection and native becomes a session binding. A sink is drained
// by a replicated receiver that appends to the location `NAME_log`.
struct Scenario {
  nlohmann::json config;
  std::size_t next_phase = 0;
};

// The persistent environment: an engine plus named top-level bindings.
class Session {
 public:
  explicit Session(std::uint64_t seed = 0);
  // The engine's hooks point back at this session.
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  Engine& engine() { return engine_; }
  const Engine& engine() const { return engine_; }
  TypeAliases& aliases() { return aliases_; }

  const std::map<std::string, ValueId>& bindings() const { return bindings_; }
  std::optional<Value> lookup(const std::string& name) const;
  ValueId bind(const std::string& name, Value v);
  // Session names visible to `text` are replaced by links.
  Node resolve(Node program) const;

  // Parses and typechecks program text against the session bindings. Throws
  // ParseFailure or CheckFailure.
  Node prepare(std::string_view text);
  // Prepares `text` and starts it as a session-scoped thread.
  std::shared_ptr<BehaviourCell> load(std::string_view text);
  // Runs until `thread` finishes, nothing is enabled, or `max_steps`.
  RunResult settle(const std::shared_ptr<BehaviourCell>& thread, std::uint64_t max_steps);
  // Runs to quiescence, releasing scenario phases whenever the engine stalls.
  RunResult run_all(std::uint64_t max_steps);

  void install_scenario(const nlohmann::json& config);
  bool has_scenario() const { return scenario_.has_value(); }
  std::size_t phases_left() const;
  // Releases the next scenario phase; false when none is left.
  bool feed();
  // Calls made to each scenario host function.
  const std::map<std::string, std::uint64_t>& native_calls() const { return native_calls_; }

  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& snap);

 private:
  void register_natives(const nlohmann::json& natives);

  Engine engine_;
  TypeAliases aliases_;
  std::map<std::string, ValueId> bindings_;
  std::optional<Scenario> scenario_;
  std::map<std::string, std::uint64_t> native_calls_;
};

}  // namespace adl
