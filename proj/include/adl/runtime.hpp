#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "adl/error.hpp"
#include "adl/hypercode.hpp"
#include "adl/value.hpp"

namespace adl {

// One trace record. `data` holds the kind-specific fields; step and kind are
// written first when exported.
//
//   comm        conn, payload, sender, receiver
//   spawn       behaviour, parent, by
//   clone       behaviour, from
//   choose      behaviour, branch (0-based)
//   terminate   behaviour, error?
//   suspend_all behaviour, parts
//   assign      location, behaviour
//   call        function, behaviour
//   fault       behaviour, error
struct Event {
  std::uint64_t step = 0;
  std::string kind;
  nlohmann::json data;
};

std::string to_json_line(const Event& e);
std::string to_jsonl(const std::vector<Event>& events);

// Renumbers behaviour and connection ids by order of first appearance so that
// traces of engines holding copies of the same system can be compared.
std::vector<std::string> canonical_trace(const std::vector<Event>& events);

enum class StepResult { kProgressed, kQuiescent, kTerminated };
enum class AwaitResult { kQuiescent, kTimedOut };

std::string_view step_result_name(StepResult r);

struct NativeFunction {
  std::vector<Type> params;
  Type result;
  std::function<Value(class Engine&, const std::vector<Value>&)> fn;
};

struct RunResult {
  StepResult last = StepResult::kQuiescent;
  std::uint64_t steps = 0;
  bool hit_limit = false;
};

// Context for atomic expression evaluation.
struct EvalContext {
  // Group receiving behaviours created by the expression; null creates them
  // detached.
  std::shared_ptr<BehaviourCell> owner;
  // Thread performing the evaluation, for event attribution; may be null.
  BehaviourCell* thread = nullptr;
  const std::map<std::string, Value>* env = nullptr;
};

// The reducer. Threads live in a tree of groups rooted at the session group;
// detached groups (decomposed or freshly reflected behaviours) take no steps.
class Engine {
 public:
  explicit Engine(std::uint64_t seed = 0);

  ValueStore& store() { return store_; }
  const ValueStore& store() const { return store_; }
  std::shared_ptr<BehaviourCell> root() const { return root_; }

  void reseed(std::uint64_t seed);
  std::uint64_t seed() const { return seed_; }
  std::uint64_t step_count() const { return step_; }

  // ---- hosts ----
  void register_native(const std::string& name, NativeFunction f);
  bool has_native(const std::string& name) const { return natives_.count(name) > 0; }
  Value native_value(const std::string& name) const;

  // Called when a session-scoped thread binds a top-level name.
  std::function<void(const std::string&, ValueId)> on_session_binding;
  // Called for every event as it is recorded.
  std::function<void(const Event&)> on_event;

  // ---- behaviours ----
  std::shared_ptr<BehaviourCell> new_group(const std::shared_ptr<BehaviourCell>& owner);
  // Adds a thread running `term` to `group` (the root group when null).
  std::shared_ptr<BehaviourCell> spawn(Node term, std::shared_ptr<BehaviourCell> group = nullptr,
                                       bool session_scope = false,
                                       BehaviourCell* by = nullptr);
  // Applies an abstraction: a new group under `owner` (detached when null)
  // running the body with parameters bound.
  std::shared_ptr<BehaviourCell> instantiate(const Closure& abstraction,
                                             const std::vector<Value>& args,
                                             const std::shared_ptr<BehaviourCell>& owner,
                                             BehaviourCell* by = nullptr);
  std::shared_ptr<BehaviourCell> find_behaviour(std::uint64_t id) const;
  // Groups that are children of the root, plus detached groups still alive.
  std::vector<std::shared_ptr<BehaviourCell>> systems() const;

  void attach(const std::shared_ptr<BehaviourCell>& b, const std::shared_ptr<BehaviourCell>& parent);
  void detach(const std::shared_ptr<BehaviourCell>& b);
  void suspend(const std::shared_ptr<BehaviourCell>& b) { b->suspended = true; }
  // Resumes a suspended behaviour; detached ones are attached to the root.
  void resume(const std::shared_ptr<BehaviourCell>& b);

  struct ComposePart {
    std::string label;
    std::shared_ptr<BehaviourCell> behaviour;
  };
  // Builds a composition group under `owner` from existing behaviours, which
  // are moved and resumed. Unknown labels or names are errors.
  std::shared_ptr<BehaviourCell> compose(const std::vector<ComposePart>& parts,
                                         const std::vector<Unification>& unifications,
                                         const std::shared_ptr<BehaviourCell>& owner);
  // Breaks a quiescent composition into suspended, detached parts.
  Value decompose(const std::shared_ptr<BehaviourCell>& composition);
  void unify(const std::shared_ptr<ConnectionCell>& a, const std::shared_ptr<ConnectionCell>& b);

  // True when nothing inside `b` can reduce without communicating outside it.
  bool quiescent(const std::shared_ptr<BehaviourCell>& b);
  AwaitResult await_quiescence(const std::shared_ptr<BehaviourCell>& b, std::uint64_t max_steps);

  // ---- evaluation ----
  Value evaluate(const Node& expr, const EvalContext& ctx);
  Value evaluate(const Node& expr) { return evaluate(expr, EvalContext{root_, nullptr, nullptr}); }
  Value call(const FunctionValue& f, const std::vector<Value>& args, const EvalContext& ctx);
  // Replaces free occurrences of `env` names in `n` by links to bound copies.
  Node close_over(Node n, const std::map<std::string, Value>& env);

  // ---- scheduling ----
  StepResult step();
  RunResult run(std::uint64_t max_steps);
  // Number of currently enabled reductions.
  std::size_t enabled_count();
  bool live() const;

  const std::vector<Event>& trace() const { return trace_; }
  void clear_trace() { trace_.clear(); }
  void emit(std::string kind, nlohmann::json data);

  // ---- snapshots ----
  nlohmann::json snapshot() const;
  void restore(const nlohmann::json& snap);

  struct Offer;

 private:
  struct Outcome;
  struct Action;

  void register_cell(const std::shared_ptr<BehaviourCell>& b);
  std::vector<std::shared_ptr<BehaviourCell>> threads_under(const std::shared_ptr<BehaviourCell>& b) const;
  void collect(const Node& n, std::vector<int>& site, std::vector<Offer>& out,
               const std::shared_ptr<BehaviourCell>& thread, bool guard_mode);
  void offers(const std::vector<std::shared_ptr<BehaviourCell>>& threads, std::vector<Offer>& out,
              bool guard_mode);
  bool decompose_ready(const Node& n);
  std::uint64_t draw(std::uint64_t n);

  void perform_internal(const Offer& o);
  void perform_comm(const Offer& send, const Offer& recv);
  Outcome walk(Node& n, const std::vector<int>& site, std::size_t k, Action& act);
  Outcome execute_statement(Node& n, Action& act);
  void finish_thread(const std::shared_ptr<BehaviourCell>& t);
  void record_endpoint(BehaviourCell& thread, const std::string& name, const Value& v);
  void retry_pending(const std::shared_ptr<BehaviourCell>& group);
  std::optional<std::shared_ptr<ConnectionCell>> resolve_endpoint(const BehaviourCell& part,
                                                                   const std::string& name);
  bool try_unify(BehaviourCell& composition, const Unification& u, bool strict);
  void bump_comm(const std::shared_ptr<BehaviourCell>& t);

  Value eval(const Node& n, const EvalContext& ctx, int depth);
  Value eval_binop(const Node& n, const EvalContext& ctx, int depth);
  Value eval_compose(const Node& n, const EvalContext& ctx, int depth);
  Value behaviour_literal(const Node& n, const EvalContext& ctx);

  ValueStore store_;
  std::shared_ptr<BehaviourCell> root_;
  std::map<std::uint64_t, std::weak_ptr<BehaviourCell>> cells_;
  std::map<std::string, NativeFunction> natives_;
  std::mt19937_64 rng_;
  std::uint64_t seed_ = 0;
  std::uint64_t step_ = 0;
  std::vector<Event> trace_;
};

}  // namespace adl
