#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

#include "adl/runtime.hpp"
#include "adl/typecheck.hpp"
#include "terms.hpp"

namespace adl {

using nlohmann::json;

namespace {

// Hops along a site. Non-negative values select a choose branch.
constexpr int kSeqHop = -1;
constexpr int kWaitingHop = -2;
constexpr int kWorkingHop = -3;

json id_or_null(const BehaviourCell* b) { return b ? json(b->id) : json(nullptr); }

}  // namespace

// An enabled action of one thread. `site` leads from the thread's term to the
// node acted upon.
struct Engine::Offer {
  enum Kind { kInternal, kSend, kRecv } kind = kInternal;
  std::shared_ptr<BehaviourCell> thread;
  std::vector<int> site;
  std::shared_ptr<ConnectionCell> cls;
  int branch = -1;  // choose commit
};

struct Engine::Outcome {
  bool consumed = false;
  std::vector<std::pair<std::string, Node>> exports;
};

struct Engine::Action {
  std::shared_ptr<BehaviourCell> thread;
  const Offer* offer = nullptr;
  bool comm = false;
  std::vector<Node> received;
  bool top_level = false;
};

std::string_view step_result_name(StepResult r) {
  switch (r) {
    case StepResult::kProgressed:
      return "progressed";
    case StepResult::kQuiescent:
      return "quiescent";
    case StepResult::kTerminated:
      return "terminated";
  }
  return "?";
}

Engine::Engine(std::uint64_t seed) : rng_(seed), seed_(seed) {
  root_ = std::make_shared<BehaviourCell>();
  root_->id = store_.next_cell_id();
  root_->label = "session";
  register_cell(root_);
}

void Engine::reseed(std::uint64_t seed) {
  seed_ = seed;
  rng_.seed(seed);
}

void Engine::register_native(const std::string& name, NativeFunction f) {
  natives_[name] = std::move(f);
}

Value Engine::native_value(const std::string& name) const {
  auto it = natives_.find(name);
  if (it == natives_.end()) throw Error("unknown native function '" + name + "'");
  auto c = std::make_shared<Closure>();
  c->param_types = it->second.params;
  for (size_t i = 0; i < c->param_types.size(); ++i) c->params.push_back("p" + std::to_string(i + 1));
  c->result = it->second.result;
  c->native = name;
  c->body = Node(NodeKind::kSequence);
  return Value{FunctionValue{std::move(c)}};
}

void Engine::emit(std::string kind, json data) {
  trace_.push_back(Event{step_, std::move(kind), std::move(data)});
  if (on_event) on_event(trace_.back());
}

// ---------------------------------------------------------------- cells

void Engine::register_cell(const std::shared_ptr<BehaviourCell>& b) { cells_[b->id] = b; }

std::shared_ptr<BehaviourCell> Engine::new_group(const std::shared_ptr<BehaviourCell>& owner) {
  auto g = std::make_shared<BehaviourCell>();
  g->id = store_.next_cell_id();
  register_cell(g);
  if (owner) attach(g, owner);
  return g;
}

void Engine::attach(const std::shared_ptr<BehaviourCell>& b,
                    const std::shared_ptr<BehaviourCell>& parent) {
  detach(b);
  b->parent = parent;
  parent->children.push_back(b);
}

void Engine::detach(const std::shared_ptr<BehaviourCell>& b) {
  if (auto p = b->parent.lock()) {
    auto& kids = p->children;
    kids.erase(std::remove(kids.begin(), kids.end(), b), kids.end());
  }
  b->parent.reset();
}

void Engine::resume(const std::shared_ptr<BehaviourCell>& b) {
  b->suspended = false;
  if (b != root_ && !b->parent.lock()) attach(b, root_);
}

std::shared_ptr<BehaviourCell> Engine::spawn(Node term, std::shared_ptr<BehaviourCell> group,
                                             bool session_scope, BehaviourCell* by) {
  if (!group) group = root_;
  auto t = std::make_shared<BehaviourCell>();
  t->id = store_.next_cell_id();
  t->is_thread = true;
  t->session_scope = session_scope;
  t->term = std::move(term);
  register_cell(t);
  attach(t, group);
  emit("spawn", {{"behaviour", t->id}, {"parent", group->id}, {"by", id_or_null(by)}});
  finish_thread(t);
  return t;
}

std::shared_ptr<BehaviourCell> Engine::instantiate(const Closure& abstraction,
                                                   const std::vector<Value>& args,
                                                   const std::shared_ptr<BehaviourCell>& owner,
                                                   BehaviourCell* by) {
  if (args.size() != abstraction.params.size()) {
    throw RuntimeFault("abstraction expects " + std::to_string(abstraction.params.size()) +
                       " argument(s), given " + std::to_string(args.size()));
  }
  auto g = new_group(owner);
  Node term = abstraction.body;
  for (size_t i = 0; i < args.size(); ++i) {
    Type t = type_of_value(args[i]);
    if (t != abstraction.param_types[i]) {
      throw RuntimeFault("argument " + std::to_string(i + 1) + " has type " + to_string(t) +
                         ", expected " + to_string(abstraction.param_types[i]));
    }
    ValueId id = store_.bind(args[i]);
    detail::substitute(term, abstraction.params[i], make_link(id, abstraction.params[i]));
    if (args[i].holds<ConnectionValue>()) g->endpoints.emplace_back(abstraction.params[i], args[i]);
  }
  spawn(std::move(term), g, false, by);
  return g;
}

std::shared_ptr<BehaviourCell> Engine::find_behaviour(std::uint64_t id) const {
  auto it = cells_.find(id);
  if (it == cells_.end()) return nullptr;
  return it->second.lock();
}

std::vector<std::shared_ptr<BehaviourCell>> Engine::systems() const {
  std::vector<std::shared_ptr<BehaviourCell>> out;
  for (const auto& c : root_->children) {
    if (!c->is_thread) out.push_back(c);
  }
  for (const auto& [id, w] : cells_) {
    auto b = w.lock();
    if (b && !b->is_thread && b != root_ && !b->parent.lock()) out.push_back(b);
  }
  return out;
}

std::vector<std::shared_ptr<BehaviourCell>> Engine::threads_under(
    const std::shared_ptr<BehaviourCell>& b) const {
  std::vector<std::shared_ptr<BehaviourCell>> out;
  std::vector<std::shared_ptr<BehaviourCell>> stack{b};
  while (!stack.empty()) {
    auto c = stack.back();
    stack.pop_back();
    if (c->is_thread) {
      if (!c->terminated) out.push_back(c);
      continue;
    }
    if (c->suspended) continue;
    for (auto it = c->children.rbegin(); it != c->children.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

bool Engine::live() const { return !threads_under(root_).empty(); }

// ---------------------------------------------------------------- offers

bool Engine::decompose_ready(const Node& n) {
  if (n.is(NodeKind::kAbstraction) || n.is(NodeKind::kFunction)) return true;
  if (n.is(NodeKind::kDecompose) && n.children[0].is(NodeKind::kLink) &&
      store_.contains(n.children[0].link)) {
    const Value& v = store_.lookup(n.children[0].link);
    if (v.holds<BehaviourValue>()) {
      const auto& cell = v.as<BehaviourValue>().cell;
      if (cell->composition && !cell->shell && !quiescent(cell)) return false;
    }
  }
  for (const auto& c : n.children) {
    if (!decompose_ready(c)) return false;
  }
  return true;
}

void Engine::collect(const Node& n, std::vector<int>& site, std::vector<Offer>& out,
                     const std::shared_ptr<BehaviourCell>& thread, bool guard_mode) {
  auto internal = [&](int branch = -1) {
    Offer o;
    o.kind = Offer::kInternal;
    o.thread = thread;
    o.site = site;
    o.branch = branch;
    out.push_back(std::move(o));
  };
  switch (n.kind) {
    case NodeKind::kSequence:
    case NodeKind::kBody:
      if (n.children.empty() || n.children[0].is(NodeKind::kFree)) {
        internal();
        return;
      }
      site.push_back(kSeqHop);
      collect(n.children[0], site, out, thread, guard_mode);
      site.pop_back();
      return;
    case NodeKind::kReplicate: {
      if (n.children.size() == 2) {
        site.push_back(kWorkingHop);
        collect(n.children[1], site, out, thread, guard_mode);
        site.pop_back();
        return;
      }
      std::vector<Offer> inner;
      site.push_back(kWaitingHop);
      collect(n.children[0], site, inner, thread, guard_mode);
      site.pop_back();
      bool activate = false;
      for (auto& o : inner) {
        if (o.kind == Offer::kInternal) {
          activate = true;
        } else {
          out.push_back(std::move(o));
        }
      }
      if (activate) internal();
      return;
    }
    case NodeKind::kChoose:
      for (size_t i = 0; i < n.children.size(); ++i) {
        std::vector<Offer> inner;
        site.push_back(static_cast<int>(i));
        collect(n.children[i], site, inner, thread, guard_mode);
        site.pop_back();
        bool eligible = false;
        for (auto& o : inner) {
          if (o.kind == Offer::kInternal) {
            eligible = true;
          } else {
            out.push_back(std::move(o));
          }
        }
        if (eligible) internal(static_cast<int>(i));
      }
      return;
    case NodeKind::kSend:
    case NodeKind::kReceive: {
      const Node& ch = n.children[0];
      if (ch.is(NodeKind::kLink) && store_.contains(ch.link) &&
          store_.lookup(ch.link).holds<ConnectionValue>()) {
        Offer o;
        o.kind = n.is(NodeKind::kSend) ? Offer::kSend : Offer::kRecv;
        o.thread = thread;
        o.site = site;
        o.cls = find_class(store_.lookup(ch.link).as<ConnectionValue>().cell);
        out.push_back(std::move(o));
      } else {
        internal();
      }
      return;
    }
    default:
      if (!guard_mode && !decompose_ready(n)) return;
      internal();
  }
}

void Engine::offers(const std::vector<std::shared_ptr<BehaviourCell>>& threads,
                    std::vector<Offer>& out, bool guard_mode) {
  for (const auto& t : threads) {
    std::vector<int> site;
    collect(t->term, site, out, t, guard_mode);
  }
}

namespace {

template <typename OfferT>
std::vector<std::pair<int, int>> enabled(const std::vector<OfferT>& os) {
  std::vector<std::pair<int, int>> choices;
  for (size_t i = 0; i < os.size(); ++i) {
    if (os[i].kind == OfferT::kInternal) choices.emplace_back(static_cast<int>(i), -1);
  }
  for (size_t s = 0; s < os.size(); ++s) {
    if (os[s].kind != OfferT::kSend) continue;
    for (size_t r = 0; r < os.size(); ++r) {
      if (os[r].kind == OfferT::kRecv && os[r].cls == os[s].cls && os[r].thread != os[s].thread) {
        choices.emplace_back(static_cast<int>(s), static_cast<int>(r));
      }
    }
  }
  return choices;
}

}  // namespace

bool Engine::quiescent(const std::shared_ptr<BehaviourCell>& b) {
  if (b->suspended && b != root_) {
    // A suspended behaviour takes no steps; judge what it would do if resumed.
    b->suspended = false;
    bool q = quiescent(b);
    b->suspended = true;
    return q;
  }
  std::vector<Offer> os;
  offers(threads_under(b), os, true);
  return enabled(os).empty();
}

std::size_t Engine::enabled_count() {
  std::vector<Offer> os;
  offers(threads_under(root_), os, false);
  return enabled(os).size();
}

AwaitResult Engine::await_quiescence(const std::shared_ptr<BehaviourCell>& b,
                                     std::uint64_t max_steps) {
  for (std::uint64_t i = 0; i < max_steps; ++i) {
    if (quiescent(b)) return AwaitResult::kQuiescent;
    if (step() != StepResult::kProgressed) break;
  }
  return quiescent(b) ? AwaitResult::kQuiescent : AwaitResult::kTimedOut;
}

std::uint64_t Engine::draw(std::uint64_t n) {
  // Rejection sampling; `threshold` is 2^64 mod n.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    std::uint64_t x = rng_();
    if (x >= threshold) return x % n;
  }
}

StepResult Engine::step() {
  auto threads = threads_under(root_);
  if (threads.empty()) return StepResult::kTerminated;
  std::vector<Offer> os;
  offers(threads, os, false);
  auto choices = enabled(os);
  if (choices.empty()) return StepResult::kQuiescent;
  auto [a, b] = choices[draw(choices.size())];
  ++step_;
  if (b < 0) {
    perform_internal(os[a]);
  } else {
    perform_comm(os[a], os[b]);
  }
  return StepResult::kProgressed;
}

RunResult Engine::run(std::uint64_t max_steps) {
  RunResult r;
  while (r.steps < max_steps) {
    r.last = step();
    if (r.last != StepResult::kProgressed) return r;
    ++r.steps;
  }
  std::vector<Offer> os;
  offers(threads_under(root_), os, false);
  if (enabled(os).empty()) {
    r.last = live() ? StepResult::kQuiescent : StepResult::kTerminated;
  } else {
    r.hit_limit = true;
  }
  return r;
}

// ---------------------------------------------------------------- reduction

void Engine::finish_thread(const std::shared_ptr<BehaviourCell>& t) {
  if (t->terminated || !detail::normalize(t->term)) return;
  t->terminated = true;
  emit("terminate", {{"behaviour", t->id}});
  detach(t);
}

namespace {

const Node& node_at(const Node& term, const std::vector<int>& site) {
  const Node* n = &term;
  for (int hop : site) {
    if (hop == kSeqHop || hop == kWaitingHop) {
      n = &n->children[0];
    } else if (hop == kWorkingHop) {
      n = &n->children[1];
    } else {
      n = &n->children[hop];
    }
  }
  return *n;
}

}  // namespace

void Engine::perform_internal(const Offer& o) {
  auto t = o.thread;
  Action act;
  act.thread = t;
  act.offer = &o;
  try {
    Outcome r = walk(t->term, o.site, 0, act);
    if (r.consumed) t->term = Node(NodeKind::kSequence);
  } catch (const Error& e) {
    t->terminated = true;
    t->error = e.what();
    emit("terminate", {{"behaviour", t->id}, {"error", t->error}});
    detach(t);
    return;
  }
  finish_thread(t);
}

void Engine::bump_comm(const std::shared_ptr<BehaviourCell>& t) {
  for (auto b = t; b; b = b->parent.lock()) ++b->comm_count;
}

void Engine::perform_comm(const Offer& s, const Offer& r) {
  auto sender = s.thread;
  auto receiver = r.thread;
  const Node& send_node = node_at(sender->term, s.site);
  const Node& recv_node = node_at(receiver->term, r.site);
  auto fault = [&](const std::shared_ptr<BehaviourCell>& t, const std::string& msg) {
    t->terminated = true;
    t->error = msg;
    emit("terminate", {{"behaviour", t->id}, {"error", msg}});
    detach(t);
  };

  std::vector<Value> payload;
  try {
    EvalContext ctx{sender->parent.lock(), sender.get(), nullptr};
    for (size_t i = 1; i < send_node.children.size(); ++i) {
      payload.push_back(eval(send_node.children[i], ctx, 0));
    }
  } catch (const Error& e) {
    fault(sender, e.what());
    return;
  }
  if (payload.size() != recv_node.names.size()) {
    fault(receiver, "receive expects " + std::to_string(recv_node.names.size()) +
                        " value(s), sender offered " + std::to_string(payload.size()));
    return;
  }
  std::vector<Node> links;
  json summary = json::array();
  for (size_t i = 0; i < payload.size(); ++i) {
    Type t = type_of_value(payload[i]);
    if (t != recv_node.types[i]) {
      fault(receiver, "received " + to_string(t) + " for binder '" + recv_node.names[i] +
                          "' of type " + to_string(recv_node.types[i]));
      return;
    }
    summary.push_back(summarize(payload[i]));
    links.push_back(make_link(store_.bind(payload[i]), recv_node.names[i]));
  }
  emit("comm", {{"conn", s.cls->id},
                {"payload", summary},
                {"sender", sender->id},
                {"receiver", receiver->id}});

  Action sa;
  sa.thread = sender;
  sa.offer = &s;
  sa.comm = true;
  if (walk(sender->term, s.site, 0, sa).consumed) sender->term = Node(NodeKind::kSequence);

  Action ra;
  ra.thread = receiver;
  ra.offer = &r;
  ra.comm = true;
  ra.received = std::move(links);
  if (walk(receiver->term, r.site, 0, ra).consumed) receiver->term = Node(NodeKind::kSequence);

  std::set<BehaviourCell*> counted;
  for (const auto& t : {sender, receiver}) {
    for (auto b = t; b; b = b->parent.lock()) {
      if (counted.insert(b.get()).second) ++b->comm_count;
    }
  }
  finish_thread(sender);
  finish_thread(receiver);
}

Engine::Outcome Engine::walk(Node& n, const std::vector<int>& site, std::size_t k, Action& act) {
  if (k == site.size()) {
    if (act.comm) {
      Outcome out;
      out.consumed = true;
      if (n.is(NodeKind::kReceive)) {
        for (size_t i = 0; i < n.names.size(); ++i) {
          out.exports.emplace_back(n.names[i], act.received[i]);
        }
      }
      return out;
    }
    act.top_level = site.size() == 1 && site[0] == kSeqHop;
    return execute_statement(n, act);
  }
  int hop = site[k];
  if (hop == kSeqHop) {
    Outcome r = walk(n.children[0], site, k + 1, act);
    size_t from = 1;
    if (r.consumed) {
      n.children.erase(n.children.begin());
      from = 0;
    }
    Outcome up;
    for (auto& [name, link] : r.exports) {
      detail::substitute_suffix(n.children, from, name, link);
      if (k == 0 && act.thread->session_scope && on_session_binding) {
        on_session_binding(name, link.link);
      }
      if (detail::frees(n.children, from, name)) up.exports.emplace_back(name, link);
    }
    up.consumed = n.children.empty();
    return up;
  }
  auto group = act.thread->parent.lock();
  auto clone = [&](Node term) {
    auto t = std::make_shared<BehaviourCell>();
    t->id = store_.next_cell_id();
    t->is_thread = true;
    t->term = std::move(term);
    register_cell(t);
    if (group) attach(t, group);
    emit("clone", {{"behaviour", t->id}, {"from", act.thread->id}});
    finish_thread(t);
  };
  if (hop == kWaitingHop) {
    Node copy = n.children[0];
    Outcome r = walk(copy, site, k + 1, act);
    if (r.consumed) copy = Node(NodeKind::kSequence);
    clone(std::move(copy));
    return {};
  }
  if (hop == kWorkingHop) {
    Outcome r = walk(n.children[1], site, k + 1, act);
    if (act.comm) {
      Node w = r.consumed ? Node(NodeKind::kSequence) : std::move(n.children[1]);
      n.children.pop_back();
      clone(std::move(w));
      return {};
    }
    Outcome out;
    out.consumed = r.consumed;
    return out;
  }
  emit("choose", {{"behaviour", act.thread->id}, {"branch", hop}});
  Node branch = std::move(n.children[hop]);
  Outcome r = walk(branch, site, k + 1, act);
  Outcome out;
  if (r.consumed) {
    out.consumed = true;
  } else {
    n = std::move(branch);
  }
  return out;
}

Engine::Outcome Engine::execute_statement(Node& n, Action& act) {
  const auto& thread = act.thread;
  EvalContext ctx{thread->parent.lock(), thread.get(), nullptr};
  Outcome out;
  switch (n.kind) {
    case NodeKind::kReplicate:
      n.children.push_back(n.children[0]);
      return out;
    case NodeKind::kChoose: {
      int b = act.offer->branch;
      emit("choose", {{"behaviour", thread->id}, {"branch", b}});
      Node branch = std::move(n.children[b]);
      n = std::move(branch);
      out.consumed = detail::normalize(n);
      return out;
    }
    case NodeKind::kSequence:
    case NodeKind::kBody:
      out.consumed = detail::normalize(n);
      return out;
    case NodeKind::kFree:
      out.consumed = true;
      return out;
    case NodeKind::kValueDecl: {
      Node rhs = n.children[0];
      ValueId id;
      if (detail::recursive_rhs(n)) {
        id = store_.reserve();
        detail::substitute(rhs, n.text, make_link(id, n.text));
        store_.fill(id, eval(rhs, ctx, 0));
      } else {
        id = store_.bind(eval(rhs, ctx, 0));
      }
      const Value& v = store_.lookup(id);
      if (v.holds<ConnectionValue>()) record_endpoint(*thread, n.text, v);
      out.consumed = true;
      out.exports.emplace_back(n.text, make_link(id, n.text));
      return out;
    }
    case NodeKind::kAssign: {
      Value target = eval(n.children[0], ctx, 0);
      if (!target.holds<LocationValue>()) throw RuntimeFault("assignment to a non-location");
      Value v = eval(n.children[1], ctx, 0);
      const auto& cell = target.as<LocationValue>().cell;
      Type t = type_of_value(v);
      if (t != cell->content) {
        throw RuntimeFault("cannot assign " + to_string(t) + " to location[" +
                           to_string(cell->content) + "]");
      }
      cell->contents = std::move(v);
      emit("assign", {{"location", cell->id}, {"behaviour", thread->id}});
      out.consumed = true;
      return out;
    }
    case NodeKind::kIf: {
      Value c = eval(n.children[0], ctx, 0);
      if (!c.holds<bool>()) throw RuntimeFault("if condition is not a boolean");
      if (c.as<bool>()) {
        Node b = std::move(n.children[1]);
        n = std::move(b);
      } else if (n.children.size() > 2) {
        Node b = std::move(n.children[2]);
        n = std::move(b);
      } else {
        out.consumed = true;
        return out;
      }
      out.consumed = detail::normalize(n);
      return out;
    }
    case NodeKind::kWhile: {
      Value c = eval(n.children[0], ctx, 0);
      if (!c.holds<bool>()) throw RuntimeFault("while condition is not a boolean");
      if (!c.as<bool>()) {
        out.consumed = true;
        return out;
      }
      Node seq(NodeKind::kSequence);
      seq.children.push_back(n.children[1]);
      seq.children.push_back(std::move(n));
      n = std::move(seq);
      out.consumed = detail::normalize(n);
      return out;
    }
    case NodeKind::kSend:
    case NodeKind::kReceive: {
      Value c = eval(n.children[0], ctx, 0);
      if (!c.holds<ConnectionValue>()) throw RuntimeFault("via needs a connection");
      n.children[0] = make_link(store_.bind(std::move(c)), "");
      return out;
    }
    case NodeKind::kApplication: {
      Value callee = eval(n.children[0], ctx, 0);
      std::vector<Value> args;
      for (size_t i = 1; i < n.children.size(); ++i) args.push_back(eval(n.children[i], ctx, 0));
      if (callee.holds<AbstractionValue>()) {
        const Closure& c = *callee.as<AbstractionValue>().closure;
        if (args.size() != c.params.size()) {
          throw RuntimeFault("abstraction expects " + std::to_string(c.params.size()) +
                             " argument(s), given " + std::to_string(args.size()));
        }
        Node term = c.body;
        for (size_t i = 0; i < args.size(); ++i) {
          ValueId id = store_.bind(args[i]);
          detail::substitute(term, c.params[i], make_link(id, c.params[i]));
        }
        spawn(std::move(term), ctx.owner ? ctx.owner : root_, false, thread.get());
      } else if (callee.holds<FunctionValue>()) {
        call(callee.as<FunctionValue>(), args, ctx);
      } else {
        throw RuntimeFault("cannot apply " + summarize(callee));
      }
      out.consumed = true;
      return out;
    }
    default:
      eval(n, ctx, 0);
      out.consumed = true;
      return out;
  }
}

// ---------------------------------------------------------------- compose

void Engine::record_endpoint(BehaviourCell& thread, const std::string& name, const Value& v) {
  auto g = thread.parent.lock();
  if (!g || g == root_) return;
  g->endpoints.emplace_back(name, v);
  if (auto k = g->parent.lock(); k && k->composition && !k->pending.empty()) retry_pending(k);
}

void Engine::retry_pending(const std::shared_ptr<BehaviourCell>& k) {
  auto pending = std::move(k->pending);
  k->pending.clear();
  for (const auto& u : pending) {
    try {
      if (!try_unify(*k, u, false)) k->pending.push_back(u);
    } catch (const Error& e) {
      emit("fault", {{"behaviour", k->id}, {"error", e.what()}});
    }
  }
}

std::optional<std::shared_ptr<ConnectionCell>> Engine::resolve_endpoint(const BehaviourCell& part,
                                                                        const std::string& name) {
  for (auto it = part.endpoints.rbegin(); it != part.endpoints.rend(); ++it) {
    if (it->first == name && it->second.holds<ConnectionValue>()) {
      return it->second.as<ConnectionValue>().cell;
    }
  }
  // Fall back to links displayed under that name, e.g. a connection reached
  // through a reflected representation.
  std::optional<std::shared_ptr<ConnectionCell>> found;
  std::vector<const BehaviourCell*> stack{&part};
  while (!stack.empty() && !found) {
    const BehaviourCell* b = stack.back();
    stack.pop_back();
    if (b->is_thread) {
      visit(b->term, [&](const Node& n) {
        if (found || !n.is(NodeKind::kLink) || n.hint != name || !store_.contains(n.link)) return;
        const Value& v = store_.lookup(n.link);
        if (v.holds<ConnectionValue>()) found = v.as<ConnectionValue>().cell;
      });
      continue;
    }
    for (auto it = b->children.rbegin(); it != b->children.rend(); ++it) stack.push_back(it->get());
  }
  return found;
}

bool Engine::try_unify(BehaviourCell& k, const Unification& u, bool strict) {
  auto part = [&](const std::string& label) -> std::shared_ptr<BehaviourCell> {
    for (const auto& c : k.children) {
      if (c->label && *c->label == label) return c;
    }
    throw RuntimeFault("unknown label '" + label + "' in composition");
  };
  auto left = part(u.left_label);
  auto right = part(u.right_label);
  auto a = resolve_endpoint(*left, u.left_conn);
  auto b = resolve_endpoint(*right, u.right_conn);
  if (!a || !b) {
    if (strict) {
      const auto& [label, name] = !a ? std::pair(u.left_label, u.left_conn)
                                     : std::pair(u.right_label, u.right_conn);
      throw RuntimeFault("part '" + label + "' has no connection named '" + name + "'");
    }
    return false;
  }
  unify(*a, *b);
  return true;
}

void Engine::unify(const std::shared_ptr<ConnectionCell>& a, const std::shared_ptr<ConnectionCell>& b) {
  auto ra = find_class(a);
  auto rb = find_class(b);
  if (ra == rb) return;
  if (ra->payload != rb->payload) {
    throw RuntimeFault("cannot unify " + to_string(Type::Connection(ra->payload)) + " with " +
                       to_string(Type::Connection(rb->payload)));
  }
  if (rb->id < ra->id) std::swap(ra, rb);
  rb->parent = ra;
}

std::shared_ptr<BehaviourCell> Engine::compose(const std::vector<ComposePart>& parts,
                                               const std::vector<Unification>& unifications,
                                               const std::shared_ptr<BehaviourCell>& owner) {
  std::set<std::string> labels;
  for (const auto& p : parts) {
    if (!p.behaviour || p.behaviour->is_thread) throw RuntimeFault("compose parts must be behaviours");
    if (p.behaviour == root_) throw RuntimeFault("cannot compose the session");
    if (!p.label.empty() && !labels.insert(p.label).second) {
      throw RuntimeFault("duplicate composition label '" + p.label + "'");
    }
  }
  auto k = new_group(owner);
  k->composition = true;
  for (const auto& p : parts) {
    attach(p.behaviour, k);
    p.behaviour->suspended = false;
    p.behaviour->label = p.label.empty() ? std::nullopt : std::optional<std::string>(p.label);
  }
  for (const auto& u : unifications) try_unify(*k, u, true);
  return k;
}

Value Engine::decompose(const std::shared_ptr<BehaviourCell>& k) {
  if (k->is_thread || !k->composition) {
    throw RuntimeFault("decompose needs a composition, behaviour " + std::to_string(k->id) +
                       " is not one");
  }
  if (k->shell) throw RuntimeFault("composition " + std::to_string(k->id) + " was already decomposed");
  if (!quiescent(k)) {
    throw RuntimeFault("composition " + std::to_string(k->id) +
                       " is not quiescent; quiesce it first");
  }
  Type element = decomposed_element_type();
  Type endpoint = element.args[2].element();
  SequenceValue out{element, {}};
  json ids = json::array();
  auto parts = k->children;
  for (const auto& p : parts) {
    p->suspended = true;
    detach(p);
    SequenceValue conns{endpoint, {}};
    for (const auto& [name, v] : p->endpoints) {
      conns.items.push_back(Value{ViewValue{{"name", "conn"}, {Value{name}, make_any(v)}}});
    }
    out.items.push_back(Value{ViewValue{{"label", "bhvr", "connections"},
                                        {Value{p->label.value_or("")}, Value{BehaviourValue{p}},
                                         Value{std::move(conns)}}}});
    ids.push_back(p->id);
  }
  k->shell = true;
  k->pending.clear();
  emit("suspend_all", {{"behaviour", k->id}, {"parts", ids}});
  return Value{std::move(out)};
}

// ---------------------------------------------------------------- traces

std::string to_json_line(const Event& e) {
  nlohmann::ordered_json o;
  o["step"] = e.step;
  o["kind"] = e.kind;
  for (const auto& [k, v] : e.data.items()) o[k] = v;
  return o.dump();
}

std::string to_jsonl(const std::vector<Event>& events) {
  std::string out;
  for (const auto& e : events) out += to_json_line(e) + "\n";
  return out;
}

std::vector<std::string> canonical_trace(const std::vector<Event>& events) {
  std::map<std::uint64_t, std::uint64_t> behaviours;
  std::map<std::uint64_t, std::uint64_t> conns;
  auto renumber = [](std::map<std::uint64_t, std::uint64_t>& m, json& v) {
    if (!v.is_number_unsigned() && !v.is_number_integer()) return;
    auto id = v.get<std::uint64_t>();
    auto [it, fresh] = m.emplace(id, m.size() + 1);
    v = it->second;
  };
  std::vector<std::string> out;
  for (const auto& e : events) {
    Event c = e;
    for (const char* key : {"sender", "receiver", "behaviour", "from", "by", "parent"}) {
      if (c.data.contains(key)) renumber(behaviours, c.data[key]);
    }
    if (c.data.contains("parts")) {
      for (auto& p : c.data["parts"]) renumber(behaviours, p);
    }
    if (c.data.contains("conn")) renumber(conns, c.data["conn"]);
    out.push_back(to_json_line(c));
  }
  return out;
}

}  // namespace adl
