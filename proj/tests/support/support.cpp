#include "support/support.hpp"

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "adl/serialize.hpp"
#include "runtime/terms.hpp"

namespace adl::testing {

std::string corpus_path(const std::string& name) { return std::string(ADL_CORPUS_DIR) + "/" + name; }

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string read_corpus(const std::string& name) { return read_file(corpus_path(name)); }

void load_corpus(Session& s, const std::string& name, std::uint64_t max_steps) {
  auto t = s.load(read_corpus(name));
  s.settle(t, max_steps);
  if (!t->terminated) throw std::runtime_error(name + " did not finish loading");
  if (!t->error.empty()) throw std::runtime_error(name + ": " + t->error);
}

std::size_t count_kind(const std::vector<Event>& trace, const std::string& kind) {
  std::size_t n = 0;
  for (const auto& e : trace) n += e.kind == kind;
  return n;
}

Subprocess run_command(const std::string& command, const std::string& input) {
  char path[] = "/tmp/adl_stdin_XXXXXX";
  int fd = mkstemp(path);
  if (fd < 0) throw std::runtime_error("mkstemp failed");
  {
    std::ofstream f(path, std::ios::binary);
    f << input;
  }
  close(fd);
  Subprocess r;
  std::string full = command + " < " + path;
  FILE* p = popen(full.c_str(), "r");
  if (!p) throw std::runtime_error("popen failed");
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::remove(path);
  return r;
}

namespace {

struct Head {
  enum Kind { kInternal, kSend, kReceive, kGuarded } kind;
  const ConnectionCell* cls = nullptr;
  std::size_t arity = 0;
  std::size_t expected = 0;
};

void heads(const Engine& engine, const Node& n, std::vector<Head>& out);

bool guarded_decompose(const Engine& engine, const Node& n, bool& ready) {
  bool found = false;
  visit(n, [&](const Node& d) {
    if (found || !d.is(NodeKind::kDecompose) || !d.children.front().is(NodeKind::kLink)) return;
    const Value& v = engine.store().lookup(d.children.front().link);
    if (!v.holds<BehaviourValue>()) return;
    const auto& b = v.as<BehaviourValue>().cell;
    if (!b->composition || b->shell) return;
    found = true;
    ready = oracle_quiescent(engine, b);
  });
  return found;
}

void heads(const Engine& engine, const Node& n, std::vector<Head>& out) {
  switch (n.kind) {
    case NodeKind::kSequence:
    case NodeKind::kBody:
      if (!n.children.empty()) heads(engine, n.children.front(), out);
      return;
    case NodeKind::kReplicate:
      for (const auto& c : n.children) heads(engine, c, out);
      return;
    case NodeKind::kChoose:
      for (const auto& c : n.children) heads(engine, c, out);
      return;
    case NodeKind::kSend:
    case NodeKind::kReceive: {
      const Node& ch = n.children.front();
      if (ch.is(NodeKind::kLink) && engine.store().contains(ch.link)) {
        const Value& v = engine.store().lookup(ch.link);
        if (v.holds<ConnectionValue>()) {
          const auto& cell = v.as<ConnectionValue>().cell;
          bool send = n.is(NodeKind::kSend);
          out.push_back({send ? Head::kSend : Head::kReceive, find_class(cell).get(),
                         send ? n.children.size() - 1 : n.names.size(), cell->payload.size()});
          return;
        }
      }
      out.push_back({Head::kInternal});
      return;
    }
    default: {
      bool ready = false;
      if (guarded_decompose(engine, n, ready)) {
        out.push_back({ready ? Head::kInternal : Head::kGuarded});
        return;
      }
      out.push_back({Head::kInternal});
    }
  }
}

void live_threads(const std::shared_ptr<BehaviourCell>& b, bool top,
                  std::vector<std::shared_ptr<BehaviourCell>>& out) {
  if (b->is_thread) {
    if (!b->terminated) out.push_back(b);
    return;
  }
  if (b->suspended && !top) return;
  for (const auto& c : b->children) live_threads(c, false, out);
}

}  // namespace

bool oracle_quiescent(const Engine& engine, const std::shared_ptr<BehaviourCell>& group) {
  std::vector<std::shared_ptr<BehaviourCell>> threads;
  live_threads(group, true, threads);
  std::vector<std::vector<Head>> all;
  for (const auto& t : threads) {
    std::vector<Head> h;
    heads(engine, t->term, h);
    for (const auto& x : h) {
      if (x.kind == Head::kInternal) return false;
    }
    all.push_back(std::move(h));
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = 0; j < all.size(); ++j) {
      if (i == j) continue;
      for (const auto& a : all[i]) {
        for (const auto& b : all[j]) {
          if (a.kind == Head::kSend && b.kind == Head::kReceive && a.cls == b.cls) return false;
        }
      }
    }
  }
  return true;
}

std::vector<std::shared_ptr<BehaviourCell>> running_threads(const Engine& engine) {
  std::vector<std::shared_ptr<BehaviourCell>> out;
  live_threads(engine.root(), true, out);
  return out;
}

std::vector<CommHead> comm_heads(const Engine& engine, const BehaviourCell& thread) {
  std::vector<Head> h;
  heads(engine, thread.term, h);
  std::vector<CommHead> out;
  for (const auto& x : h) {
    if (x.kind == Head::kSend || x.kind == Head::kReceive) {
      out.push_back({x.kind == Head::kSend, x.cls->id, x.arity, x.expected});
    }
  }
  return out;
}

std::map<std::uint64_t, std::uint64_t> thread_groups(const std::vector<Event>& trace) {
  std::map<std::uint64_t, std::uint64_t> group;
  for (const auto& e : trace) {
    if (e.kind == "spawn") {
      group[e.data["behaviour"].get<std::uint64_t>()] = e.data["parent"].get<std::uint64_t>();
    } else if (e.kind == "clone") {
      auto from = e.data["from"].get<std::uint64_t>();
      if (group.count(from)) group[e.data["behaviour"].get<std::uint64_t>()] = group[from];
    }
  }
  return group;
}

namespace {

std::size_t log_size(const Session& s) {
  Value log = *s.lookup("c_display_log");
  return log.as<LocationValue>().cell->contents.as<SequenceValue>().items.size();
}

// Path (child indices) to the first node of `kind` in pre-order.
bool find_path(const Node& n, NodeKind kind, std::vector<std::size_t>& path) {
  if (n.is(kind)) return true;
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    path.push_back(i);
    if (find_path(n.children[i], kind, path)) return true;
    path.pop_back();
  }
  return false;
}

const Node& at(const Node& n, const std::vector<std::size_t>& path) {
  const Node* p = &n;
  for (auto i : path) p = &p->children[i];
  return *p;
}

Value field(const Value& view, const std::string& name) {
  const auto& v = view.as<ViewValue>();
  for (std::size_t i = 0; i < v.names.size(); ++i) {
    if (v.names[i] == name) return v.values[i];
  }
  throw std::runtime_error("no field " + name);
}

}  // namespace

EvolutionRun run_evolution(std::uint64_t seed) {
  EvolutionRun r;
  Session s(seed);
  Engine& engine = s.engine();
  try {
    s.install_scenario(parse_json(read_corpus("cs_scenario.json")));
    load_corpus(s, "cs_client.adl");
    load_corpus(s, "cs_server.adl");
    load_corpus(s, "cs_system1.adl");
    engine.run(100000);
    r.displayed_before = log_size(s);

    auto cs1 = s.lookup("CS_system1")->as<BehaviourValue>().cell;
    if (engine.await_quiescence(cs1, 10000) != AwaitResult::kQuiescent) {
      r.failure = "CS_system1 did not quiesce";
      return r;
    }
    load_corpus(s, "cs_decompose.adl");
    Value seq = *s.lookup("cs_seq");
    const auto& parts = seq.as<SequenceValue>().items;
    for (const auto& p : parts) r.labels.push_back(field(p, "label").as<std::string>());
    if (parts.size() != 2) {
      r.failure = "decompose gave " + std::to_string(parts.size()) + " parts";
      return r;
    }

    // Hyper-code of the old server: replicate choose{ stop branch or data branch }.
    const Value& server = field(parts[1], "bhvr");
    Node old = reify(server, engine);
    std::vector<std::size_t> rep;
    if (!find_path(old, NodeKind::kReplicate, rep)) {
      r.failure = "server hyper-code has no replicate";
      return r;
    }
    std::vector<std::size_t> choose = rep;
    choose.push_back(0);
    const Node& branches = at(old, choose);
    if (!branches.is(NodeKind::kChoose) || branches.children.size() != 2) {
      r.failure = "server hyper-code has no two-way choose";
      return r;
    }
    Node start_link;
    Value server_conns = field(parts[1], "connections");
    for (const auto& c : server_conns.as<SequenceValue>().items) {
      if (field(c, "name").as<std::string>() == "s_start") {
        start_link = reify(*field(c, "conn").as<AnyValue>().inner, engine);
        start_link.hint = "s_start";
      }
    }
    if (!start_link.is(NodeKind::kLink)) {
      r.failure = "server lists no s_start connection";
      return r;
    }

    // View server: the replicate keeps only the data branch.
    Node view = transform(old, ReplaceSubtree{choose, branches.children[1]}, engine.store());
    // Command server: a start-swallowing branch in front of the stop branch.
    std::vector<std::size_t> first = choose, second = choose;
    first.push_back(0);
    second.push_back(1);
    Node command = transform(old, ReplaceSubtree{second, branches.children[0]}, engine.store());
    command = transform(command, ReplaceWithText{first, "{ via " + render(start_link) + " receive }"},
                        engine.store(), &s.aliases());
    r.view_server_text = "value view_server_abs = abstraction()\n" + render(at(view, rep));
    r.command_server_text = "value command_server_abs = abstraction()\n" + render(at(command, rep));

    Node defs = s.prepare(r.view_server_text + " ;\n\n" + r.command_server_text);
    for (std::size_t i = 0; i < defs.children.size(); ++i) {
      const Node& item = defs.children[i];
      ValueId id = s.bind(item.text, reflect(item.children.front(), engine));
      detail::substitute_suffix(defs.children, i + 1, item.text, make_link(id, item.text));
    }
    load_corpus(s, "cs_system2.adl");
    auto cs2 = s.lookup("CS_system2")->as<BehaviourValue>().cell;
    std::map<std::string, std::uint64_t> part_ids;
    for (const auto& c : cs2->children) {
      if (c->label) part_ids[*c->label] = c->id;
    }

    std::size_t mark = engine.trace().size();
    engine.run(100000);
    s.load("via " + render(start_link) + " send");
    engine.run(100000);
    s.feed();
    engine.run(100000);
    r.displayed_after = log_size(s);
    s.feed();
    engine.run(100000);

    r.trace = engine.trace();
    auto groups = thread_groups(r.trace);
    auto in_part = [&](const Event& e, const char* key, const std::string& label) {
      auto it = groups.find(e.data[key].get<std::uint64_t>());
      return it != groups.end() && it->second == part_ids[label];
    };
    auto class_of = [&](const std::string& label, const std::string& name) -> std::uint64_t {
      for (const auto& c : engine.find_behaviour(part_ids[label])->endpoints) {
        if (c.first == name) return find_class(c.second.as<ConnectionValue>().cell)->id;
      }
      return 0;
    };
    std::uint64_t get_cls = class_of("client", "c_get");
    std::uint64_t start_cls = class_of("client", "c_start");
    std::uint64_t stop_cls = class_of("client", "c_stop");
    for (std::size_t i = mark; i < r.trace.size(); ++i) {
      const Event& e = r.trace[i];
      if (e.kind != "comm") continue;
      auto conn = e.data["conn"].get<std::uint64_t>();
      if (conn == get_cls && in_part(e, "sender", "view_server") && in_part(e, "receiver", "client")) {
        ++r.view_server_deliveries;
      }
      if (conn == start_cls && in_part(e, "receiver", "command_server")) ++r.start_comms_after;
      if (conn == stop_cls && in_part(e, "receiver", "command_server")) ++r.stop_comms_after;
    }
    auto calls = s.native_calls();
    r.start_calls = calls["start_experiment"];
    r.stop_calls = calls["stop_experiment"];
  } catch (const std::exception& e) {
    r.failure = e.what();
  }
  return r;
}

}  // namespace adl::testing
