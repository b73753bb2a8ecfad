// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures.

#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "adl/serialize.hpp"
#include "support/support.hpp"

using namespace adl;
using adl::testing::count_kind;
using adl::testing::load_corpus;
using adl::testing::read_corpus;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
}

Value binding(const Session& s, const std::string& name) {
  auto v = s.lookup(name);
  if (!v) throw std::runtime_error("no binding " + name);
  return *v;
}

Value field(const Value& view, const std::string& name) {
  const auto& v = view.as<ViewValue>();
  for (std::size_t i = 0; i < v.names.size(); ++i) {
    if (v.names[i] == name) return v.values[i];
  }
  throw std::runtime_error("no field " + name);
}

// ---- replication ----

Outcome replication() {
  std::vector<std::int64_t> expected;
  for (std::int64_t n = 1; n <= 10; ++n) expected.push_back(n + n);  // the server doubles
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Session s(seed);
    s.load(read_corpus("replicate_doubling.adl"));
    RunResult r = s.engine().run(10000);
    if (r.hit_limit) return {false, "seed " + std::to_string(seed) + " did not settle"};
    std::vector<std::int64_t> got;
    Value replies = binding(s, "replies");
    for (const auto& v : replies.as<LocationValue>().cell->contents.as<SequenceValue>().items) {
      got.push_back(v.as<std::int64_t>());
    }
    std::sort(got.begin(), got.end());
    if (got != expected) return {false, "seed " + std::to_string(seed) + " replies differ"};
    std::size_t clones = count_kind(s.engine().trace(), "clone");
    if (clones != 10) return {false, "seed " + std::to_string(seed) + " made " + std::to_string(clones) + " clones"};
  }
  return {true, "seeds 1..20: replies {2,4,..,20}, 10 clones each"};
}

// ---- decompose and recompose ----

Outcome decompose_roundtrip() {
  Session s(8);
  load_corpus(s, "position_decompose.adl");
  Value seq = binding(s, "pos_seq");
  const auto& items = seq.as<SequenceValue>().items;
  if (items.size() != 2) return {false, "length " + std::to_string(items.size())};
  std::string l1 = field(items[0], "label").as<std::string>();
  std::string l2 = field(items[1], "label").as<std::string>();
  if (l1 != "pos_client" || l2 != "pos_server") return {false, "labels " + l1 + ", " + l2};
  if (binding(s, "comp1_label").as<std::string>() != l1) return {false, "comp1_label differs"};
  for (const auto& it : items) {
    if (state_of(*field(it, "bhvr").as<BehaviourValue>().cell) != BehaviourState::kSuspended) {
      return {false, "a part is not suspended"};
    }
  }
  std::size_t before = count_kind(s.engine().trace(), "comm");
  load_corpus(s, "position_recompose.adl");
  s.engine().run(1000);
  std::size_t after = count_kind(s.engine().trace(), "comm") - before;
  if (after < 1) return {false, "no communication after recomposition"};
  return {true, "length 2, pos_client then pos_server, both suspended; " + std::to_string(after) +
                    " comms after recomposition"};
}

// ---- unification ----

Outcome unification() {
  Session with(9);
  with.load(read_corpus("tracking_unify.adl"));
  with.engine().run(1000);
  std::size_t requests = 0, replies = 0;
  for (const auto& e : with.engine().trace()) {
    if (e.kind != "comm") continue;
    if (e.data["payload"].empty()) ++requests;
    else if (e.data["payload"][0].get<std::string>().find("56.34N") != std::string::npos) ++replies;
  }
  if (requests < 1 || replies < 1) return {false, "unified system exchanged no request/reply pair"};

  Session without(9);
  load_corpus(without, "tracking_no_unify.adl");
  auto system = binding(without, "system").as<BehaviourValue>().cell;
  std::uint64_t start = without.engine().step_count();
  if (without.engine().await_quiescence(system, 1000) != AwaitResult::kQuiescent) {
    return {false, "ununified system did not quiesce within 1000 steps"};
  }
  std::uint64_t steps = without.engine().step_count() - start;
  if (count_kind(without.engine().trace(), "comm") != 0) return {false, "ununified parts communicated"};
  std::size_t blocked = 0;
  for (const auto& part : system->children) {
    for (const auto& t : adl::testing::running_threads(without.engine())) {
      auto p = t->parent.lock();
      if (p == part && !adl::testing::comm_heads(without.engine(), *t).empty()) {
        ++blocked;
        break;
      }
    }
  }
  if (system->children.size() != 2 || blocked != 2) return {false, "parts not both blocked"};
  return {true, std::to_string(requests) + " requests, " + std::to_string(replies) +
                    " replies with unification; without, quiescent after " + std::to_string(steps) +
                    " steps with both parts blocked"};
}

// ---- client-server evolution ----

Outcome evolution() {
  std::ostringstream detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto r = adl::testing::run_evolution(seed);
    std::string at = "seed " + std::to_string(seed) + ": ";
    if (!r.failure.empty()) return {false, at + r.failure};
    if (r.displayed_before < 3) return {false, at + "only " + std::to_string(r.displayed_before) + " displays"};
    if (r.labels != std::vector<std::string>{"client", "server"}) return {false, at + "labels differ"};
    if (r.view_server_deliveries < 1) return {false, at + "no view from the view server"};
    if (r.stop_comms_after < 1) return {false, at + "stop did not reach the command server"};
    if (r.start_comms_after < 1) return {false, at + "the late start was not consumed"};
    if (r.stop_calls != 1) return {false, at + std::to_string(r.stop_calls) + " stop calls"};
    if (r.start_calls != 1) return {false, at + "late start reached the experiment"};
    if (seed == 1) {
      detail << r.displayed_before << " displays before, " << r.view_server_deliveries
             << " views from view_server after, stop routed to command_server, start ignored, "
             << "stop_experiment called once";
    }
  }
  return {true, "seeds 1..10; seed 1: " + detail.str()};
}

// ---- determinism ----

std::string corpus_trace(const std::string& name, std::uint64_t seed) {
  Session s(seed);
  if (name == "position_decompose.adl") {
    load_corpus(s, "position_decompose.adl");
    load_corpus(s, "position_recompose.adl");
  } else {
    s.load(read_corpus(name));
  }
  s.engine().run(2000);
  return to_jsonl(s.engine().trace());
}

Outcome determinism() {
  const std::vector<std::string> corpus{"replicate_doubling.adl", "choose_three.adl", "abstraction_apply.adl",
                                        "position_compose.adl",   "position_decompose.adl", "tracking_unify.adl",
                                        "tracking_no_unify.adl"};
  std::size_t events = 0;
  for (const auto& name : corpus) {
    std::string first = corpus_trace(name, 42);
    for (int i = 0; i < 2; ++i) {
      if (corpus_trace(name, 42) != first) return {false, name + " differs between runs"};
    }
    events += static_cast<std::size_t>(std::count(first.begin(), first.end(), '\n'));
  }
  std::string evo = to_jsonl(adl::testing::run_evolution(42).trace);
  for (int i = 0; i < 2; ++i) {
    if (to_jsonl(adl::testing::run_evolution(42).trace) != evo) return {false, "evolution differs between runs"};
  }
  events += static_cast<std::size_t>(std::count(evo.begin(), evo.end(), '\n'));
  return {true, "3 runs byte-identical for the whole corpus and the evolution (" + std::to_string(events) + " events)"};
}

// ---- reflect of reify ----

// Restores `snap` twice. One copy recomposes the original suspended parts,
// the other recomposes parts rebuilt by reflect(reify(part)). `compose`
// receives the names to compose; `drive` continues the run.
std::string continuation(const json& snap, const std::vector<std::string>& parts, bool copies,
                         const std::function<std::string(const std::vector<std::string>&)>& compose,
                         const std::function<void(Session&)>& drive) {
  Session s(0);
  s.restore(snap);
  std::vector<std::string> names = parts;
  if (copies) {
    for (auto& n : names) {
      Value v = binding(s, n);
      Value copy = reflect(reify(v, s.engine()), s.engine());
      n += "_copy";
      s.bind(n, copy);
    }
  }
  s.engine().reseed(1234);
  s.engine().clear_trace();
  auto t = s.load(compose(names));
  s.settle(t, 1000);
  drive(s);
  std::string out;
  for (const auto& line : canonical_trace(s.engine().trace())) out += line + "\n";
  return out;
}

Outcome reflect_reify() {
  std::size_t compared = 0;
  // Position client and server parts.
  {
    Session s(5);
    load_corpus(s, "position_decompose.adl");
    json snap = s.snapshot();
    auto compose = [](const std::vector<std::string>& n) {
      return "value again = compose{ pos_client as " + n[0] + " and pos_server as " + n[1] + " } ;\nvia tick send ;\nvia tick send";
    };
    auto drive = [](Session& x) { x.engine().run(2000); };
    std::string a = continuation(snap, {"client_val", "server_val"}, false, compose, drive);
    std::string b = continuation(snap, {"client_val", "server_val"}, true, compose, drive);
    if (a != b) return {false, "position parts diverge"};
    if (a.find("\"comm\"") == std::string::npos) return {false, "position continuation is empty"};
    compared += 2;
  }
  // Client and server of the first client-server system.
  {
    Session s(6);
    s.install_scenario(parse_json(read_corpus("cs_scenario.json")));
    for (const char* f : {"cs_client.adl", "cs_server.adl", "cs_system1.adl"}) load_corpus(s, f);
    s.engine().run(100000);
    load_corpus(s, "cs_decompose.adl");
    auto t = s.load("value client_part = cs_seq::1.bhvr ;\nvalue server_part = cs_seq::2.bhvr");
    s.settle(t, 100);
    json snap = s.snapshot();
    auto compose = [](const std::vector<std::string>& n) {
      return "value again = compose{ client as " + n[0] + " and server as " + n[1] +
             " where{ client::c_start unifies server::s_start, client::c_stop unifies server::s_stop,"
             " client::c_get unifies server::s_put } }";
    };
    auto drive = [](Session& x) {
      x.engine().run(100000);
      while (x.feed()) x.engine().run(100000);
    };
    std::string a = continuation(snap, {"client_part", "server_part"}, false, compose, drive);
    std::string b = continuation(snap, {"client_part", "server_part"}, true, compose, drive);
    if (a != b) {
      if (std::getenv("ADL_DUMP")) std::cerr << a << "----\n" << b;
      return {false, "client-server parts diverge"};
    }
    if (a.find("\"call\"") == std::string::npos) return {false, "client-server continuation never stopped"};
    compared += 2;
  }
  return {true, std::to_string(compared) + " suspended parts; reflected copies give equal canonical traces"};
}

// ---- type completeness ----

std::vector<std::string> constructors_over(const std::string& t, const std::string& u) {
  return {"location[" + t + "]",
          "sequence[" + t + "]",
          "view[f: " + t + "]",
          "view[f: " + t + ", g: " + u + "]",
          "function[" + t + "] -> " + u,
          "function[] -> " + t,
          "connection[" + t + "]",
          "connection[" + t + ", " + u + "]",
          "abstraction[" + t + "]",
          "abstraction[" + u + ", " + t + "]"};
}

Outcome type_completeness() {
  const std::vector<std::string> base{"integer", "real", "boolean", "string", "any", "behaviour"};
  std::vector<std::string> depth2 = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    for (const auto& c : constructors_over(base[i], base[(i + 1) % base.size()])) depth2.push_back(c);
  }
  std::size_t cases = 0, max_depth = 0;
  std::string failure;
  auto depth = [](const Type& t) {
    std::function<std::size_t(const Type&)> d = [&](const Type& x) {
      std::size_t m = 0;
      for (const auto& a : x.args) m = std::max(m, d(a));
      return m + 1;
    };
    return d(t);
  };
  for (std::size_t i = 0; i < depth2.size() && failure.empty(); ++i) {
    const std::string& component = depth2[i];
    const std::string& other = depth2[(i * 7 + 3) % depth2.size()];
    for (const auto& text : constructors_over(component, other)) {
      ++cases;
      Type t;
      try {
        t = parse_type(text);
      } catch (const std::exception& e) {
        failure = text + " does not parse";
        break;
      }
      max_depth = std::max(max_depth, depth(t));
      if (parse_type(to_string(t)) != t) {
        failure = text + " does not respell";
        break;
      }
      Session s(1);
      std::string program = "value id = function( x : " + text + " ) -> " + text + " { x } ;\n" +
                            "value c = connection( " + text + " ) ;\n" +
                            "value pass = abstraction( x : " + text + " ) { via c send id( x ) } ;\n" +
                            "value take = abstraction() { via c receive y : " + text + " } ;\n" +
                            "value empty = sequence[" + text + "]{} ;\n" +
                            "value box = location( empty ) ;\n" + "box := empty ++ empty";
      try {
        auto th = s.load(program);
        s.settle(th, 1000);
        if (!th->terminated || !th->error.empty()) failure = text + " declarations did not run";
      } catch (const std::exception& e) {
        failure = text + " in declarations: " + e.what();
      }
      if (!failure.empty()) break;
    }
  }
  if (!failure.empty()) return {false, failure};
  if (cases < 500) return {false, "only " + std::to_string(cases) + " cases"};
  return {true, std::to_string(cases) + " cases up to depth " + std::to_string(max_depth) +
                    ", 10 constructor positions, parse_type and declarations"};
}

// ---- choose uniformity ----

Outcome choose_uniformity() {
  const int trials = 10000;
  std::array<int, 4> counts{};
  for (int seed = 1; seed <= trials; ++seed) {
    Session s(static_cast<std::uint64_t>(seed));
    s.load(read_corpus("choose_three.adl"));
    s.engine().run(1000);
    Value picked = binding(s, "picked");
    auto v = picked.as<LocationValue>().cell->contents.as<std::int64_t>();
    if (v < 1 || v > 3) return {false, "seed " + std::to_string(seed) + " picked " + std::to_string(v)};
    ++counts[static_cast<std::size_t>(v)];
  }
  std::ostringstream d;
  bool ok = true;
  for (int b = 1; b <= 3; ++b) {
    double f = static_cast<double>(counts[static_cast<std::size_t>(b)]) / trials;
    ok = ok && std::abs(f - 1.0 / 3.0) <= 0.05;
    d << (b > 1 ? ", " : "") << "client" << b << " " << f;
  }
  return {ok, d.str() + " over 10000 seeds (tolerance 1/3 +- 0.05)"};
}

// ---- snapshots across processes ----

std::vector<std::string> lines_of(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(adl::testing::read_file(path));
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

Outcome snapshot_roundtrip() {
  const std::string dir = "/tmp/adl_acceptance_" + std::to_string(::getpid());
  std::filesystem::create_directories(dir);
  const std::string snap = dir + "/snap.json", prefix = dir + "/prefix.jsonl", full = dir + "/full.jsonl",
                    resumed = dir + "/resumed.jsonl";
  const std::string exe = ADL_EXE;
  const std::string scenario = adl::testing::corpus_path("cs_scenario.json");
  const std::string tail = ":feed\n:run\n:feed\n:run\n";
  std::string first = ":load " + adl::testing::corpus_path("cs_client.adl") + "\n:load " +
                      adl::testing::corpus_path("cs_server.adl") + "\n:load " +
                      adl::testing::corpus_path("cs_system1.adl") + "\n:run\n:quiesce CS_system1\n" +
                      ":trace-save " + prefix + "\n:save " + snap + "\n" + tail + ":trace-save " + full + "\n";
  auto a = adl::testing::run_command(exe + " repl --seed 11 --scenario " + scenario, first);
  if (a.exit_code != 0) return {false, "first process failed"};
  auto b = adl::testing::run_command(exe + " repl", ":load-snapshot " + snap + "\n" + tail + ":trace-save " + resumed + "\n");
  if (b.exit_code != 0) return {false, "second process failed"};
  auto p = lines_of(prefix), f = lines_of(full), r = lines_of(resumed);
  std::filesystem::remove_all(dir);
  if (f.size() < p.size() || !std::equal(p.begin(), p.end(), f.begin())) return {false, "prefix is not a prefix"};
  std::vector<std::string> suffix(f.begin() + static_cast<std::ptrdiff_t>(p.size()), f.end());
  if (suffix.empty()) return {false, "nothing happened after the snapshot"};
  if (suffix != r) {
    return {false, "continuation differs (" + std::to_string(suffix.size()) + " vs " + std::to_string(r.size()) +
                       " events)"};
  }
  return {true, std::to_string(r.size()) + " events after the snapshot identical in a fresh process"};
}

}  // namespace

int main() {
  report("replicate doubling", replication);
  report("decompose and recompose", decompose_roundtrip);
  report("connection unification", unification);
  report("client-server evolution end to end", evolution);
  report("determinism", determinism);
  report("reflect of reify", reflect_reify);
  report("type completeness", type_completeness);
  report("choose uniformity", choose_uniformity);
  report("snapshot roundtrip", snapshot_roundtrip);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures;
}
