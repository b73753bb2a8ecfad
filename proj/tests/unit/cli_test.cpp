#include <doctest.h>

#include <sstream>
#include <thread>

#include <httplib.h>

#include "adl/repl.hpp"
#include "adl/serialize.hpp"
#include "adl/server.hpp"
#include "support/support.hpp"

using namespace adl;
using adl::testing::read_corpus;
using adl::testing::run_command;

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t at = s.find(from); at != std::string::npos; at = s.find(from, at + to.size())) {
    s.replace(at, from.size(), to);
  }
  return s;
}

std::string repl_transcript(Session& s, const std::string& script) {
  std::ostringstream out;
  std::istringstream in(script);
  Repl repl(s, out);
  repl.run(in);
  return out.str();
}

void install_scenario(Session& s) { s.install_scenario(parse_json(read_corpus("cs_scenario.json"))); }

std::string exe() { return ADL_EXE; }

// A server on a free local port, stopped on destruction.
struct LiveServer {
  Session session{1};
  ControlServer server{session};
  int port = -1;
  std::thread thread;

  LiveServer() {
    port = server.bind_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
  }
  ~LiveServer() {
    server.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(10, 0);
    return c;
  }
};

json post(httplib::Client& c, const std::string& path, const json& body, int expected) {
  auto r = c.Post(path, body.dump(), "application/json");
  REQUIRE(r);
  INFO(r->body);
  CHECK(r->status == expected);
  return json::parse(r->body);
}

}  // namespace

TEST_CASE("values decode from JSON by type") {
  Value v = value_from_json(json::parse(R"({"step": 1, "status": "ok"})"),
                            parse_type("view[step: integer, status: string]"));
  CHECK(v.as<ViewValue>().values[0].as<std::int64_t>() == 1);
  Value seq = value_from_json(json::parse("[1.5, 2]"), parse_type("sequence[real]"));
  CHECK(seq.as<SequenceValue>().items.size() == 2);
  Value any = value_from_json(json::parse(R"({"type": "boolean", "value": true})"), Type::Any());
  CHECK(any.as<AnyValue>().witness == Type::Boolean());
  CHECK_THROWS_AS(value_from_json(json::parse("\"x\""), Type::Integer()), Error);
}

TEST_CASE("the scenario provides the experiment externals") {
  Session s(1);
  install_scenario(s);
  for (const char* name : {"exp_input", "user_input", "c_display", "c_display_log", "start_experiment",
                           "stop_experiment"}) {
    CHECK(s.lookup(name).has_value());
  }
  CHECK(s.phases_left() == 2);
  CHECK(s.feed());
  CHECK(s.feed());
  CHECK_FALSE(s.feed());
}

TEST_CASE("the evolution transcript matches the golden file") {
  std::string script = replace_all(adl::testing::read_file(std::string(ADL_GOLDEN_DIR) + "/evolution.repl"), "$CORPUS",
                                   ADL_CORPUS_DIR);
  Session s(7);
  install_scenario(s);
  std::string got = replace_all(repl_transcript(s, script), ADL_CORPUS_DIR, "$CORPUS");
  std::string want = adl::testing::read_file(std::string(ADL_GOLDEN_DIR) + "/evolution.out");
  CHECK(got == want);
}

TEST_CASE("seeded sessions give identical transcripts") {
  std::string script = ":seed 7\n:load " + adl::testing::corpus_path("replicate_doubling.adl") +
                       "\n:run\n:show replies\n:trace on\n:load " + adl::testing::corpus_path("choose_three.adl") +
                       "\n:run\n";
  Session a(0), b(0);
  std::string first = repl_transcript(a, script);
  CHECK(first == repl_transcript(b, script));
  CHECK(first.find("\"kind\":\"choose\"") != std::string::npos);
}

TEST_CASE("the REPL refuses to decompose a busy system") {
  Session s(2);
  std::string out = repl_transcript(s, ":load " + adl::testing::corpus_path("pingpong_loop.adl") +
                                           "\n:decompose loop\n:quiesce loop 50\n");
  CHECK(out.find("loop is not quiescent; run :quiesce loop first") != std::string::npos);
  CHECK(out.find("timed out") != std::string::npos);
}

TEST_CASE("the REPL decomposes, edits and recomposes") {
  Session s(3);
  std::string out = repl_transcript(
      s, ":load " + adl::testing::corpus_path("tracking_no_unify.adl") +
             "\n:quiesce system\n:decompose system\n"
             "value client_part = it::1.bhvr\nvalue server_part = it::2.bhvr\n"
             ":edit server_part\n{ value marker = 1 }\n.\n"
             ":compose again = compose{ a as client_part and b as server_part }\n:bindings\n");
  CHECK(out.find("1. pos_client behaviour") != std::string::npos);
  CHECK(out.find("2. pos_server behaviour") != std::string::npos);
  CHECK(out.find("again") != std::string::npos);
  CHECK(out.find("error") == std::string::npos);
}

TEST_CASE("REPL errors carry positions") {
  Session s(3);
  std::string out = repl_transcript(s, "value l = location( 3 ) ;\nl := true\n:reflect value x = nope\n");
  CHECK(out.find("<repl>:1:1: assignment type mismatch") != std::string::npos);
  CHECK(out.find("nope") != std::string::npos);
}

TEST_CASE("REPL snapshots restore the session") {
  std::string path = "/tmp/adl_unit_snapshot.json";
  Session a(4);
  repl_transcript(a, ":load " + adl::testing::corpus_path("position_decompose.adl") + "\n:save " + path + "\n");
  Session b(99);
  std::string out = repl_transcript(b, ":load-snapshot " + path + "\n:show comp1_label\n");
  CHECK(out.find("\"pos_client\"") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("control API on a fresh session") {
  LiveServer live;
  auto c = live.client();
  auto r = c.Get("/systems");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(json::parse(r->body) == json::array());
  CHECK(c.Get("/systems/999")->status == 404);

  json bad = post(c, "/reflect", {{"text", "value l = location( 3 ) ;\nl := true"}}, 422);
  REQUIRE(bad["errors"].is_array());
  REQUIRE_FALSE(bad["errors"].empty());
  CHECK(bad["errors"][0]["line"] == 2);
  post(c, "/reflect", {{"text", "value x = "}}, 422);

  json step = post(c, "/engine/step", {{"n", 5}}, 200);
  CHECK(step["steps"] == 0);
}

TEST_CASE("control API decompose and recompose") {
  LiveServer live;
  auto c = live.client();
  post(c, "/load", {{"text", read_corpus("pingpong_loop.adl")}, {"maxSteps", 50}}, 200);
  json systems = json::parse(c.Get("/systems")->body);
  REQUIRE(systems.size() == 1);
  std::string loop = "/systems/" + systems[0]["id"].dump();
  CHECK(systems[0]["state"] == "running");
  CHECK(c.Get(loop + "/hypercode")->status == 409);
  post(c, loop + "/decompose", json::object(), 409);

  post(c, "/load", {{"text", read_corpus("tracking_no_unify.adl")}}, 200);
  systems = json::parse(c.Get("/systems")->body);
  REQUIRE(systems.size() == 2);
  std::string sys = "/systems/" + systems[1]["id"].dump();
  json q = post(c, sys + "/quiesce", {{"maxSteps", 1000}}, 200);
  CHECK(q["result"] == "quiescent");
  json parts = post(c, sys + "/decompose", json::object(), 200);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0]["label"] == "pos_client");
  CHECK(parts[1]["label"] == "pos_server");
  std::vector<std::string> names;
  for (const auto& conn : parts[0]["connections"]) names.push_back(conn["name"]);
  CHECK(names == std::vector<std::string>{"out_request", "in_reply"});

  auto code = c.Get("/systems/" + parts[1]["behaviourId"].dump() + "/hypercode");
  REQUIRE(code);
  CHECK(code->status == 200);
  CHECK(json::parse(code->body)["text"].get<std::string>().find("replicate") != std::string::npos);

  json composed = post(c, "/compose",
                       {{"parts", {{{"label", "pos_client"}, {"behaviourId", parts[0]["behaviourId"]}},
                                   {{"label", "pos_server"}, {"behaviourId", parts[1]["behaviourId"]}}}},
                        {"unifications", json::array({json::array({"pos_client::out_request", "pos_server::in_request"}),
                                                      json::array({"pos_client::in_reply", "pos_server::out_reply"})})},
                        {"name", "fixed"}},
                       200);
  CHECK(composed["composition"] == true);
  std::size_t before = adl::testing::count_kind(live.session.engine().trace(), "comm");
  post(c, "/engine/step", {{"n", 20}}, 200);
  CHECK(adl::testing::count_kind(live.session.engine().trace(), "comm") > before);
  post(c, "/compose", {{"parts", {{{"label", "x"}, {"behaviourId", 123456}}}}}, 400);
}

TEST_CASE("control API streams events") {
  LiveServer live;
  std::string received;
  std::thread reader([&] {
    auto c = live.client();
    c.Get("/events", [&](const char* data, std::size_t n) {
      received.append(data, n);
      return received.find("\"kind\":\"comm\"") == std::string::npos;
    });
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(200));
  auto c = live.client();
  post(c, "/load", {{"text", read_corpus("position_compose.adl")}, {"maxSteps", 100}}, 200);
  reader.join();
  CHECK(received.find("data: {\"step\":") != std::string::npos);
}

TEST_CASE("adl run exit codes") {
  std::string trace = "/tmp/adl_unit_trace.jsonl";
  auto ok = run_command(exe() + " run " + adl::testing::corpus_path("replicate_doubling.adl") +
                        " --seed 42 --max-steps 10000 --trace " + trace);
  CHECK(ok.exit_code == 0);
  CHECK(adl::testing::read_file(trace).find("\"kind\":\"comm\"") != std::string::npos);
  std::remove(trace.c_str());

  auto bad = run_command(exe() + " run " + adl::testing::corpus_path("ill_typed.adl") + " 2>&1");
  CHECK(bad.exit_code == 1);
  CHECK(bad.out.find("ill_typed.adl:2:") != std::string::npos);

  auto loop = run_command(exe() + " run " + adl::testing::corpus_path("pingpong_loop.adl") + " --max-steps 100");
  CHECK(loop.exit_code == 2);

  auto check = run_command(exe() + " check " + adl::testing::corpus_path("tracking_unify.adl"));
  CHECK(check.exit_code == 0);
  CHECK(check.out.find(": ok") != std::string::npos);

  auto fmt = run_command(exe() + " fmt " + adl::testing::corpus_path("choose_three.adl"));
  CHECK(fmt.exit_code == 0);
  CHECK(fmt.out.find("choose{") != std::string::npos);
}

TEST_CASE("adl run drives the scenario to the end") {
  auto r = run_command(exe() + " run " + adl::testing::corpus_path("cs_system1.adl") + " --scenario " +
                       adl::testing::corpus_path("cs_scenario.json") + " 2>&1");
  // cs_system1 alone lacks the abstractions it composes.
  CHECK(r.exit_code == 1);
}

TEST_CASE("the programmatic evolution succeeds") {
  auto r = adl::testing::run_evolution(7);
  REQUIRE(r.failure.empty());
  CHECK(r.labels == std::vector<std::string>{"client", "server"});
  CHECK(r.view_server_text.find(":exp_input]") != std::string::npos);
  CHECK(r.command_server_text.find(":s_start]") != std::string::npos);
  CHECK(r.stop_calls == 1);
}
