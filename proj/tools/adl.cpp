#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "adl/repl.hpp"
#include "adl/serialize.hpp"
#include "adl/server.hpp"
#include "adl/session.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw adl::Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void report(const std::string& file, const std::exception& e) {
  if (const auto* p = dynamic_cast<const adl::ParseFailure*>(&e)) {
    for (const auto& err : p->errors()) std::cerr << adl::format_diagnostic(file, err.span, err.message) << "\n";
  } else if (const auto* c = dynamic_cast<const adl::CheckFailure*>(&e)) {
    for (const auto& err : c->errors()) std::cerr << adl::format_diagnostic(file, err.span, err.message) << "\n";
  } else {
    std::cerr << file << ": " << e.what() << "\n";
  }
}

int run(const std::string& file, std::uint64_t seed, std::uint64_t max_steps,
        const std::string& trace, const std::string& scenario) {
  adl::Session session(seed);
  adl::RunResult r;
  try {
    if (!scenario.empty()) session.install_scenario(adl::parse_json(read_file(scenario)));
    session.load(read_file(file));
    r = session.run_all(max_steps);
  } catch (const std::exception& e) {
    report(file, e);
    return 1;
  }
  if (!trace.empty()) {
    std::ofstream out(trace, std::ios::binary);
    out << adl::to_jsonl(session.engine().trace());
  }
  for (const auto& e : session.engine().trace()) {
    if (e.kind == "fault" || (e.kind == "terminate" && e.data.contains("error"))) {
      std::cerr << file << ": behaviour " << e.data["behaviour"] << ": " << e.data["error"].get<std::string>()
                << "\n";
    }
  }
  if (r.hit_limit) {
    std::cout << "stopped after " << r.steps << " steps (max-steps)\n";
    return 2;
  }
  std::cout << adl::step_result_name(r.last) << " after " << r.steps << " steps\n";
  return 0;
}

int check(const std::string& file) {
  std::string text;
  try {
    text = read_file(file);
  } catch (const std::exception& e) {
    report(file, e);
    return 1;
  }
  adl::ValueStore store;
  adl::TypeAliases aliases;
  adl::ParseResult parsed = adl::parse(text, store, &aliases);
  if (!parsed.ok()) {
    report(file, adl::ParseFailure(parsed.errors));
    return 1;
  }
  adl::CheckResult checked = adl::typecheck(*parsed.tree, adl::TypeEnv{}, store);
  if (!checked.ok()) {
    report(file, adl::CheckFailure(checked.errors));
    return 1;
  }
  std::cout << file << ": ok\n";
  return 0;
}

int fmt(const std::string& file) {
  try {
    adl::ValueStore store;
    adl::TypeAliases aliases;
    adl::ParseResult parsed = adl::parse(read_file(file), store, &aliases);
    if (!parsed.ok()) throw adl::ParseFailure(parsed.errors);
    std::cout << adl::render(*parsed.tree) << "\n";
    return 0;
  } catch (const std::exception& e) {
    report(file, e);
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpreter and runtime for an architecture description language"};
  app.require_subcommand(1);

  std::string file;
  std::string trace;
  std::string scenario;
  std::uint64_t seed = 0;
  std::uint64_t max_steps = 100000;
  int port = 8080;
  std::string host = "127.0.0.1";

  auto* run_cmd = app.add_subcommand("run", "parse, check and execute a program");
  run_cmd->add_option("file", file, "program file")->required();
  run_cmd->add_option("--seed", seed, "scheduler seed");
  run_cmd->add_option("--max-steps", max_steps, "reduction limit");
  run_cmd->add_option("--trace", trace, "write the event trace as JSON lines");
  run_cmd->add_option("--scenario", scenario, "experiment test double (JSON)");

  auto* check_cmd = app.add_subcommand("check", "parse and typecheck a program");
  check_cmd->add_option("file", file, "program file")->required();

  auto* fmt_cmd = app.add_subcommand("fmt", "print a program in canonical form");
  fmt_cmd->add_option("file", file, "program file")->required();

  auto* repl_cmd = app.add_subcommand("repl", "interactive session reading standard input");
  repl_cmd->add_option("--seed", seed, "scheduler seed");
  repl_cmd->add_option("--scenario", scenario, "experiment test double (JSON)");
  repl_cmd->add_option("--max-steps", max_steps, "reduction limit per command");

  auto* serve_cmd = app.add_subcommand("serve", "serve the control API");
  serve_cmd->add_option("--port", port, "TCP port");
  serve_cmd->add_option("--host", host, "address to bind");
  serve_cmd->add_option("--seed", seed, "scheduler seed");
  serve_cmd->add_option("--scenario", scenario, "experiment test double (JSON)");
  serve_cmd->add_option("--load", file, "program to load before serving");

  CLI11_PARSE(app, argc, argv);

  if (*run_cmd) return run(file, seed, max_steps, trace, scenario);
  if (*check_cmd) return check(file);
  if (*fmt_cmd) return fmt(file);

  adl::Session session(seed);
  try {
    if (!scenario.empty()) session.install_scenario(adl::parse_json(read_file(scenario)));
  } catch (const std::exception& e) {
    report(scenario, e);
    return 1;
  }
  if (*repl_cmd) {
    adl::Repl repl(session, std::cout);
    repl.max_steps = max_steps;
    repl.run(std::cin, isatty(0));
    return 0;
  }
  if (!file.empty()) {
    try {
      session.settle(session.load(read_file(file)), max_steps);
    } catch (const std::exception& e) {
      report(file, e);
      return 1;
    }
  }
  adl::ControlServer server(session);
  std::cerr << "serving on http://" << host << ":" << port << "\n";
  if (!server.listen(host, port)) {
    std::cerr << "cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}
