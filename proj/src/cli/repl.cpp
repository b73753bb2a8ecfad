#include "adl/repl.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adl/reflection.hpp"
#include "adl/serialize.hpp"
#include "runtime/terms.hpp"

namespace adl {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// True when every parse error sits at the end of the text, i.e. more input
// may complete it.
bool incomplete(const std::string& text, const ValueStore& store, const TypeAliases& aliases) {
  TypeAliases scratch = aliases;
  ParseResult r = parse(text, store, &scratch);
  if (r.ok()) return false;
  std::size_t end = text.find_last_not_of(" \t\r\n");
  end = end == std::string::npos ? 0 : end + 1;
  return std::all_of(r.errors.begin(), r.errors.end(),
                     [&](const ParseError& e) { return e.span.start >= end; });
}

std::string result_text(const RunResult& r) {
  if (r.hit_limit) return "max-steps";
  return std::string(step_result_name(r.last));
}

}  // namespace

Repl::Repl(Session& session, std::ostream& out) : session_(session), out_(out) {}

void Repl::run(std::istream& in, bool prompt) {
  std::string pending;
  std::string line;
  for (;;) {
    if (prompt) out_ << (pending.empty() ? "adl> " : "...> ") << std::flush;
    if (!std::getline(in, line)) break;
    if (pending.empty()) {
      std::string t = trim(line);
      if (t.empty()) continue;
      if (t[0] == ':') {
        if (!execute(t, in)) return;
        continue;
      }
    }
    pending += line + "\n";
    if (incomplete(pending, session_.engine().store(), session_.aliases())) continue;
    std::string text = std::move(pending);
    pending.clear();
    execute(text, in);
  }
  if (!trim(pending).empty()) execute(pending, in);
}

bool Repl::execute(const std::string& line, std::istream& in) {
  try {
    std::string t = trim(line);
    if (t.empty()) return true;
    if (t[0] != ':') {
      program(line);
      return true;
    }
    auto space = t.find_first_of(" \t");
    std::string name = t.substr(1, space == std::string::npos ? std::string::npos : space - 1);
    std::string arg = space == std::string::npos ? "" : trim(t.substr(space));
    if (name == "quit" || name == "q") return false;
    command(name, arg, in);
  } catch (const std::exception& e) {
    print_error(e);
  }
  out_ << std::flush;
  return true;
}

void Repl::print_error(const std::exception& e) {
  if (const auto* p = dynamic_cast<const ParseFailure*>(&e)) {
    for (const auto& err : p->errors()) out_ << format_diagnostic("<repl>", err.span, err.message) << "\n";
    return;
  }
  if (const auto* c = dynamic_cast<const CheckFailure*>(&e)) {
    for (const auto& err : c->errors()) out_ << format_diagnostic("<repl>", err.span, err.message) << "\n";
    return;
  }
  if (const auto* r = dynamic_cast<const ReflectError*>(&e)) {
    for (const auto& err : r->errors()) out_ << format_diagnostic("<repl>", err.span, err.message) << "\n";
    return;
  }
  out_ << "error: " << e.what() << "\n";
}

std::string Repl::describe(const Value& v) const {
  return summarize(v) + " : " + to_string(type_of_value(v));
}

Value Repl::named(const std::string& name) const {
  auto v = session_.lookup(name);
  if (!v) throw Error("no session binding named '" + name + "'");
  return *v;
}

void Repl::report_bindings(const std::map<std::string, ValueId>& before) {
  std::vector<std::pair<ValueId, std::string>> fresh;
  for (const auto& [name, id] : session_.bindings()) {
    auto it = before.find(name);
    if (it == before.end() || it->second != id) fresh.emplace_back(id, name);
  }
  std::sort(fresh.begin(), fresh.end());
  for (const auto& [id, name] : fresh) {
    out_ << "value " << name << " : " << to_string(type_of_value(session_.engine().store().lookup(id)))
         << "\n";
  }
}

void Repl::program(const std::string& text) {
  Engine& engine = session_.engine();
  auto before = session_.bindings();
  Node prog = session_.prepare(text);
  if (prog.children.size() == 1 && !prog.children.front().is(NodeKind::kValueDecl)) {
    const Node& item = prog.children.front();
    CheckResult c = typecheck(item, TypeEnv{}, engine.store());
    bool reference = item.is(NodeKind::kName) || item.is(NodeKind::kLink) ||
                     item.is(NodeKind::kIndex) || item.is(NodeKind::kProjection) ||
                     item.is(NodeKind::kDeref) || item.is(NodeKind::kAnyProject);
    if (c.type && (*c.type != Type::Behaviour() || reference)) {
      Value v = engine.evaluate(item, EvalContext{engine.root(), nullptr, nullptr});
      session_.bind("it", v);
      out_ << "it = " << describe(v) << "\n";
      return;
    }
  }
  auto thread = engine.spawn(std::move(prog), nullptr, true);
  RunResult r = session_.settle(thread, max_steps);
  report_bindings(before);
  if (!thread->error.empty()) {
    out_ << "fault: " << thread->error << "\n";
  } else if (!thread->terminated) {
    out_ << "! program blocked after " << r.steps << " steps (" << result_text(r) << ")\n";
  }
}

void Repl::command(const std::string& name, const std::string& arg, std::istream& in) {
  Engine& engine = session_.engine();
  auto behaviour = [&](const std::string& n) {
    Value v = named(n);
    if (!v.holds<BehaviourValue>()) throw Error("'" + n + "' is not a behaviour");
    return v.as<BehaviourValue>().cell;
  };
  std::istringstream args(arg);
  std::string first;
  args >> first;

  if (name == "load") {
    if (first.empty()) throw Error("usage: :load FILE");
    program(read_file(first));
    out_ << "loaded " << first << "\n";
  } else if (name == "run") {
    if (!first.empty()) adl::execute(named(first), engine);
    RunResult r = engine.run(max_steps);
    out_ << "ran " << r.steps << " steps: " << result_text(r) << "\n";
  } else if (name == "step") {
    std::uint64_t n = first.empty() ? 1 : std::stoull(first);
    std::uint64_t done = 0;
    StepResult last = StepResult::kProgressed;
    while (done < n && (last = engine.step()) == StepResult::kProgressed) ++done;
    out_ << "stepped " << done << ": " << step_result_name(last) << "\n";
  } else if (name == "quiesce") {
    if (first.empty()) throw Error("usage: :quiesce NAME [MAX_STEPS]");
    std::uint64_t limit = max_steps;
    if (args >> limit; args.fail()) limit = max_steps;
    auto b = behaviour(first);
    std::uint64_t start = engine.step_count();
    AwaitResult r = engine.await_quiescence(b, limit);
    out_ << first << (r == AwaitResult::kQuiescent ? " is quiescent" : " timed out") << " after "
         << engine.step_count() - start << " steps\n";
  } else if (name == "decompose") {
    if (first.empty()) throw Error("usage: :decompose NAME");
    auto b = behaviour(first);
    if (b->composition && !b->shell && !engine.quiescent(b)) {
      throw Error(first + " is not quiescent; run :quiesce " + first + " first");
    }
    Value seq = engine.decompose(b);
    session_.bind("it", seq);
    std::size_t i = 0;
    for (const auto& item : seq.as<SequenceValue>().items) {
      const auto& view = item.as<ViewValue>();
      const auto& part = view.values[1].as<BehaviourValue>().cell;
      out_ << ++i << ". " << view.values[0].as<std::string>() << " behaviour " << part->id << " ("
           << state_name(state_of(*part)) << ") connections:";
      for (const auto& c : view.values[2].as<SequenceValue>().items) {
        out_ << " " << c.as<ViewValue>().values[0].as<std::string>();
      }
      out_ << "\n";
    }
    out_ << "value it : " << to_string(type_of_value(seq)) << "\n";
  } else if (name == "reify") {
    if (first.empty()) throw Error("usage: :reify NAME");
    out_ << render(reify(named(first), engine)) << "\n";
  } else if (name == "edit") {
    if (first.empty()) throw Error("usage: :edit NAME");
    Value v = named(first);
    out_ << "! editing " << first << "; end the replacement with a line holding only '.'\n";
    out_ << render(reify(v, engine)) << "\n";
    std::string text;
    std::string line;
    while (std::getline(in, line) && trim(line) != ".") text += line + "\n";
    if (trim(text).empty()) {
      out_ << "! " << first << " unchanged\n";
      return;
    }
    Node prog = session_.prepare(text);
    Value r = reflect(prog, engine);
    session_.bind(first, r);
    out_ << "value " << first << " : " << to_string(type_of_value(r)) << "\n";
  } else if (name == "reflect") {
    std::string text;
    if (arg.empty()) {
      std::string line;
      while (std::getline(in, line) && trim(line) != ".") text += line + "\n";
    } else {
      text = std::filesystem::is_regular_file(arg) ? read_file(arg) : arg;
    }
    Node prog = session_.prepare(text);
    bool decls = !prog.children.empty() &&
                 std::all_of(prog.children.begin(), prog.children.end(),
                             [](const Node& n) { return n.is(NodeKind::kValueDecl); });
    if (!decls) {
      Value r = reflect(prog, engine);
      session_.bind("it", r);
      out_ << "value it : " << to_string(type_of_value(r)) << "\n";
      return;
    }
    for (std::size_t i = 0; i < prog.children.size(); ++i) {
      const Node& item = prog.children[i];
      Value r = reflect(item.children.front(), engine);
      ValueId id = session_.bind(item.text, r);
      detail::substitute_suffix(prog.children, i + 1, item.text, make_link(id, item.text));
      out_ << "value " << item.text << " : " << to_string(type_of_value(r)) << "\n";
    }
  } else if (name == "compose") {
    std::string target = "it";
    std::string text = arg;
    auto eq = arg.find('=');
    if (eq != std::string::npos && arg.compare(0, 7, "compose") != 0) {
      target = trim(arg.substr(0, eq));
      text = arg.substr(eq + 1);
    }
    Node prog = session_.prepare(text);
    if (prog.children.size() != 1 || !prog.children.front().is(NodeKind::kCompose)) {
      throw Error("usage: :compose [NAME =] compose{ ... }");
    }
    Value v = engine.evaluate(prog.children.front(), EvalContext{engine.root(), nullptr, nullptr});
    session_.bind(target, v);
    out_ << "value " << target << " : behaviour " << v.as<BehaviourValue>().cell->id << "\n";
  } else if (name == "seed") {
    if (first.empty()) throw Error("usage: :seed N");
    engine.reseed(std::stoull(first));
    out_ << "seed " << engine.seed() << "\n";
  } else if (name == "save") {
    if (first.empty()) throw Error("usage: :save FILE");
    std::ofstream f(first, std::ios::binary);
    if (!f) throw Error("cannot write '" + first + "'");
    f << session_.snapshot().dump() << "\n";
    out_ << "saved " << first << " at step " << engine.step_count() << "\n";
  } else if (name == "load-snapshot") {
    if (first.empty()) throw Error("usage: :load-snapshot FILE");
    session_.restore(parse_json(read_file(first)));
    out_ << "restored " << first << " at step " << engine.step_count() << "\n";
  } else if (name == "trace") {
    if (first == "on") {
      tracing_ = true;
      engine.on_event = [this](const Event& e) { out_ << "  " << to_json_line(e) << "\n"; };
    } else if (first == "off") {
      tracing_ = false;
      engine.on_event = nullptr;
    } else {
      throw Error("usage: :trace on|off");
    }
    out_ << "trace " << first << "\n";
  } else if (name == "trace-save") {
    if (first.empty()) throw Error("usage: :trace-save FILE");
    std::ofstream f(first, std::ios::binary);
    if (!f) throw Error("cannot write '" + first + "'");
    f << to_jsonl(engine.trace());
    out_ << "wrote " << engine.trace().size() << " events to " << first << "\n";
  } else if (name == "scenario") {
    if (first.empty()) throw Error("usage: :scenario FILE");
    session_.install_scenario(parse_json(read_file(first)));
    out_ << "scenario " << first << " installed, " << session_.phases_left() << " phase(s) held\n";
  } else if (name == "feed") {
    if (session_.feed()) {
      out_ << "released a phase, " << session_.phases_left() << " left\n";
    } else {
      out_ << "no phases left\n";
    }
  } else if (name == "bindings") {
    for (const auto& [n, id] : session_.bindings()) {
      out_ << n << " : " << to_string(type_of_value(engine.store().lookup(id))) << "\n";
    }
  } else if (name == "show") {
    if (first.empty()) throw Error("usage: :show NAME");
    Value v = named(first);
    out_ << first << " = " << describe(v) << "\n";
    if (v.holds<LocationValue>()) out_ << "deref " << first << " = " << summarize(v.as<LocationValue>().cell->contents) << "\n";
  } else if (name == "calls") {
    for (const auto& [n, count] : session_.native_calls()) out_ << n << " " << count << "\n";
  } else if (name == "help") {
    out_ << ":load F  :run [NAME]  :step [N]  :quiesce NAME [MAX]  :decompose NAME\n"
            ":reify NAME  :edit NAME  :reflect [TEXT|FILE]  :compose [NAME =] compose{..}\n"
            ":seed N  :save F  :load-snapshot F  :trace on|off  :trace-save F\n"
            ":scenario F  :feed  :bindings  :show NAME  :calls  :quit\n";
  } else {
    throw Error("unknown command :" + name + " (try :help)");
  }
}

}  // namespace adl
