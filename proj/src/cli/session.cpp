#include "adl/session.hpp"

#include "adl/reflection.hpp"
#include "adl/serialize.hpp"
#include "runtime/terms.hpp"

namespace adl {

using nlohmann::json;

CheckFailure::CheckFailure(std::vector<TypeError> errors)
    : Error(errors.empty() ? std::string("type check failed") : errors.front().message),
      errors_(std::move(errors)) {}

Value value_from_json(const json& j, const Type& t) {
  auto bad = [&]() {
    return Error("cannot read " + j.dump() + " as a value of type " + to_string(t));
  };
  switch (t.kind) {
    case TypeKind::kInteger:
      if (!j.is_number_integer()) throw bad();
      return Value{j.get<std::int64_t>()};
    case TypeKind::kReal:
      if (!j.is_number()) throw bad();
      return Value{j.get<double>()};
    case TypeKind::kBoolean:
      if (!j.is_boolean()) throw bad();
      return Value{j.get<bool>()};
    case TypeKind::kString:
      if (!j.is_string()) throw bad();
      return Value{j.get<std::string>()};
    case TypeKind::kSequence: {
      if (!j.is_array()) throw bad();
      SequenceValue s{t.element(), {}};
      for (const auto& item : j) s.items.push_back(value_from_json(item, t.element()));
      return Value{std::move(s)};
    }
    case TypeKind::kView: {
      if (!j.is_object() || j.size() != t.fields.size()) throw bad();
      ViewValue v;
      for (std::size_t i = 0; i < t.fields.size(); ++i) {
        if (!j.contains(t.fields[i])) throw bad();
        v.names.push_back(t.fields[i]);
        v.values.push_back(value_from_json(j[t.fields[i]], t.args[i]));
      }
      return Value{std::move(v)};
    }
    case TypeKind::kAny: {
      if (!j.is_object() || !j.contains("type") || !j.contains("value")) throw bad();
      Type inner = parse_type(j["type"].get<std::string>());
      return make_any(value_from_json(j["value"], inner));
    }
    default:
      throw bad();
  }
}

Session::Session(std::uint64_t seed) : engine_(seed) {
  engine_.on_session_binding = [this](const std::string& name, ValueId id) {
    bindings_[name] = id;
  };
}

std::optional<Value> Session::lookup(const std::string& name) const {
  auto it = bindings_.find(name);
  if (it == bindings_.end()) return std::nullopt;
  return engine_.store().lookup(it->second);
}

ValueId Session::bind(const std::string& name, Value v) {
  ValueId id = engine_.store().bind(std::move(v));
  bindings_[name] = id;
  return id;
}

Node Session::resolve(Node program) const {
  for (const auto& [name, id] : bindings_) {
    detail::substitute(program, name, make_link(id, name));
  }
  return program;
}

Node Session::prepare(std::string_view text) {
  TypeAliases aliases = aliases_;
  ParseResult parsed = parse(text, engine_.store(), &aliases);
  if (!parsed.ok()) throw ParseFailure(std::move(parsed.errors));
  Node program = resolve(std::move(*parsed.tree));
  CheckResult checked = typecheck(program, TypeEnv{}, engine_.store());
  if (!checked.ok()) throw CheckFailure(std::move(checked.errors));
  aliases_ = std::move(aliases);
  return program;
}

std::shared_ptr<BehaviourCell> Session::load(std::string_view text) {
  return engine_.spawn(prepare(text), nullptr, true);
}

RunResult Session::settle(const std::shared_ptr<BehaviourCell>& thread, std::uint64_t max_steps) {
  RunResult r;
  while (!thread->terminated) {
    if (r.steps >= max_steps) {
      r.hit_limit = true;
      break;
    }
    r.last = engine_.step();
    if (r.last != StepResult::kProgressed) break;
    ++r.steps;
  }
  return r;
}

RunResult Session::run_all(std::uint64_t max_steps) {
  RunResult total;
  for (;;) {
    RunResult r = engine_.run(max_steps - total.steps);
    total.steps += r.steps;
    total.last = r.last;
    total.hit_limit = r.hit_limit;
    if (r.hit_limit || !feed()) return total;
  }
}

void Session::register_natives(const json& natives) {
  for (const auto& [name, spelling] : natives.items()) {
    Type t = parse_type(spelling.get<std::string>(), &aliases_);
    if (!t.is(TypeKind::kFunction)) throw Error("scenario native '" + name + "' is not a function");
    auto params = std::vector<Type>(t.params().begin(), t.params().end());
    Type result = t.result();
    Value answer;
    switch (result.kind) {
      case TypeKind::kBoolean: answer = Value{true}; break;
      case TypeKind::kInteger: answer = Value{std::int64_t{0}}; break;
      case TypeKind::kReal: answer = Value{0.0}; break;
      case TypeKind::kString: answer = Value{std::string()}; break;
      default:
        throw Error("scenario native '" + name + "' must return a scalar");
    }
    engine_.register_native(name, NativeFunction{params, result,
                                                 [this, name, answer](Engine&, const std::vector<Value>&) {
                                                   ++native_calls_[name];
                                                   return answer;
                                                 }});
  }
}

void Session::install_scenario(const json& config) {
  if (scenario_) throw Error("a scenario is already installed");
  try {
    if (config.contains("aliases")) {
      for (const auto& [name, spelling] : config["aliases"].items()) {
        aliases_[name] = parse_type(spelling.get<std::string>(), &aliases_);
      }
    }
    std::map<std::string, Type> conn_types;
    if (config.contains("connections")) {
      for (const auto& [name, spelling] : config["connections"].items()) {
        Type t = parse_type(spelling.get<std::string>(), &aliases_);
        if (!t.is(TypeKind::kConnection)) throw Error("scenario connection '" + name + "' has type " + to_string(t));
        auto c = std::make_shared<ConnectionCell>();
        c->id = engine_.store().next_cell_id();
        c->payload = t.args;
        bind(name, Value{ConnectionValue{std::move(c)}});
        conn_types[name] = t;
      }
    }
    if (config.contains("natives")) {
      register_natives(config["natives"]);
      for (const auto& [name, spelling] : config["natives"].items()) bind(name, engine_.native_value(name));
    }
    if (config.contains("sinks")) {
      for (const auto& s : config["sinks"]) {
        const std::string name = s.get<std::string>();
        auto it = conn_types.find(name);
        if (it == conn_types.end() || it->second.args.size() != 1) {
          throw Error("scenario sink '" + name + "' must be a scenario connection with one payload");
        }
        const Type& item = it->second.args.front();
        ValueId log = bind(name + "_log", Value{LocationValue{std::make_shared<LocationCell>(LocationCell{
                                               engine_.store().next_cell_id(), Type::SequenceOf(item),
                                               Value{SequenceValue{item, {}}}})}});
        std::string c = "@[" + std::to_string(raw(bindings_.at(name))) + ":" + name + "]";
        std::string l = "@[" + std::to_string(raw(log)) + ":" + name + "_log]";
        std::string text = "replicate { via " + c + " receive v : " + to_string(item) + " ; " + l +
                           " := deref " + l + " ++ sequence{ v } }";
        ParseResult p = parse(text, engine_.store());
        if (!p.ok()) throw ParseFailure(std::move(p.errors));
        engine_.spawn(std::move(p.tree->children.front()));
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed scenario: ") + e.what());
  }
  scenario_ = Scenario{config, 0};
  feed();
}

std::size_t Session::phases_left() const {
  if (!scenario_ || !scenario_->config.contains("phases")) return 0;
  return scenario_->config["phases"].size() - scenario_->next_phase;
}

bool Session::feed() {
  if (phases_left() == 0) return false;
  const json& phase = scenario_->config["phases"][scenario_->next_phase++];
  std::string text = "{";
  bool first = true;
  for (const auto& inj : phase) {
    const std::string name = inj.at("send").get<std::string>();
    auto value = lookup(name);
    if (!value || !value->holds<ConnectionValue>()) throw Error("scenario sends on unknown connection '" + name + "'");
    const auto& payload = value->as<ConnectionValue>().cell->payload;
    json values = inj.value("values", json::array());
    if (values.size() != payload.size()) {
      throw Error("scenario send on '" + name + "' needs " + std::to_string(payload.size()) + " value(s)");
    }
    text += first ? " " : " ; ";
    first = false;
    text += "via @[" + std::to_string(raw(bindings_.at(name))) + ":" + name + "] send";
    for (std::size_t i = 0; i < payload.size(); ++i) {
      text += (i ? ", " : " ") + render(reify(value_from_json(values[i], payload[i]), engine_));
    }
  }
  text += " }";
  if (first) return true;
  ParseResult p = parse(text, engine_.store());
  if (!p.ok()) throw ParseFailure(std::move(p.errors));
  engine_.spawn(std::move(p.tree->children.front()));
  return true;
}

json Session::snapshot() const {
  json bindings = json::object();
  for (const auto& [name, id] : bindings_) bindings[name] = raw(id);
  json aliases = json::object();
  for (const auto& [name, t] : aliases_) aliases[name] = to_string(t);
  json calls = json::object();
  for (const auto& [name, n] : native_calls_) calls[name] = n;
  json out = {{"version", 1},
              {"engine", engine_.snapshot()},
              {"bindings", bindings},
              {"aliases", aliases},
              {"native_calls", calls}};
  if (scenario_) out["scenario"] = {{"config", scenario_->config}, {"next_phase", scenario_->next_phase}};
  return out;
}

void Session::restore(const json& snap) {
  try {
    if (snap.at("version").get<int>() != 1) throw SerializationError("unsupported session snapshot version");
    TypeAliases aliases;
    for (const auto& [name, spelling] : snap.at("aliases").items()) {
      aliases[name] = parse_type(spelling.get<std::string>(), &aliases);
    }
    aliases_ = std::move(aliases);
    scenario_.reset();
    if (snap.contains("scenario")) {
      const json& config = snap["scenario"].at("config");
      if (config.contains("natives")) register_natives(config["natives"]);
      scenario_ = Scenario{config, snap["scenario"].at("next_phase").get<std::size_t>()};
    }
    engine_.restore(snap.at("engine"));
    bindings_.clear();
    for (const auto& [name, id] : snap.at("bindings").items()) {
      ValueId v{id.get<std::uint64_t>()};
      if (!engine_.store().contains(v)) throw SerializationError("binding '" + name + "' names an unknown id");
      bindings_[name] = v;
    }
    native_calls_.clear();
    for (const auto& [name, n] : snap.at("native_calls").items()) native_calls_[name] = n.get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw SerializationError(std::string("malformed session snapshot: ") + e.what());
  }
}

}  // namespace adl
