#include "adl/serialize.hpp"

#include <algorithm>

#include "adl/syntax.hpp"

namespace adl {

namespace {

constexpr int kVersion = 1;

json type_json(const Type& t) { return to_string(t); }

Type json_type(const json& j) {
  try {
    return parse_type(j.get<std::string>());
  } catch (const ParseFailure& e) {
    throw SerializationError("bad type in hyper-code: " + j.dump());
  }
}

std::vector<Type> json_types(const json& j) {
  std::vector<Type> out;
  for (const auto& t : j) out.push_back(json_type(t));
  return out;
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw SerializationError(std::string("missing field '") + key + "' in " +
                             j.dump().substr(0, 80));
  }
  return *it;
}

std::uint64_t key_number(const std::string& key) {
  try {
    return std::stoull(key);
  } catch (const std::exception&) {
    throw SerializationError("bad table key '" + key + "'");
  }
}

}  // namespace

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SerializationError("malformed hyper-code at offset " + std::to_string(e.byte) +
                             ": " + e.what());
  }
}

// ---------------------------------------------------------------- Encoder

Encoder::Encoder(const ValueStore& store, bool allow_running)
    : store_(store), allow_running_(allow_running) {}

void Encoder::define(ValueId id) {
  if (queued_.insert(id).second) pending_.push_back(id);
}

json Encoder::node(const Node& n) {
  json j;
  j["k"] = std::string(kind_name(n.kind));
  if (n.is(NodeKind::kLiteral)) {
    if (auto* i = std::get_if<std::int64_t>(&n.literal)) {
      j["t"] = "integer";
      j["v"] = *i;
    } else if (auto* r = std::get_if<double>(&n.literal)) {
      j["t"] = "real";
      j["v"] = *r;
    } else if (auto* b = std::get_if<bool>(&n.literal)) {
      j["t"] = "boolean";
      j["v"] = *b;
    } else {
      j["t"] = "string";
      j["v"] = std::get<std::string>(n.literal);
    }
    return j;
  }
  if (n.is(NodeKind::kLink)) {
    if (!store_.contains(n.link)) {
      throw SerializationError("unresolvable link @[" + std::to_string(raw(n.link)) + "]");
    }
    define(n.link);
    j["id"] = raw(n.link);
    if (!n.hint.empty()) j["hint"] = n.hint;
    return j;
  }
  if (!n.text.empty()) j["text"] = n.text;
  if (!n.names.empty()) j["names"] = n.names;
  if (!n.types.empty()) {
    json ts = json::array();
    for (const auto& t : n.types) ts.push_back(type_json(t));
    j["types"] = ts;
  }
  if (!n.unifications.empty()) {
    json us = json::array();
    for (const auto& u : n.unifications) {
      us.push_back({u.left_label, u.left_conn, u.right_label, u.right_conn});
    }
    j["where"] = us;
  }
  if (n.is(NodeKind::kIndex)) j["index"] = std::get<std::int64_t>(n.literal);
  if (!n.children.empty()) {
    json cs = json::array();
    for (const auto& c : n.children) cs.push_back(node(c));
    j["c"] = cs;
  }
  return j;
}

json Encoder::closure(const Closure& c) {
  json j;
  j["params"] = c.params;
  json ts = json::array();
  for (const auto& t : c.param_types) ts.push_back(type_json(t));
  j["types"] = ts;
  if (c.result) j["result"] = type_json(*c.result);
  if (!c.native.empty()) j["native"] = c.native;
  j["body"] = node(c.body);
  return j;
}

json Encoder::cell_ref_location(const std::shared_ptr<LocationCell>& c) {
  if (locations_.emplace(c->id, c).second) location_queue_.push_back(c);
  return c->id;
}

json Encoder::cell_ref_connection(const std::shared_ptr<ConnectionCell>& c) {
  for (auto p = c; p; p = p->parent) {
    if (!connections_.emplace(p->id, p).second) break;
  }
  return c->id;
}

void Encoder::behaviour_cell(const std::shared_ptr<BehaviourCell>& b) {
  if (behaviours_.emplace(b->id, b).second) {
    behaviour_queue_.push_back(b);
    for (const auto& c : b->children) behaviour_cell(c);
  }
}

json Encoder::value(const Value& v) {
  return std::visit(
      [&](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::int64_t>) {
          return {{"t", "integer"}, {"v", x}};
        } else if constexpr (std::is_same_v<T, double>) {
          return {{"t", "real"}, {"v", x}};
        } else if constexpr (std::is_same_v<T, bool>) {
          return {{"t", "boolean"}, {"v", x}};
        } else if constexpr (std::is_same_v<T, std::string>) {
          return {{"t", "string"}, {"v", x}};
        } else if constexpr (std::is_same_v<T, AnyValue>) {
          return {{"t", "any"}, {"witness", type_json(x.witness)}, {"v", value(*x.inner)}};
        } else if constexpr (std::is_same_v<T, SequenceValue>) {
          json items = json::array();
          for (const auto& i : x.items) items.push_back(value(i));
          return {{"t", "sequence"}, {"element", type_json(x.element)}, {"items", items}};
        } else if constexpr (std::is_same_v<T, ViewValue>) {
          json fields = json::array();
          for (size_t i = 0; i < x.names.size(); ++i) {
            fields.push_back({x.names[i], value(x.values[i])});
          }
          return {{"t", "view"}, {"fields", fields}};
        } else if constexpr (std::is_same_v<T, FunctionValue>) {
          json j = closure(*x.closure);
          j["t"] = "function";
          return j;
        } else if constexpr (std::is_same_v<T, AbstractionValue>) {
          json j = closure(*x.closure);
          j["t"] = "abstraction";
          return j;
        } else if constexpr (std::is_same_v<T, LocationValue>) {
          return {{"t", "location"}, {"cell", cell_ref_location(x.cell)}};
        } else if constexpr (std::is_same_v<T, ConnectionValue>) {
          return {{"t", "connection"}, {"cell", cell_ref_connection(x.cell)}};
        } else {
          if (!allow_running_ && state_of(*x.cell) == BehaviourState::kRunning) {
            throw SerializationError("cannot serialize running behaviour " +
                                     std::to_string(x.cell->id) +
                                     "; quiesce and decompose it first");
          }
          behaviour_cell(x.cell);
          return {{"t", "behaviour"}, {"cell", x.cell->id}};
        }
      },
      v.v);
}

json Encoder::encode_behaviour(const BehaviourCell& b) {
  json j;
  j["state"] = std::string(state_name(state_of(b)));
  j["thread"] = b.is_thread;
  j["label"] = b.label ? json(*b.label) : json(nullptr);
  j["comm_count"] = b.comm_count;
  if (b.is_thread) {
    j["cont"] = node(b.term);
    j["terminated"] = b.terminated;
    if (b.session_scope) j["session"] = true;
    if (!b.error.empty()) j["error"] = b.error;
    return j;
  }
  json parts = json::array();
  for (const auto& c : b.children) parts.push_back(c->id);
  j["parts"] = parts;
  j["composition"] = b.composition;
  j["suspended"] = b.suspended;
  j["shell"] = b.shell;
  json env = json::array();
  for (const auto& [name, v] : b.endpoints) env.push_back({name, value(v)});
  j["env"] = env;
  json pending = json::array();
  for (const auto& u : b.pending) {
    pending.push_back({u.left_label, u.left_conn, u.right_label, u.right_conn});
  }
  j["pending"] = pending;
  return j;
}

json Encoder::tables() {
  json defs = json::object();
  json locations = json::object();
  json behaviours = json::object();
  for (;;) {
    if (!pending_.empty()) {
      ValueId id = pending_.back();
      pending_.pop_back();
      auto it = store_.entries().find(id);
      if (it == store_.entries().end()) {
        throw SerializationError("unresolvable link @[" + std::to_string(raw(id)) + "]");
      }
      defs[std::to_string(raw(id))] = it->second ? value(*it->second) : json(nullptr);
    } else if (!location_queue_.empty()) {
      auto c = location_queue_.back();
      location_queue_.pop_back();
      locations[std::to_string(c->id)] = {{"type", type_json(c->content)},
                                          {"contents", value(c->contents)}};
    } else if (!behaviour_queue_.empty()) {
      auto b = behaviour_queue_.back();
      behaviour_queue_.pop_back();
      behaviours[std::to_string(b->id)] = encode_behaviour(*b);
    } else {
      break;
    }
  }
  for (auto& [key, j] : behaviours.items()) {
    auto parent = behaviours_.at(key_number(key))->parent.lock();
    j["parent"] = parent && behaviours_.count(parent->id) ? json(parent->id) : json(nullptr);
  }
  json connections = json::object();
  for (const auto& [id, c] : connections_) {
    json ts = json::array();
    for (const auto& t : c->payload) ts.push_back(type_json(t));
    connections[std::to_string(id)] = {
        {"payload", ts}, {"parent", c->parent ? json(c->parent->id) : json(nullptr)}};
  }
  return {{"defs", defs},
          {"cells",
           {{"locations", locations},
            {"connections", connections},
            {"behaviours", behaviours}}}};
}

std::string serialize(const Node& h, const ValueStore& store) {
  Encoder enc(store, false);
  json root = enc.node(h);
  json tables = enc.tables();
  json doc = {{"version", kVersion},
              {"root", root},
              {"defs", tables["defs"]},
              {"cells", tables["cells"]}};
  return doc.dump();
}

// ---------------------------------------------------------------- Decoder

Decoder::Decoder(ValueStore& store, bool preserve_ids)
    : store_(store), preserve_(preserve_ids) {}

void Decoder::load(const json& tables) {
  const json empty = json::object();
  const json& cells = tables.contains("cells") ? tables["cells"] : empty;
  auto section = [&](const char* name) -> const json& {
    return cells.contains(name) ? cells[name] : empty;
  };
  auto fresh = [&](std::uint64_t old) { return preserve_ ? old : store_.next_cell_id(); };

  for (const auto& [key, j] : section("connections").items()) {
    auto c = std::make_shared<ConnectionCell>();
    c->id = fresh(key_number(key));
    connections_[key_number(key)] = c;
  }
  for (const auto& [key, j] : section("locations").items()) {
    auto c = std::make_shared<LocationCell>();
    c->id = fresh(key_number(key));
    locations_[key_number(key)] = c;
  }
  for (const auto& [key, j] : section("behaviours").items()) {
    auto b = std::make_shared<BehaviourCell>();
    b->id = fresh(key_number(key));
    behaviours_[key_number(key)] = b;
  }

  const json& defs = tables.contains("defs") ? tables["defs"] : empty;
  std::vector<std::uint64_t> def_ids;
  for (const auto& [key, j] : defs.items()) def_ids.push_back(key_number(key));
  std::sort(def_ids.begin(), def_ids.end());
  for (auto old : def_ids) {
    ids_[old] = preserve_ ? ValueId{old} : store_.reserve();
  }

  for (const auto& [key, j] : section("connections").items()) {
    auto& c = connections_.at(key_number(key));
    c->payload = json_types(field(j, "payload"));
    const json& parent = field(j, "parent");
    if (!parent.is_null()) {
      auto it = connections_.find(parent.get<std::uint64_t>());
      if (it == connections_.end()) throw SerializationError("dangling connection parent");
      c->parent = it->second;
    }
  }
  for (const auto& [key, j] : section("locations").items()) {
    auto& c = locations_.at(key_number(key));
    c->content = json_type(field(j, "type"));
    c->contents = value(field(j, "contents"));
  }
  for (const auto& [key, j] : section("behaviours").items()) {
    auto& b = behaviours_.at(key_number(key));
    b->is_thread = field(j, "thread").get<bool>();
    if (!field(j, "label").is_null()) b->label = j["label"].get<std::string>();
    b->comm_count = j.value("comm_count", std::uint64_t{0});
    if (j.contains("parent") && !j["parent"].is_null()) {
      b->parent = behaviour(j["parent"].get<std::uint64_t>());
    }
    if (b->is_thread) {
      b->term = node(field(j, "cont"));
      b->terminated = j.value("terminated", false);
      b->session_scope = j.value("session", false);
      b->error = j.value("error", std::string());
      continue;
    }
    for (const auto& p : field(j, "parts")) {
      b->children.push_back(behaviour(p.get<std::uint64_t>()));
    }
    b->composition = j.value("composition", false);
    b->suspended = j.value("suspended", false);
    b->shell = j.value("shell", false);
    for (const auto& e : field(j, "env")) {
      b->endpoints.emplace_back(e.at(0).get<std::string>(), value(e.at(1)));
    }
    if (j.contains("pending")) {
      for (const auto& u : j["pending"]) {
        b->pending.push_back(Unification{u.at(0).get<std::string>(), u.at(1).get<std::string>(),
                                         u.at(2).get<std::string>(), u.at(3).get<std::string>()});
      }
    }
  }

  for (auto old : def_ids) {
    const json& j = defs[std::to_string(old)];
    if (j.is_null()) continue;
    if (preserve_) {
      store_.restore(ids_.at(old), value(j));
    } else {
      store_.fill(ids_.at(old), value(j));
    }
  }
}

ValueId Decoder::id(std::uint64_t old) const {
  auto it = ids_.find(old);
  if (it == ids_.end()) {
    throw SerializationError("link @[" + std::to_string(old) + "] has no definition");
  }
  return it->second;
}

std::shared_ptr<BehaviourCell> Decoder::behaviour(std::uint64_t old) const {
  auto it = behaviours_.find(old);
  if (it == behaviours_.end()) {
    throw SerializationError("unknown behaviour cell " + std::to_string(old));
  }
  return it->second;
}

namespace {

template <typename LinkFn>
Node decode_node(const json& j, const LinkFn& link_id) {
  if (!j.is_object()) throw SerializationError("expected a node object");
  auto kind = kind_from_name(field(j, "k").get<std::string>());
  if (!kind) throw SerializationError("unknown node kind " + j["k"].dump());
  Node n(*kind);
  if (n.is(NodeKind::kLiteral)) {
    const std::string t = field(j, "t").get<std::string>();
    const json& v = field(j, "v");
    if (t == "integer") {
      n.literal = v.get<std::int64_t>();
    } else if (t == "real") {
      n.literal = v.get<double>();
    } else if (t == "boolean") {
      n.literal = v.get<bool>();
    } else if (t == "string") {
      n.literal = v.get<std::string>();
    } else {
      throw SerializationError("unknown literal type '" + t + "'");
    }
    return n;
  }
  if (n.is(NodeKind::kLink)) {
    n.link = link_id(field(j, "id").get<std::uint64_t>());
    n.hint = j.value("hint", std::string());
    return n;
  }
  n.text = j.value("text", std::string());
  if (j.contains("names")) n.names = j["names"].get<std::vector<std::string>>();
  if (j.contains("types")) n.types = json_types(j["types"]);
  if (j.contains("where")) {
    for (const auto& u : j["where"]) {
      n.unifications.push_back(Unification{u.at(0).get<std::string>(), u.at(1).get<std::string>(),
                                           u.at(2).get<std::string>(), u.at(3).get<std::string>()});
    }
  }
  if (n.is(NodeKind::kIndex)) n.literal = field(j, "index").get<std::int64_t>();
  if (j.contains("c")) {
    for (const auto& c : j["c"]) n.children.push_back(decode_node(c, link_id));
  }
  return n;
}

}  // namespace

Node Decoder::node(const json& j) const {
  return decode_node(j, [this](std::uint64_t old) { return id(old); });
}

json node_to_json(const Node& n, const ValueStore& store) {
  Encoder enc(store, true);
  return enc.node(n);
}

Node node_from_json(const json& j, const ValueStore& store) {
  try {
    return decode_node(j, [&](std::uint64_t id) {
      if (!store.contains(ValueId{id})) {
        throw SerializationError("unresolvable link @[" + std::to_string(id) + "]");
      }
      return ValueId{id};
    });
  } catch (const json::exception& e) {
    throw SerializationError(std::string("malformed hyper-code: ") + e.what());
  }
}

Value Decoder::value(const json& j) const {
  const std::string t = field(j, "t").get<std::string>();
  auto closure = [&]() {
    auto c = std::make_shared<Closure>();
    c->params = field(j, "params").get<std::vector<std::string>>();
    c->param_types = json_types(field(j, "types"));
    if (j.contains("result")) c->result = json_type(j["result"]);
    c->native = j.value("native", std::string());
    c->body = node(field(j, "body"));
    return std::shared_ptr<const Closure>(std::move(c));
  };
  auto cell = [&]() { return field(j, "cell").get<std::uint64_t>(); };
  if (t == "integer") return Value{field(j, "v").get<std::int64_t>()};
  if (t == "real") return Value{field(j, "v").get<double>()};
  if (t == "boolean") return Value{field(j, "v").get<bool>()};
  if (t == "string") return Value{field(j, "v").get<std::string>()};
  if (t == "any") {
    return Value{AnyValue{json_type(field(j, "witness")),
                          std::make_shared<const Value>(value(field(j, "v")))}};
  }
  if (t == "sequence") {
    SequenceValue s{json_type(field(j, "element")), {}};
    for (const auto& i : field(j, "items")) s.items.push_back(value(i));
    return Value{std::move(s)};
  }
  if (t == "view") {
    ViewValue v;
    for (const auto& f : field(j, "fields")) {
      v.names.push_back(f.at(0).get<std::string>());
      v.values.push_back(value(f.at(1)));
    }
    return Value{std::move(v)};
  }
  if (t == "function") return Value{FunctionValue{closure()}};
  if (t == "abstraction") return Value{AbstractionValue{closure()}};
  if (t == "location") {
    auto it = locations_.find(cell());
    if (it == locations_.end()) throw SerializationError("unknown location cell");
    return Value{LocationValue{it->second}};
  }
  if (t == "connection") {
    auto it = connections_.find(cell());
    if (it == connections_.end()) throw SerializationError("unknown connection cell");
    return Value{ConnectionValue{it->second}};
  }
  if (t == "behaviour") return Value{BehaviourValue{behaviour(cell())}};
  throw SerializationError("unknown value type '" + t + "'");
}

Node deserialize(std::string_view text, ValueStore& store) {
  json doc = parse_json(text);
  if (!doc.is_object()) throw SerializationError("hyper-code document must be an object");
  const json& version = field(doc, "version");
  if (!version.is_number_integer() || version.get<int>() != kVersion) {
    throw SerializationError("unsupported hyper-code version " + version.dump());
  }
  try {
    Decoder dec(store, false);
    json tables = {{"defs", doc.value("defs", json::object())},
                   {"cells", doc.value("cells", json::object())}};
    dec.load(tables);
    return dec.node(field(doc, "root"));
  } catch (const json::exception& e) {
    throw SerializationError(std::string("malformed hyper-code: ") + e.what());
  }
}

}  // namespace adl
