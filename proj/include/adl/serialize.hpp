#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adl/error.hpp"
#include "adl/hypercode.hpp"
#include "adl/value.hpp"

namespace adl {

using json = nlohmann::json;

// Canonical text for `h`: {"version":1,"root":..,"defs":{"N":value},"cells":..}.
// `defs` holds every value reachable through links exactly once. Mutable
// identities (locations, connections, behaviours) are written once to `cells`
// and referenced by number. Throws SerializationError on an unresolvable link
// or a running behaviour.
std::string serialize(const Node& h, const ValueStore& store);

// Reconstructs a tree; linked definitions are bound into `store` under fresh
// ids with sharing preserved. Throws SerializationError (with the byte offset
// for malformed JSON, or on a version mismatch).
Node deserialize(std::string_view text, ValueStore& store);

// Lower-level encoder shared by hyper-code serialization and engine snapshots.
class Encoder {
 public:
  Encoder(const ValueStore& store, bool allow_running);

  json node(const Node& n);
  json value(const Value& v);
  // Queue a store entry for `defs` even if no link reaches it.
  void define(ValueId id);
  void behaviour_cell(const std::shared_ptr<BehaviourCell>& b);

  // Drains pending definitions and returns {"defs":..,"cells":..}.
  json tables();

 private:
  json cell_ref_location(const std::shared_ptr<LocationCell>& c);
  json cell_ref_connection(const std::shared_ptr<ConnectionCell>& c);
  json encode_behaviour(const BehaviourCell& b);
  json closure(const Closure& c);

  const ValueStore& store_;
  bool allow_running_;
  std::set<ValueId> queued_;
  std::vector<ValueId> pending_;
  std::map<std::uint64_t, std::shared_ptr<LocationCell>> locations_;
  std::map<std::uint64_t, std::shared_ptr<ConnectionCell>> connections_;
  std::map<std::uint64_t, std::shared_ptr<BehaviourCell>> behaviours_;
  std::vector<std::shared_ptr<LocationCell>> location_queue_;
  std::vector<std::shared_ptr<BehaviourCell>> behaviour_queue_;
};

class Decoder {
 public:
  // With `preserve_ids`, defs keep their ids and cells keep their numbers
  // (snapshot restore into an empty store); otherwise everything is fresh.
  Decoder(ValueStore& store, bool preserve_ids);

  // Creates cells and binds defs from a tables object produced by
  // Encoder::tables.
  void load(const json& tables);

  Node node(const json& j) const;
  Value value(const json& j) const;
  ValueId id(std::uint64_t old) const;

  std::shared_ptr<BehaviourCell> behaviour(std::uint64_t old) const;
  const std::map<std::uint64_t, std::shared_ptr<BehaviourCell>>& behaviours() const {
    return behaviours_;
  }

 private:
  ValueStore& store_;
  bool preserve_;
  std::map<std::uint64_t, ValueId> ids_;
  std::map<std::uint64_t, std::shared_ptr<LocationCell>> locations_;
  std::map<std::uint64_t, std::shared_ptr<ConnectionCell>> connections_;
  std::map<std::uint64_t, std::shared_ptr<BehaviourCell>> behaviours_;
};

// A bare node whose links name ids of `store` directly (no defs table). Used
// by edit scripts and the control API.
json node_to_json(const Node& n, const ValueStore& store);
Node node_from_json(const json& j, const ValueStore& store);

// Parses JSON text, converting parse failures to SerializationError with the
// byte offset.
json parse_json(std::string_view text);

}  // namespace adl
