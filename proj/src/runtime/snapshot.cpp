#include <sstream>

#include "adl/runtime.hpp"
#include "adl/serialize.hpp"

namespace adl {

nlohmann::json Engine::snapshot() const {
  Encoder enc(store_, true);
  for (const auto& [id, v] : store_.entries()) enc.define(id);
  enc.behaviour_cell(root_);
  for (const auto& [id, w] : cells_) {
    if (auto b = w.lock()) enc.behaviour_cell(b);
  }
  std::ostringstream rng;
  rng << rng_;
  return {{"version", 1},
          {"seed", seed_},
          {"step", step_},
          {"rng", rng.str()},
          {"root", root_->id},
          {"next_id", store_.next_id()},
          {"next_cell", store_.next_cell()},
          {"tables", enc.tables()}};
}

void Engine::restore(const nlohmann::json& snap) {
  try {
    if (snap.at("version").get<int>() != 1) throw SerializationError("unsupported snapshot version");
    ValueStore store;
    Decoder dec(store, true);
    dec.load(snap.at("tables"));
    store.restore_counters(snap.at("next_id").get<std::uint64_t>(),
                           snap.at("next_cell").get<std::uint64_t>());
    auto root = dec.behaviour(snap.at("root").get<std::uint64_t>());
    std::istringstream rng(snap.at("rng").get<std::string>());
    std::mt19937_64 engine;
    rng >> engine;
    if (rng.fail()) throw SerializationError("bad RNG state in snapshot");

    store_ = std::move(store);
    root_ = root;
    cells_.clear();
    for (const auto& [id, b] : dec.behaviours()) register_cell(b);
    rng_ = engine;
    seed_ = snap.at("seed").get<std::uint64_t>();
    step_ = snap.at("step").get<std::uint64_t>();
    trace_.clear();
  } catch (const nlohmann::json::exception& e) {
    throw SerializationError(std::string("malformed snapshot: ") + e.what());
  }
}

}  // namespace adl
