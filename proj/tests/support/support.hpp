#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "adl/reflection.hpp"
#include "adl/runtime.hpp"
#include "adl/session.hpp"

namespace adl::testing {

std::string corpus_path(const std::string& name);
std::string read_file(const std::string& path);
std::string read_corpus(const std::string& name);

// Loads a corpus file into `s` and runs until the program thread finishes.
void load_corpus(Session& s, const std::string& name, std::uint64_t max_steps = 100000);

std::size_t count_kind(const std::vector<Event>& trace, const std::string& kind);

struct Subprocess {
  int exit_code = -1;
  std::string out;
};
// Runs a shell command with `input` on stdin and captures stdout.
Subprocess run_command(const std::string& command, const std::string& input = "");

// Independent check that nothing under `group` can reduce: every live thread
// must be blocked on a send or receive over a connection, and no send meets
// a receive on the same connection class. Written against thread terms, not
// the engine's scheduler.
bool oracle_quiescent(const Engine& engine, const std::shared_ptr<BehaviourCell>& group);

// Communications a thread is ready to offer, read from its term.
struct CommHead {
  bool send = false;
  std::uint64_t cls = 0;     // connection class representative
  std::size_t arity = 0;     // values sent or binders received
  std::size_t expected = 0;  // payload arity of the connection
};
// Live threads under the session group, skipping suspended groups.
std::vector<std::shared_ptr<BehaviourCell>> running_threads(const Engine& engine);
std::vector<CommHead> comm_heads(const Engine& engine, const BehaviourCell& thread);

// Group each thread ran in, recovered from spawn and clone events.
std::map<std::uint64_t, std::uint64_t> thread_groups(const std::vector<Event>& trace);

// The client-server evolution driven programmatically: build the first
// system, feed experiment data, quiesce, decompose, derive the two new
// server abstractions by transforming the old server's hyper-code, compose
// the second system, then send a start, more data, and a user stop.
struct EvolutionRun {
  std::string failure;  // empty on success
  std::vector<std::string> labels;
  std::size_t displayed_before = 0;
  std::size_t displayed_after = 0;
  std::size_t view_server_deliveries = 0;  // comms from the view server to the client
  std::size_t start_comms_after = 0;       // starts consumed by the command server
  std::size_t stop_comms_after = 0;        // stops received by the command server
  std::uint64_t start_calls = 0;
  std::uint64_t stop_calls = 0;
  std::string view_server_text;
  std::string command_server_text;
  std::vector<Event> trace;
};
EvolutionRun run_evolution(std::uint64_t seed);

}  // namespace adl::testing
