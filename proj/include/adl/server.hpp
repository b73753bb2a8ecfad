#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>

#include "adl/session.hpp"

namespace httplib {
class Server;
}

namespace adl {

// HTTP control API over one Session. Requests are serialized on a single
// lock; trace events fan out to `GET /events` subscribers through a bounded
// buffer, and subscribers that fall further behind than the bound are
// disconnected.
class ControlServer {
 public:
  explicit ControlServer(Session& session, std::size_t event_buffer = 4096);
  ~ControlServer();

  // Blocks serving on `host:port`; false if the port cannot be bound.
  bool listen(const std::string& host, int port);
  // Binds to a free port and returns it, or -1. Serve with listen_after_bind.
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();

 private:
  void routes();
  void publish(const Event& e);

  Session& session_;
  std::unique_ptr<httplib::Server> http_;
  std::mutex session_mu_;

  std::mutex events_mu_;
  std::condition_variable events_cv_;
  std::deque<std::string> events_;
  std::uint64_t first_seq_ = 0;  // sequence number of events_.front()
  std::size_t bound_;
  bool stopping_ = false;
};

}  // namespace adl
