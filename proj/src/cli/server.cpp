#include "adl/server.hpp"

#include <chrono>

#include <httplib.h>

#include "adl/reflection.hpp"
#include "adl/serialize.hpp"
#include "runtime/terms.hpp"

namespace adl {

using nlohmann::json;

namespace {

json diagnostics(const std::exception& e) {
  json out = json::array();
  auto add = [&](const SourceSpan& s, const std::string& m) {
    out.push_back({{"line", s.line}, {"column", s.column}, {"message", m}});
  };
  if (const auto* p = dynamic_cast<const ParseFailure*>(&e)) {
    for (const auto& err : p->errors()) add(err.span, err.message);
  } else if (const auto* c = dynamic_cast<const CheckFailure*>(&e)) {
    for (const auto& err : c->errors()) add(err.span, err.message);
  } else if (const auto* r = dynamic_cast<const ReflectError*>(&e)) {
    for (const auto& err : r->errors()) add(err.span, err.message);
  }
  return out;
}

json system_json(const BehaviourCell& b) {
  json parts = json::array();
  for (const auto& c : b.children) {
    if (!c->is_thread) parts.push_back(c->id);
  }
  json endpoints = json::array();
  for (const auto& [name, v] : b.endpoints) endpoints.push_back(name);
  return {{"id", b.id},
          {"label", b.label ? json(*b.label) : json(nullptr)},
          {"state", state_name(state_of(b))},
          {"commCount", b.comm_count},
          {"composition", b.composition},
          {"parts", parts},
          {"endpoints", endpoints}};
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return parse_json(req.body);
}

Unification parse_unification(const json& pair) {
  auto side = [](const std::string& ref) {
    auto at = ref.find("::");
    if (at == std::string::npos) throw Error("connection reference '" + ref + "' must be LABEL::NAME");
    return std::pair(ref.substr(0, at), ref.substr(at + 2));
  };
  if (!pair.is_array() || pair.size() != 2) throw Error("a unification is a pair of references");
  auto [ll, lc] = side(pair[0].get<std::string>());
  auto [rl, rc] = side(pair[1].get<std::string>());
  return Unification{ll, lc, rl, rc};
}

}  // namespace

ControlServer::ControlServer(Session& session, std::size_t event_buffer)
    : session_(session), http_(std::make_unique<httplib::Server>()), bound_(event_buffer) {
  session_.engine().on_event = [this](const Event& e) { publish(e); };
  routes();
}

ControlServer::~ControlServer() {
  stop();
  session_.engine().on_event = nullptr;
}

void ControlServer::publish(const Event& e) {
  {
    std::lock_guard<std::mutex> lock(events_mu_);
    events_.push_back(to_json_line(e));
    while (events_.size() > bound_) {
      events_.pop_front();
      ++first_seq_;
    }
  }
  events_cv_.notify_all();
}

bool ControlServer::listen(const std::string& host, int port) { return http_->listen(host, port); }

int ControlServer::bind_any_port(const std::string& host) { return http_->bind_to_any_port(host); }

bool ControlServer::listen_after_bind() { return http_->listen_after_bind(); }

void ControlServer::stop() {
  {
    std::lock_guard<std::mutex> lock(events_mu_);
    stopping_ = true;
  }
  events_cv_.notify_all();
  if (http_) http_->stop();
}

void ControlServer::routes() {
  auto& s = *http_;
  // Every handler runs under the session lock and maps errors to statuses.
  auto guarded = [this](auto fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard<std::mutex> lock(session_mu_);
      try {
        fn(req, res);
      } catch (const ParseFailure& e) {
        reply(res, 422, {{"error", e.what()}, {"errors", diagnostics(e)}});
      } catch (const CheckFailure& e) {
        reply(res, 422, {{"error", e.what()}, {"errors", diagnostics(e)}});
      } catch (const ReflectError& e) {
        reply(res, 422, {{"error", e.what()}, {"errors", diagnostics(e)}});
      } catch (const std::exception& e) {
        reply(res, 400, {{"error", e.what()}});
      }
    };
  };
  auto find = [this](const httplib::Request& req) {
    auto b = session_.engine().find_behaviour(std::stoull(req.matches[1].str()));
    if (!b || b->is_thread) throw std::out_of_range("no behaviour " + req.matches[1].str());
    return b;
  };

  s.Get("/systems", guarded([this](const httplib::Request&, httplib::Response& res) {
          json out = json::array();
          for (const auto& b : session_.engine().systems()) out.push_back(system_json(*b));
          reply(res, 200, out);
        }));

  s.Get(R"(/systems/(\d+))", guarded([find](const httplib::Request& req, httplib::Response& res) {
          try {
            reply(res, 200, system_json(*find(req)));
          } catch (const std::out_of_range& e) {
            reply(res, 404, {{"error", e.what()}});
          }
        }));

  s.Get(R"(/systems/(\d+)/hypercode)",
        guarded([this, find](const httplib::Request& req, httplib::Response& res) {
          std::shared_ptr<BehaviourCell> b;
          try {
            b = find(req);
          } catch (const std::out_of_range& e) {
            return reply(res, 404, {{"error", e.what()}});
          }
          if (state_of(*b) == BehaviourState::kRunning) {
            return reply(res, 409, {{"error", "behaviour is running; quiesce and decompose it first"}});
          }
          Engine& engine = session_.engine();
          Node tree = reify(Value{BehaviourValue{b}}, engine);
          reply(res, 200, {{"text", render(tree)}, {"hypercode", parse_json(serialize(tree, engine.store()))}});
        }));

  s.Post(R"(/systems/(\d+)/quiesce)",
         guarded([this, find](const httplib::Request& req, httplib::Response& res) {
           auto b = find(req);
           json body = body_of(req);
           std::uint64_t max = body.value("maxSteps", std::uint64_t{10000});
           if (max == 0) throw Error("maxSteps must be positive");
           Engine& engine = session_.engine();
           std::uint64_t start = engine.step_count();
           AwaitResult r = engine.await_quiescence(b, max);
           reply(res, 200, {{"result", r == AwaitResult::kQuiescent ? "quiescent" : "timed_out"},
                            {"steps", engine.step_count() - start}});
         }));

  s.Post(R"(/systems/(\d+)/decompose)",
         guarded([this, find](const httplib::Request& req, httplib::Response& res) {
           auto b = find(req);
           Engine& engine = session_.engine();
           if (b->composition && !b->shell && !engine.quiescent(b)) {
             return reply(res, 409, {{"error", "composition is not quiescent; quiesce it first"}});
           }
           Value seq = engine.decompose(b);
           json out = json::array();
           for (const auto& item : seq.as<SequenceValue>().items) {
             const auto& view = item.as<ViewValue>();
             json conns = json::array();
             for (const auto& c : view.values[2].as<SequenceValue>().items) {
               const auto& cv = c.as<ViewValue>();
               const Value& conn = *cv.values[1].as<AnyValue>().inner;
               conns.push_back({{"name", cv.values[0].as<std::string>()},
                                {"connectionId", conn.as<ConnectionValue>().cell->id}});
             }
             out.push_back({{"label", view.values[0].as<std::string>()},
                            {"behaviourId", view.values[1].as<BehaviourValue>().cell->id},
                            {"connections", conns}});
           }
           session_.bind("it", seq);
           reply(res, 200, out);
         }));

  s.Post("/reflect", guarded([this](const httplib::Request& req, httplib::Response& res) {
           json body = body_of(req);
           Engine& engine = session_.engine();
           json out = json::array();
           auto describe = [&](const std::string& name, const Value& v) {
             json d = {{"name", name}, {"type", to_string(type_of_value(v))}, {"summary", summarize(v)}};
             if (v.holds<BehaviourValue>()) d["behaviourId"] = v.as<BehaviourValue>().cell->id;
             out.push_back(d);
           };
           Node tree;
           if (body.contains("hypercode")) {
             tree = node_from_json(body["hypercode"], engine.store());
           } else if (body.contains("text")) {
             tree = session_.prepare(body["text"].get<std::string>());
           } else {
             throw Error("expected 'hypercode' or 'text'");
           }
           bool decls = tree.is(NodeKind::kBody) && !tree.children.empty() &&
                        std::all_of(tree.children.begin(), tree.children.end(),
                                    [](const Node& n) { return n.is(NodeKind::kValueDecl); });
           if (decls) {
             for (std::size_t i = 0; i < tree.children.size(); ++i) {
               const Node& item = tree.children[i];
               Value v = reflect(item.children.front(), engine);
               ValueId id = session_.bind(item.text, v);
               detail::substitute_suffix(tree.children, i + 1, item.text, make_link(id, item.text));
               describe(item.text, v);
             }
           } else {
             Value v = reflect(tree, engine);
             std::string name = body.value("name", std::string("it"));
             session_.bind(name, v);
             describe(name, v);
           }
           reply(res, 200, out);
         }));

  s.Post("/compose", guarded([this](const httplib::Request& req, httplib::Response& res) {
           json body = body_of(req);
           Engine& engine = session_.engine();
           std::vector<Engine::ComposePart> parts;
           for (const auto& p : body.at("parts")) {
             auto b = engine.find_behaviour(p.at("behaviourId").get<std::uint64_t>());
             if (!b || b->is_thread) throw Error("no behaviour " + p.at("behaviourId").dump());
             parts.push_back({p.value("label", std::string()), b});
           }
           std::vector<Unification> unifs;
           for (const auto& u : body.value("unifications", json::array())) unifs.push_back(parse_unification(u));
           auto k = engine.compose(parts, unifs, engine.root());
           if (body.contains("name")) session_.bind(body["name"].get<std::string>(), Value{BehaviourValue{k}});
           reply(res, 200, system_json(*k));
         }));

  s.Post("/engine/step", guarded([this](const httplib::Request& req, httplib::Response& res) {
           json body = body_of(req);
           std::uint64_t n = body.value("n", std::uint64_t{1});
           Engine& engine = session_.engine();
           std::uint64_t done = 0;
           StepResult last = StepResult::kProgressed;
           while (done < n && (last = engine.step()) == StepResult::kProgressed) ++done;
           reply(res, 200, {{"steps", done}, {"last", step_result_name(last)}, {"step", engine.step_count()}});
         }));

  s.Post("/load", guarded([this](const httplib::Request& req, httplib::Response& res) {
           json body = body_of(req);
           auto thread = session_.load(body.at("text").get<std::string>());
           RunResult r = session_.settle(thread, body.value("maxSteps", std::uint64_t{100000}));
           reply(res, 200, {{"steps", r.steps}, {"finished", thread->terminated}, {"error", thread->error}});
         }));

  s.Get("/events", [this](const httplib::Request&, httplib::Response& res) {
    std::uint64_t cursor;
    {
      std::lock_guard<std::mutex> lock(events_mu_);
      cursor = first_seq_ + events_.size();
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [this, cursor](std::size_t,
                                                                         httplib::DataSink& sink) mutable {
      std::unique_lock<std::mutex> lock(events_mu_);
      events_cv_.wait_for(lock, std::chrono::seconds(1),
                          [&] { return stopping_ || cursor < first_seq_ + events_.size(); });
      if (stopping_) return false;
      if (cursor < first_seq_) return false;  // fell behind the buffer
      std::string chunk;
      while (cursor < first_seq_ + events_.size()) {
        chunk += "data: " + events_[cursor - first_seq_] + "\n\n";
        ++cursor;
      }
      lock.unlock();
      if (chunk.empty()) chunk = ": keepalive\n\n";
      return sink.write(chunk.data(), chunk.size());
    });
  });
}

}  // namespace adl
