#include "atal/service.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "atal/pnm.hpp"

namespace atal {

using nlohmann::json;

struct Session {
  std::string id;
  ExperimentPaths paths;
  std::unique_ptr<ExperimentLock> lock;
  std::unique_ptr<Engine> engine;
  std::chrono::system_clock::time_point created_at;

  std::mutex mutex;
  std::condition_variable idle_cv;
  std::optional<ExperimentState> state;
  std::set<std::string> answered;
  std::set<std::string> served;
  bool busy = false;
  bool stopping = false;
  std::string error;
  std::thread worker;
};

struct AnnotationService::Http {
  httplib::Server server;
  std::thread thread;
};

namespace {

constexpr int kPreviewWindow = 64;

void paint(Image& img, int r, int c, double red, double green, double blue) {
  if (!img.contains(r, c)) return;
  img.at(r, c, 0) = red;
  img.at(r, c, 1) = green;
  img.at(r, c, 2) = blue;
}

json error_body(const std::string& code, const std::string& message) {
  return {{"error", code}, {"message", message}};
}

}  // namespace

std::string render_query_preview(const Image& image, const SuperpixelPartition& partition, const LabelQuery& query,
                                 int scale) {
  const int h = image.height(), w = image.width();
  const int wh = std::min(h, kPreviewWindow), ww = std::min(w, kPreviewWindow);
  const int r0 = std::clamp(query.row - wh / 2, 0, h - wh);
  const int c0 = std::clamp(query.col - ww / 2, 0, w - ww);
  Image out(wh * scale, ww * scale, 3);
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        out.at(r, c, ch) = image.at(r0 + r / scale, c0 + c / scale, image.channels() == 3 ? ch : 0);
      }
    }
  }
  const int id = partition.at(query.row, query.col);
  auto differs = [&](int r, int c) { return r < 0 || c < 0 || r >= h || c >= w || partition.at(r, c) != id; };
  for (int r = r0; r < r0 + wh; ++r) {
    for (int c = c0; c < c0 + ww; ++c) {
      if (partition.at(r, c) != id) continue;
      const int br = (r - r0) * scale, bc = (c - c0) * scale;
      for (int t = 0; t < scale; ++t) {
        if (differs(r - 1, c)) paint(out, br, bc + t, 1.0, 0.9, 0.0);
        if (differs(r + 1, c)) paint(out, br + scale - 1, bc + t, 1.0, 0.9, 0.0);
        if (differs(r, c - 1)) paint(out, br + t, bc, 1.0, 0.9, 0.0);
        if (differs(r, c + 1)) paint(out, br + t, bc + scale - 1, 1.0, 0.9, 0.0);
      }
    }
  }
  const int mr = (query.row - r0) * scale + scale / 2, mc = (query.col - c0) * scale + scale / 2;
  for (int t = -scale; t <= scale; ++t) {
    paint(out, mr + t, mc, 1.0, 0.0, 0.0);
    paint(out, mr, mc + t, 1.0, 0.0, 0.0);
  }
  return encode_ppm8(out);
}

AnnotationService::AnnotationService(Engine::Logger log) : http_(std::make_unique<Http>()), log_(std::move(log)) {
  auto& srv = http_->server;
  auto send_json = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump() + "\n", "application/json");
  };
  auto guarded = [send_json](auto&& fn) {
    return [fn, send_json](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const SessionNotFound& e) {
        send_json(res, 404, error_body("not-found", e.what()));
      } catch (const UnknownQuery& e) {
        send_json(res, 404, error_body("not-found", e.what()));
      } catch (const AlreadyAnswered& e) {
        send_json(res, 409, error_body("already-answered", e.what()));
      } catch (const LockConflict& e) {
        send_json(res, 409, error_body("conflict", e.what()));
      } catch (const json::exception& e) {
        send_json(res, 400, error_body("bad-request", e.what()));
      } catch (const InvalidInput& e) {
        send_json(res, 400, error_body("bad-request", e.what()));
      } catch (const std::exception& e) {
        send_json(res, 500, error_body("internal", e.what()));
      }
    };
  };

  srv.Post("/sessions", guarded([this, send_json](const httplib::Request& req, httplib::Response& res) {
             const json body = json::parse(req.body);
             const std::string id = create_session(body.at("experiment").get<std::string>());
             json st = status(id);
             send_json(res, 201, json{{"session_id", id}, {"pending", st["pending"]}, {"round", st["round"]}});
           }));
  srv.Get(R"(/sessions/([^/]+)/queries)",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
            int limit = 16;
            if (req.has_param("limit")) limit = std::stoi(req.get_param_value("limit"));
            if (limit < 0) throw InvalidInput("limit must be non-negative");
            std::string body;
            for (const auto& q : fetch_queries(req.matches[1], limit)) body += q.dump() + "\n";
            res.status = 200;
            res.set_content(body, "application/x-ndjson");
          }));
  srv.Post(R"(/sessions/([^/]+)/labels)",
           guarded([this, send_json](const httplib::Request& req, httplib::Response& res) {
             std::istringstream in(req.body);
             std::string line;
             std::vector<json> lines;
             while (std::getline(in, line)) {
               if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(json::parse(line));
             }
             if (lines.empty()) throw InvalidInput("no label records in body");
             const std::string id = req.matches[1];
             if (lines.size() == 1) {
               const json& l = lines.front();
               send_json(res, 200,
                         submit_label(id, l.at("query_id").get<std::string>(),
                                      parse_pixel_class(l.at("class").get<std::string>())));
               return;
             }
             std::string body;
             for (const json& l : lines) {
               json ack;
               const std::string qid = l.value("query_id", std::string());
               try {
                 ack = submit_label(id, l.at("query_id").get<std::string>(),
                                    parse_pixel_class(l.at("class").get<std::string>()));
                 ack["status"] = 200;
               } catch (const AlreadyAnswered& e) {
                 ack = error_body("already-answered", e.what());
                 ack["query_id"] = qid;
                 ack["status"] = 409;
               } catch (const UnknownQuery& e) {
                 ack = error_body("not-found", e.what());
                 ack["query_id"] = qid;
                 ack["status"] = 404;
               }
               body += ack.dump() + "\n";
             }
             res.status = 200;
             res.set_content(body, "application/x-ndjson");
           }));
  srv.Get(R"(/sessions/([^/]+)/status)", guarded([this, send_json](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, status(req.matches[1]));
          }));
}

AnnotationService::~AnnotationService() {
  stop();
  std::vector<std::string> ids;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, s] : sessions_) ids.push_back(id);
  }
  for (const auto& id : ids) close_session(id);
}

std::shared_ptr<Session> AnnotationService::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw SessionNotFound("unknown session '" + id + "'");
  return it->second;
}

std::string AnnotationService::create_session(const std::filesystem::path& experiment) {
  ExperimentPaths paths{experiment};
  if (!std::filesystem::exists(paths.config())) {
    throw InvalidInput("no config.txt in experiment directory " + experiment.string());
  }
  auto s = std::make_shared<Session>();
  s->lock = std::make_unique<ExperimentLock>(experiment);
  s->paths = paths;
  s->created_at = std::chrono::system_clock::now();
  const ExperimentConfig config = std::filesystem::exists(paths.state()) ? load_state(paths.state()).config
                                                                          : read_config(paths.config());
  auto data = std::make_shared<const ExperimentData>(load_data(config));
  s->engine = std::make_unique<Engine>(data, paths, log_);
  if (std::filesystem::exists(paths.state())) {
    ExperimentState st = load_state(paths.state());
    s->engine->recover(st);
    s->state = std::move(st);
  }
  for (const auto& record : read_jsonl(paths.answers())) s->answered.insert(record.at("query_id").get<std::string>());
  {
    std::lock_guard lock(mutex_);
    s->id = "s" + std::to_string(next_id_++);
    sessions_[s->id] = s;
  }
  const bool needs_work = !s->state || (s->state->pending.empty() && !s->state->finished);
  if (needs_work) start_worker(s);
  return s->id;
}

void AnnotationService::start_worker(const std::shared_ptr<Session>& s) {
  std::unique_lock lock(s->mutex);
  if (s->worker.joinable()) {
    s->idle_cv.wait(lock, [&] { return !s->busy; });
    s->worker.join();
  }
  s->busy = true;
  std::optional<ExperimentState> snapshot = s->state;
  s->worker = std::thread([this, s, snapshot]() mutable {
    std::string error;
    try {
      if (!snapshot) {
        const ExperimentConfig cfg = read_config(s->paths.config());
        snapshot = s->engine->init(cfg, StrategyKind::atal, cfg.seeds.front());
      }
      while (!snapshot->finished && snapshot->pending.empty()) {
        {
          std::lock_guard l(s->mutex);
          if (s->stopping) break;
        }
        s->engine->run_round(*snapshot);
        std::lock_guard l(s->mutex);
        s->state = snapshot;
      }
    } catch (const std::exception& e) {
      error = e.what();
      if (log_) log_("session " + s->id + ": " + error);
    }
    std::lock_guard l(s->mutex);
    if (snapshot) s->state = std::move(snapshot);
    s->served.clear();
    s->error = error;
    s->busy = false;
    s->idle_cv.notify_all();
  });
}

std::vector<json> AnnotationService::fetch_queries(const std::string& session_id, int limit) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  std::vector<json> out;
  if (!s->state || s->busy) return out;
  const ExperimentData& data = s->engine->data();
  for (const auto& q : s->state->pending) {
    if (static_cast<int>(out.size()) >= limit) break;
    if (s->answered.count(q.query_id)) continue;
    const std::size_t i = data.index_of(q.image_id);
    const Image& image = data.train[i].image;
    const int wh = std::min(image.height(), 64), ww = std::min(image.width(), 64);
    const int r0 = std::clamp(q.row - wh / 2, 0, image.height() - wh);
    const int c0 = std::clamp(q.col - ww / 2, 0, image.width() - ww);
    json outline = json::array();
    for (const auto& p : superpixel_outline(data.partitions[i], q.superpixel_id)) {
      if (p.row >= r0 && p.row < r0 + wh && p.col >= c0 && p.col < c0 + ww) outline.push_back({p.row - r0, p.col - c0});
    }
    const int scale = 8;
    json rec = q;
    rec.erase("score");
    rec.erase("phi");
    rec["crop"] = {{"row", r0}, {"col", c0}, {"height", wh}, {"width", ww}, {"scale", scale}};
    rec["marker"] = {{"row", q.row - r0}, {"col", q.col - c0}};
    rec["outline"] = std::move(outline);
    rec["image"] = {{"format", "ppm"},
                    {"encoding", "base64"},
                    {"data", httplib::detail::base64_encode(render_query_preview(image, data.partitions[i], q, scale))}};
    s->served.insert(q.query_id);
    out.push_back(std::move(rec));
  }
  return out;
}

json AnnotationService::submit_label(const std::string& session_id, const std::string& query_id, PixelClass cls) {
  auto s = find(session_id);
  std::size_t remaining = 0;
  {
    std::lock_guard lock(s->mutex);
    if (s->answered.count(query_id)) throw AlreadyAnswered("query '" + query_id + "' is already answered");
    if (!s->state || s->busy) throw UnknownQuery("no pending query '" + query_id + "'");
    remaining = s->engine->submit(*s->state, LabelAnswer{query_id, cls, AnswerSource::human});
    s->answered.insert(query_id);
  }
  if (remaining == 0) start_worker(s);
  return {{"query_id", query_id}, {"remaining", remaining}};
}

json AnnotationService::status(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  json history = json::array();
  json out = {{"session_id", s->id},
              {"experiment", s->paths.root.string()},
              {"created_at", std::chrono::duration_cast<std::chrono::seconds>(s->created_at.time_since_epoch()).count()},
              {"busy", s->busy},
              {"error", s->error}};
  if (!s->state) {
    out.update({{"round", 0}, {"budget_spent", 0}, {"pending", 0}, {"answered", 0}, {"finished", false},
                {"metric_history", history}});
    return out;
  }
  const ExperimentState& st = *s->state;
  for (const auto& m : st.metric_history) {
    history.push_back({{"round", m.round}, {"budget", m.budget}, {"max_f", m.max_f}, {"avg_f", m.avg_f},
                       {"mae", m.mae}, {"full_sup_ratio", m.full_sup_ratio}});
  }
  out.update({{"strategy", to_string(st.strategy)},
              {"seed", st.seed},
              {"round", st.round},
              {"budget_spent", st.budget_spent},
              {"pending", s->busy ? 0 : st.remaining()},
              {"answered", st.received.size()},
              {"finished", st.finished},
              {"metric_history", std::move(history)}});
  return out;
}

void AnnotationService::wait_idle(const std::string& session_id) {
  auto s = find(session_id);
  std::unique_lock lock(s->mutex);
  s->idle_cv.wait(lock, [&] { return !s->busy; });
}

void AnnotationService::close_session(const std::string& session_id) {
  auto s = find(session_id);
  {
    std::lock_guard lock(s->mutex);
    s->stopping = true;
  }
  if (s->worker.joinable()) s->worker.join();
  std::lock_guard lock(mutex_);
  sessions_.erase(session_id);
  s->lock.reset();
}

bool AnnotationService::listen(const std::string& host, int port) { return http_->server.listen(host, port); }

int AnnotationService::start_background(const std::string& host) {
  const int port = http_->server.bind_to_any_port(host);
  if (port < 0) throw std::runtime_error("cannot bind " + host);
  http_->thread = std::thread([this] { http_->server.listen_after_bind(); });
  http_->server.wait_until_ready();
  return port;
}

void AnnotationService::stop() {
  http_->server.stop();
  if (http_->thread.joinable()) http_->thread.join();
}

}  // namespace atal
