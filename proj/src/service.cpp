#include "pmd/service.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "httplib.h"
#include "pmd/density.hpp"
#include "pmd/io.hpp"
#include "pmd/metrics.hpp"

namespace pmd::service {

using nlohmann::json;

Session::~Session() {
  std::lock_guard lk(worker_mutex);
  if (worker.joinable()) worker.join();
}

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string new_token() {
  std::random_device rd;
  const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << v;
  return out.str();
}

std::shared_ptr<Session> build_session(const json& body) {
  auto s = std::make_shared<Session>();
  try {
    if (body.contains("samples_path")) {
      s->samples = std::make_shared<const SampleSet>(load_samples(body.at("samples_path").get<std::string>()));
      if (body.contains("gt_path")) s->ground_truth = io::load_depth(body.at("gt_path").get<std::string>());
    } else if (body.contains("scene_spec")) {
      const SceneSpec spec = io::scene_from_json(body.at("scene_spec"));
      SamplerConfig cfg = io::sampler_from_json(body.value("sampler_cfg", json::object()));
      if (body.contains("seed")) cfg.seed = body.at("seed").get<std::uint64_t>();
      DepthMap gt = render_scene(spec);
      const auto grid = make_patch_grid(gt.height(), gt.width(), body.value("K", std::size_t{33}),
                                        body.value("stride", std::size_t{4}));
      s->samples = std::make_shared<const SampleSet>(synthesize_samples(gt, grid, body.value("S", std::size_t{100}), cfg));
      s->ground_truth = std::move(gt);
    } else {
      throw HttpError(400, "session needs samples_path or scene_spec");
    }
    if (s->ground_truth && !s->samples->grid().matches(*s->ground_truth)) {
      throw HttpError(400, "ground truth does not match the samples");
    }
    s->mode_options.lambda = body.value("lambda", 10.0);
    s->mode_options.ramp = body.value("ramp", true);
    if (body.contains("solver")) s->mode_options.solver = io::solver_from_json(body.at("solver")).options;
  } catch (const json::exception& e) {
    throw HttpError(400, std::string("invalid session request: ") + e.what());
  } catch (const HttpError&) {
    throw;
  } catch (const Error& e) {
    throw HttpError(400, e.what());
  }
  s->variance = variance_map(*s->samples);
  s->modes = start_modes(*s->samples);
  s->annotations.resize(1);
  s->revision = 1;
  return s;
}

std::vector<Rect> parse_rects(const json& body, const Session& s) {
  std::vector<Rect> rects;
  if (!body.contains("annotations")) return rects;
  const auto& g = s.samples->grid();
  try {
    for (const auto& a : body.at("annotations")) {
      const auto get = [&](const char* k) -> long long { return a.at(k).get<long long>(); };
      const long long m = get("mode"), x = get("x"), y = get("y"), w = get("w"), h = get("h");
      if (m < 0 || static_cast<std::size_t>(m) >= s.modes.size()) throw HttpError(422, "annotation refers to unknown mode");
      if (x < 0 || y < 0 || w < 1 || h < 1 || static_cast<std::size_t>(x + w) > g.width() ||
          static_cast<std::size_t>(y + h) > g.height()) {
        throw HttpError(422, "annotation rectangle out of image bounds");
      }
      rects.push_back({static_cast<std::size_t>(m), static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                       static_cast<std::size_t>(w), static_cast<std::size_t>(h)});
    }
  } catch (const json::exception& e) {
    throw HttpError(422, std::string("malformed annotation: ") + e.what());
  }
  return rects;
}

json rects_json(const std::vector<Rect>& rects) {
  json out = json::array();
  for (const auto& r : rects) out.push_back({{"mode", r.mode}, {"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}});
  return out;
}

// Masks and annotations after applying `rects`, on copies of the session state.
void apply_rects(ModeSet& modes, std::vector<std::vector<Rect>>& annotations, const std::vector<Rect>& rects) {
  for (const auto& r : rects) {
    modes.masks[r.mode].fill_rect(r.y, r.x, r.h, r.w);
    annotations[r.mode].push_back(r);
  }
}

double parse_lambda(const json& body, const Session& s) {
  if (!body.contains("lambda") || body.at("lambda").is_null()) return s.mode_options.lambda;
  if (!body.at("lambda").is_number()) throw HttpError(422, "lambda must be a number");
  const double l = body.at("lambda").get<double>();
  if (!(l >= 0.0)) throw HttpError(422, "lambda must be >= 0");
  return l;
}

std::size_t parse_mode_index(const json& body, const Session& s) {
  if (!body.contains("mode") || !body.at("mode").is_number_integer()) throw HttpError(422, "select needs an integer mode");
  const long long m = body.at("mode").get<long long>();
  if (m < 0 || static_cast<std::size_t>(m) >= s.modes.size()) throw HttpError(422, "unknown mode index");
  return static_cast<std::size_t>(m);
}

json preview(const DepthMap& z, double lo, double hi) {
  json rows = json::array();
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t y = 0; y < z.height(); ++y) {
    json row = json::array();
    for (std::size_t x = 0; x < z.width(); ++x) {
      const double t = std::clamp((z(y, x) - lo) / span, 0.0, 1.0);
      row.push_back(static_cast<int>(std::lround(255.0 * t)));
    }
    rows.push_back(std::move(row));
  }
  return {{"min", lo}, {"max", hi}, {"rows", std::move(rows)}};
}

std::pair<double, double> range_of(const DepthMap& z) {
  const auto [lo, hi] = std::minmax_element(z.values().begin(), z.values().end());
  return {*lo, *hi};
}

json provenance_json(const ModeProvenance& p) {
  return {{"kind", p.kind == ModeKind::mean ? "mean" : "diverse"}, {"lambda", p.lambda}, {"previous", p.previous}};
}

ModeOptions options_with(const Session& s, double lambda) {
  ModeOptions o = s.mode_options;
  o.lambda = lambda;
  return o;
}

}  // namespace

SessionStore::SessionStore(std::optional<std::filesystem::path> state_dir) : state_dir_(std::move(state_dir)) {
  if (!state_dir_) return;
  std::filesystem::create_directories(*state_dir_);
  std::vector<std::filesystem::path> logs;
  for (const auto& e : std::filesystem::directory_iterator(*state_dir_)) {
    if (e.path().extension() == ".jsonl") logs.push_back(e.path());
  }
  std::sort(logs.begin(), logs.end());
  for (const auto& p : logs) {
    std::ifstream in(p);
    std::vector<json> events;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) events.push_back(json::parse(line));
    }
    if (events.empty()) continue;
    auto s = replay(events);
    sessions_[s->id] = std::move(s);
  }
}

SessionStore::~SessionStore() {
  std::unique_lock lk(mutex_);
  sessions_.clear();
}

std::shared_ptr<Session> SessionStore::find(const std::string& id) const {
  std::shared_lock lk(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw HttpError(404, "unknown session " + id);
  return it->second;
}

void SessionStore::persist(const Session& s, const json& event) const {
  if (!state_dir_) return;
  std::ofstream out(*state_dir_ / (s.id + ".jsonl"), std::ios::app);
  out << event.dump() << '\n';
}

std::shared_ptr<Session> SessionStore::replay(const std::vector<json>& events) {
  if (events.empty() || events.front().value("event", "") != "create") {
    throw Error("session log must start with a create event");
  }
  auto s = build_session(events.front().at("body"));
  s->id = events.front().at("id").get<std::string>();
  s->events.push_back(events.front());
  for (std::size_t i = 1; i < events.size(); ++i) {
    const json& e = events[i];
    const std::string kind = e.value("event", "");
    if (kind == "next") {
      const auto rects = parse_rects(e, *s);
      apply_rects(s->modes, s->annotations, rects);
      next_mode(*s->samples, s->modes, options_with(*s, parse_lambda(e, *s)));
      s->annotations.emplace_back();
    } else if (kind == "select") {
      s->selected = parse_mode_index(e, *s);
    } else {
      throw Error("unknown session event \"" + kind + "\"");
    }
    ++s->revision;
    s->events.push_back(e);
  }
  return s;
}

json SessionStore::create(const json& body) {
  auto s = build_session(body);
  s->id = new_token();
  json event{{"event", "create"}, {"id", s->id}, {"body", body}, {"time", now_ms()}};
  s->events.push_back(event);
  persist(*s, event);
  json out{{"id", s->id}, {"revision", s->revision}, {"mode_count", s->modes.size()}};
  std::unique_lock lk(mutex_);
  sessions_[s->id] = std::move(s);
  return out;
}

json SessionStore::info(const std::string& id) const {
  auto s = find(id);
  std::shared_lock lk(s->mutex);
  const auto& g = s->samples->grid();
  json out{{"id", s->id},
           {"revision", s->revision},
           {"mode_count", s->modes.size()},
           {"status", s->status == Status::solving ? "solving" : "idle"},
           {"height", g.height()},
           {"width", g.width()},
           {"patch_size", g.patch_size()},
           {"stride", g.stride()},
           {"samples_per_patch", s->samples->samples_per_patch()},
           {"has_ground_truth", s->ground_truth.has_value()},
           {"lambda", s->mode_options.lambda}};
  out["selected"] = s->selected ? json(*s->selected) : json(nullptr);
  json ann = json::array();
  for (const auto& a : s->annotations) ann.push_back(rects_json(a));
  out["annotations"] = std::move(ann);
  return out;
}

json SessionStore::mode(const std::string& id, std::size_t m) const {
  auto s = find(id);
  std::shared_lock lk(s->mutex);
  if (m >= s->modes.size()) throw HttpError(404, "mode " + std::to_string(m) + " does not exist");
  const DepthMap& z = s->modes.modes[m];
  // One colour range per session, fixed by the first mode.
  const auto [lo, hi] = range_of(s->modes.modes.front());
  return {{"revision", s->revision},
          {"mode", m},
          {"height", z.height()},
          {"width", z.width()},
          {"provenance", provenance_json(s->modes.provenance[m])},
          {"annotations", rects_json(s->annotations[m])},
          {"depth_pmdp_base64", io::base64_encode(io::encode_depth(z))},
          {"preview", preview(z, lo, hi)}};
}

json SessionStore::next(const std::string& id, const json& body, bool wait) {
  auto s = find(id);
  std::unique_lock lk(s->mutex);
  if (s->status == Status::solving) throw HttpError(409, "session is solving");
  const double lambda = parse_lambda(body, *s);
  const auto rects = parse_rects(body, *s);

  ModeSet work = s->modes;
  auto annotations = s->annotations;
  apply_rects(work, annotations, rects);
  annotations.emplace_back();
  json event{{"event", "next"}, {"lambda", lambda}, {"annotations", rects_json(rects)}, {"time", now_ms()}};
  s->status = Status::solving;
  const std::uint64_t revision = s->revision;
  lk.unlock();

  Session* raw = s.get();
  {
    std::lock_guard wl(s->worker_mutex);
    if (s->worker.joinable()) s->worker.join();
    s->worker = std::thread([this, raw, work = std::move(work), annotations = std::move(annotations),
                             event = std::move(event), lambda]() mutable {
      try {
        next_mode(*raw->samples, work, options_with(*raw, lambda));
      } catch (...) {
        raw->status = Status::idle;
        return;
      }
      std::unique_lock wlk(raw->mutex);
      raw->modes = std::move(work);
      raw->annotations = std::move(annotations);
      ++raw->revision;
      raw->events.push_back(event);
      persist(*raw, event);
      raw->status = Status::idle;
    });
    if (wait) s->worker.join();
  }
  if (wait) {
    std::shared_lock rl(s->mutex);
    return {{"revision", s->revision}, {"status", "idle"}, {"mode_count", s->modes.size()}};
  }
  return {{"revision", revision}, {"status", "solving"}, {"mode_count", s->modes.size()}};
}

json SessionStore::select(const std::string& id, const json& body) {
  auto s = find(id);
  std::unique_lock lk(s->mutex);
  if (s->status == Status::solving) throw HttpError(409, "session is solving");
  const std::size_t m = parse_mode_index(body, *s);
  s->selected = m;
  ++s->revision;
  json event{{"event", "select"}, {"mode", m}, {"time", now_ms()}};
  s->events.push_back(event);
  persist(*s, event);
  json out{{"revision", s->revision}, {"selected", m}};
  if (s->ground_truth) out["metrics"] = json::parse(to_json(error_report(s->modes.modes[m], *s->ground_truth)));
  return out;
}

json SessionStore::variance(const std::string& id) const {
  auto s = find(id);
  std::shared_lock lk(s->mutex);
  const auto [lo, hi] = range_of(s->variance);
  return {{"revision", s->revision},
          {"height", s->variance.height()},
          {"width", s->variance.width()},
          {"variance_pmdp_base64", io::base64_encode(io::encode_depth(s->variance))},
          {"preview", preview(s->variance, lo, hi)}};
}

void SessionStore::wait_idle(const std::string& id) {
  auto s = find(id);
  std::lock_guard wl(s->worker_mutex);
  if (s->worker.joinable()) s->worker.join();
}

ModeSet SessionStore::modes(const std::string& id) const {
  auto s = find(id);
  std::shared_lock lk(s->mutex);
  return s->modes;
}

std::vector<json> SessionStore::events(const std::string& id) const {
  auto s = find(id);
  std::shared_lock lk(s->mutex);
  return s->events;
}

// HTTP ------------------------------------------------------------------------

struct HttpServer::Impl {
  SessionStore& store;
  httplib::Server server;
  std::thread thread;

  explicit Impl(SessionStore& st) : store(st) { routes(); }

  template <class F>
  static void handle(httplib::Response& res, F&& f) {
    try {
      res.set_content(f().dump(), "application/json");
    } catch (const HttpError& e) {
      res.status = e.status();
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const json::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  }

  static json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw HttpError(400, std::string("invalid JSON body: ") + e.what());
    }
  }

  void routes() {
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { return store.create(body_of(req)); });
    });
    server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { return store.info(req.matches[1]); });
    });
    server.Get(R"(/sessions/([^/]+)/modes/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { return store.mode(req.matches[1], std::stoul(req.matches[2])); });
    });
    server.Post(R"(/sessions/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        const bool wait = req.has_param("wait") && req.get_param_value("wait") != "0";
        return store.next(req.matches[1], body_of(req), wait);
      });
    });
    server.Post(R"(/sessions/([^/]+)/select)", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { return store.select(req.matches[1], body_of(req)); });
    });
    server.Get(R"(/sessions/([^/]+)/variance)", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { return store.variance(req.matches[1]); });
    });
  }
};

HttpServer::HttpServer(SessionStore& store) : impl_(std::make_unique<Impl>(store)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace pmd::service
