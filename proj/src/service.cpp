#include "prefgym/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "prefgym/error.hpp"
#include "prefgym/prompts.hpp"

namespace prefgym {

namespace fs = std::filesystem;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict:
    case ErrorCode::kEpisodeDone: return 409;
    case ErrorCode::kAuthFailed: return 401;
    case ErrorCode::kInvalidScenario:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kMalformedCall:
    case ErrorCode::kMalformedRequest:
    case ErrorCode::kUnsupportedComposition:
    case ErrorCode::kUnsupportedFormat: return 400;
    case ErrorCode::kBackendUnavailable: return 503;
    default: return 500;
  }
}

Json error_body(ErrorCode code, const std::string& message, const std::vector<std::string>& details) {
  Json e = {{"code", std::string(to_string(code))}, {"message", message}};
  if (!details.empty()) e["details"] = details;
  return {{"error", e}};
}

namespace {

ServiceResponse fail(const Error& e) { return {http_status(e.code()), error_body(e.code(), e.what(), e.details())}; }

std::string new_session_id() {
  static std::mutex m;
  static std::mt19937_64 engine{std::random_device{}() ^ (static_cast<std::uint64_t>(std::random_device{}()) << 32)};
  std::lock_guard lock(m);
  char buf[40];
  std::snprintf(buf, sizeof buf, "s-%016llx%08llx", static_cast<unsigned long long>(engine()),
                static_cast<unsigned long long>(engine() & 0xffffffffu));
  return buf;
}

void write_all(int fd, std::string_view data, const std::string& path) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIoError, "write to " + path + " failed");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void append_durable(const std::string& path, std::string_view data) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::kIoError, "cannot open " + path);
  try {
    write_all(fd, data, path);
  } catch (...) {
    ::close(fd);
    throw;
  }
  const int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) throw Error(ErrorCode::kIoError, "fsync of " + path + " failed");
}

// Write to a temporary file, flush it, then rename over the target.
void replace_durable(const std::string& path, std::string_view data) {
  const std::string tmp = path + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_TRUNC | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::kIoError, "cannot open " + tmp);
  try {
    write_all(fd, data, tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  const int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) throw Error(ErrorCode::kIoError, "fsync of " + tmp + " failed");
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "rename to " + path + " failed: " + ec.message());
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string turn_line(const TurnRecord& t) {
  Json line = {{"type", "turn"}};
  line.update(to_json(t));
  return line.dump() + "\n";
}

}  // namespace

ServiceConfig service_config_from_json(const Json& j, const ServiceConfig& base) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "service config must be an object");
  ServiceConfig c = base;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      const Json& v = it.value();
      if (k == "host") c.host = v.get<std::string>();
      else if (k == "port") c.port = v.get<int>();
      else if (k == "token") c.token = v.get<std::string>();
      else if (k == "store_dir") c.store_dir = v.get<std::string>();
      else if (k == "idle_timeout_ms") c.idle_timeout = std::chrono::milliseconds(v.get<std::int64_t>());
      else if (k == "sweep_interval_ms") c.sweep_interval = std::chrono::milliseconds(v.get<std::int64_t>());
      else if (k == "max_sessions") c.max_sessions = v.get<int>();
      else if (k == "threads") c.threads = v.get<int>();
      else if (k == "defaults") c.defaults = config_from_json(v, c.defaults);
      else throw Error(ErrorCode::kInvalidConfig, "unknown service setting '" + k + "'");
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("service config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidConfig) throw;
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::kInvalidConfig, "port out of range");
  if (c.max_sessions < 1) throw Error(ErrorCode::kInvalidConfig, "max_sessions must be at least 1");
  if (c.threads < 1) throw Error(ErrorCode::kInvalidConfig, "threads must be at least 1");
  return c;
}

void apply_service_env(ServiceConfig& c) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  auto number = [](const std::string& name, const std::string& v) {
    try {
      std::size_t used = 0;
      const long long n = std::stoll(v, &used);
      if (used == v.size()) return n;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::kInvalidConfig, name + " must be an integer, got '" + v + "'");
  };
  if (auto v = env("PREFGYM_SERVICE_HOST")) c.host = *v;
  if (auto v = env("PREFGYM_SERVICE_PORT")) c.port = static_cast<int>(number("PREFGYM_SERVICE_PORT", *v));
  if (auto v = env("PREFGYM_SERVICE_TOKEN")) c.token = *v;
  if (auto v = env("PREFGYM_SERVICE_STORE")) c.store_dir = *v;
  if (auto v = env("PREFGYM_SERVICE_IDLE_TIMEOUT_MS")) {
    c.idle_timeout = std::chrono::milliseconds(number("PREFGYM_SERVICE_IDLE_TIMEOUT_MS", *v));
  }
  if (auto v = env("PREFGYM_SERVICE_MAX_SESSIONS")) {
    c.max_sessions = static_cast<int>(number("PREFGYM_SERVICE_MAX_SESSIONS", *v));
  }
}

struct SessionService::Session {
  std::string id;
  std::shared_ptr<const Scenario> scenario;
  EnvConfig config;
  std::unique_ptr<Episode> episode;  // null once read-only
  EpisodeLog frozen;
  std::string note;
  std::mutex lock;  // held for the length of a step
  Clock::time_point last_active = Clock::now();

  const EpisodeLog& log() const { return episode ? episode->log() : frozen; }
  bool done() const { return episode ? episode->done() : true; }
};

SessionService::SessionService(ServiceConfig config, std::vector<Scenario> scenarios,
                               std::shared_ptr<SimulatorBackend> simulator)
    : config_(std::move(config)), simulator_(std::move(simulator)) {
  if (!simulator_) throw Error(ErrorCode::kInvalidConfig, "service needs a simulator backend");
  for (auto& s : scenarios) {
    auto id = s.scenario_id;
    scenarios_[id] = std::make_shared<const Scenario>(std::move(s));
  }
  if (!config_.store_dir.empty()) {
    std::error_code ec;
    fs::create_directories(config_.store_dir, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create " + config_.store_dir + ": " + ec.message());
  }
}

SessionService::~SessionService() { stop(); }

std::string SessionService::session_log_path(const std::string& id) const {
  return (fs::path(config_.store_dir) / (id + ".jsonl")).string();
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) {
  std::lock_guard g(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "no session '" + id + "'");
  return it->second;
}

void SessionService::persist_new(const Session& s) {
  if (config_.store_dir.empty()) return;
  Json meta = {{"session_id", s.id}, {"scenario", to_json(*s.scenario)}, {"config", to_json(s.config)}};
  replace_durable((fs::path(config_.store_dir) / (s.id + ".session.json")).string(), meta.dump() + "\n");
  replace_durable(session_log_path(s.id), log_header_json(s.log()).dump() + "\n");
}

void SessionService::append(const Session& s, const std::string& lines) {
  if (config_.store_dir.empty() || lines.empty()) return;
  append_durable(session_log_path(s.id), lines);
}

void SessionService::finalize(Session& s, const std::string& note) {
  if (!s.episode || s.episode->done()) return;
  s.episode->abort(note);
  append(s, log_end_json(s.episode->log()).dump() + "\n");
}

int SessionService::recover() {
  if (config_.store_dir.empty()) return 0;
  int loaded = 0;
  std::vector<fs::path> metas;
  for (const auto& entry : fs::directory_iterator(config_.store_dir)) {
    const auto name = entry.path().filename().string();
    const std::string suffix = ".session.json";
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      metas.push_back(entry.path());
    }
  }
  std::sort(metas.begin(), metas.end());
  for (const auto& path : metas) {
    auto s = std::make_shared<Session>();
    try {
      const Json meta = Json::parse(read_file(path));
      s->id = meta.at("session_id").get<std::string>();
      s->scenario = std::make_shared<const Scenario>(scenario_from_json(meta.at("scenario")));
      s->config = config_from_json(meta.at("config"));
      const std::string log_path = session_log_path(s->id);
      ParsedLog stored;
      if (fs::exists(log_path)) stored = log_from_jsonl(read_file(log_path));
      else stored.truncated = true;

      if (!stored.truncated) {
        s->frozen = stored.log;
      } else {
        auto episode = std::make_unique<Episode>(s->scenario, s->config, simulator_);
        bool same = true;
        for (const auto& t : stored.log.turns) {
          if (episode->done()) {
            same = false;
            break;
          }
          episode->step(t.call);
          if (canonical(to_json(episode->log().turns.back())) != canonical(to_json(t))) {
            same = false;
            break;
          }
        }
        if (same) {
          // Rewrite without any torn tail, and close out a finished episode.
          replace_durable(log_path, log_to_jsonl(episode->log()));
          s->episode = std::move(episode);
        } else {
          s->frozen = stored.log;
          s->note = "replay diverged from the stored turns; session is read-only";
        }
      }
    } catch (const std::exception& e) {
      std::fprintf(stderr, "warning: skipping stored session %s: %s\n", path.string().c_str(), e.what());
      continue;
    }
    std::lock_guard g(mutex_);
    sessions_[s->id] = s;
    ++loaded;
  }
  return loaded;
}

ServiceResponse SessionService::create(const Json& body) {
  try {
    if (!body.is_object()) throw Error(ErrorCode::kMalformedRequest, "request body must be a JSON object");
    std::shared_ptr<const Scenario> scenario;
    if (body.contains("scenario")) {
      try {
        scenario = std::make_shared<const Scenario>(scenario_from_json(body.at("scenario")));
      } catch (const Error& e) {
        throw Error(ErrorCode::kInvalidScenario, e.what());
      }
    } else if (body.contains("scenario_id") && body.at("scenario_id").is_string()) {
      const auto id = body.at("scenario_id").get<std::string>();
      auto it = scenarios_.find(id);
      if (it == scenarios_.end()) throw Error(ErrorCode::kNotFound, "no scenario '" + id + "'");
      scenario = it->second;
    } else {
      throw Error(ErrorCode::kMalformedRequest, "give scenario_id or an inline scenario");
    }
    EnvConfig config = config_.defaults;
    if (body.contains("config")) {
      try {
        config = config_from_json(body.at("config"), config_.defaults);
      } catch (const Error& e) {
        throw Error(ErrorCode::kInvalidConfig, e.what());
      }
    }

    auto s = std::make_shared<Session>();
    s->id = new_session_id();
    s->scenario = scenario;
    s->config = config;
    s->episode = std::make_unique<Episode>(scenario, config, simulator_);
    {
      std::lock_guard g(mutex_);
      int live = 0;
      for (const auto& [id, other] : sessions_) {
        std::unique_lock l(other->lock, std::try_to_lock);
        live += !l.owns_lock() || !other->done();
      }
      if (live >= config_.max_sessions) {
        return {429, error_body(ErrorCode::kConflict, "session limit of " + std::to_string(config_.max_sessions) +
                                                          " live sessions reached")};
      }
      sessions_[s->id] = s;
    }
    try {
      persist_new(*s);
    } catch (...) {
      std::lock_guard g(mutex_);
      sessions_.erase(s->id);
      throw;
    }
    Json out = {{"session_id", s->id},
                {"scenario_id", scenario->scenario_id},
                {"observation", s->episode->initial_observation()},
                {"system_prompt", prompts::agent_system_prompt(config.mode)},
                {"tool_schema", prompts::tool_schema()},
                {"config", to_json(config)},
                {"turn", 0},
                {"done", false}};
    return {201, out};
  } catch (const Error& e) {
    return fail(e);
  }
}

ServiceResponse SessionService::step(const std::string& id, const Json& body) {
  try {
    auto s = find(id);
    std::unique_lock l(s->lock, std::try_to_lock);
    if (!l.owns_lock()) throw Error(ErrorCode::kConflict, "another step is in progress on session " + id);
    if (!body.is_object()) throw Error(ErrorCode::kMalformedRequest, "request body must be a JSON object");
    if (!s->episode) throw Error(ErrorCode::kConflict, s->note);
    if (s->episode->done()) throw Error(ErrorCode::kEpisodeDone, "session " + id + " has ended");
    if (body.contains("expected_turn")) {
      const Json& t = body.at("expected_turn");
      if (!t.is_number_integer()) throw Error(ErrorCode::kMalformedRequest, "expected_turn must be an integer");
      if (t.get<std::int64_t>() != s->episode->turn()) {
        throw Error(ErrorCode::kConflict, "expected turn " + t.dump() + " but the session is at turn " +
                                              std::to_string(s->episode->turn()));
      }
    }
    const Json& call_json = body.contains("call") ? body.at("call") : body;
    AgentCall call;
    try {
      call = agent_call_from_json(call_json);
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedCall, e.what());
    }
    StepOutcome outcome = s->episode->step(call);
    std::string lines = turn_line(s->episode->log().turns.back());
    if (outcome.done) lines += log_end_json(s->episode->log()).dump() + "\n";
    append(*s, lines);
    s->last_active = Clock::now();
    Json out = {{"session_id", id},
                {"observation", outcome.observation},
                {"reward", outcome.reward},
                {"done", outcome.done},
                {"info", to_json(outcome.info)},
                {"turn", s->episode->turn()}};
    return {200, out};
  } catch (const Error& e) {
    return fail(e);
  }
}

ServiceResponse SessionService::get(const std::string& id) {
  try {
    auto s = find(id);
    std::lock_guard l(s->lock);
    const auto& log = s->log();
    Json out = {{"session_id", id},
                {"done", s->done()},
                {"turn", log.turns.size()},
                {"read_only", s->episode == nullptr},
                {"log", to_json(log)}};
    if (!s->note.empty()) out["note"] = s->note;
    return {200, out};
  } catch (const Error& e) {
    return fail(e);
  }
}

ServiceResponse SessionService::close(const std::string& id) {
  try {
    auto s = find(id);
    std::lock_guard l(s->lock);
    finalize(*s, "closed by client before the episode ended");
    return {200, {{"session_id", id}, {"done", true}, {"log", to_json(s->log())}}};
  } catch (const Error& e) {
    return fail(e);
  }
}

ServiceResponse SessionService::health() {
  std::lock_guard g(mutex_);
  return {200,
          {{"status", "ok"},
           {"sessions", sessions_.size()},
           {"scenarios", scenarios_.size()},
           {"simulator", simulator_->name()}}};
}

int SessionService::expire_idle(Clock::time_point now) {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard g(mutex_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  int expired = 0;
  for (auto& s : all) {
    std::unique_lock l(s->lock, std::try_to_lock);
    if (!l.owns_lock() || s->done()) continue;
    if (now - s->last_active < config_.idle_timeout) continue;
    try {
      finalize(*s, "idle timeout");
      ++expired;
    } catch (const Error& e) {
      std::fprintf(stderr, "warning: could not finalize %s: %s\n", s->id.c_str(), e.what());
    }
  }
  return expired;
}

bool SessionService::authorized(const std::string& header) const {
  if (config_.token.empty()) return true;
  return header == "Bearer " + config_.token;
}

void SessionService::mount(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse = [](const httplib::Request& req) -> std::optional<Json> {
    if (req.body.empty()) return Json::object();
    Json j = Json::parse(req.body, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
  };
  auto guarded = [this, reply](auto handler) {
    return [this, reply, handler](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req.get_header_value("Authorization"))) {
        reply(res, {401, error_body(ErrorCode::kAuthFailed, "missing or wrong bearer token")});
        return;
      }
      handler(req, res);
    };
  };
  auto bad_json = ServiceResponse{400, error_body(ErrorCode::kMalformedRequest, "request body is not valid JSON")};

  server.Get("/v1/healthz", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, health()); });
  server.Post("/v1/sessions", guarded([this, reply, parse, bad_json](const httplib::Request& req, httplib::Response& res) {
                auto body = parse(req);
                reply(res, body ? create(*body) : bad_json);
              }));
  server.Post(R"(/v1/sessions/([A-Za-z0-9_-]+)/step)",
              guarded([this, reply, parse, bad_json](const httplib::Request& req, httplib::Response& res) {
                auto body = parse(req);
                reply(res, body ? step(req.matches[1], *body) : bad_json);
              }));
  server.Get(R"(/v1/sessions/([A-Za-z0-9_-]+))", guarded([this, reply](const httplib::Request& req, httplib::Response& res) {
               reply(res, get(req.matches[1]));
             }));
  server.Delete(R"(/v1/sessions/([A-Za-z0-9_-]+))",
                guarded([this, reply](const httplib::Request& req, httplib::Response& res) {
                  reply(res, close(req.matches[1]));
                }));
  server.set_error_handler([reply](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const ErrorCode code = res.status == 404 ? ErrorCode::kNotFound : ErrorCode::kMalformedRequest;
    reply(res, {res.status, error_body(code, "HTTP " + std::to_string(res.status))});
  });
  server.set_exception_handler([reply](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, {500, error_body(ErrorCode::kIoError, what)});
  });
}

int SessionService::start() {
  if (server_) throw Error(ErrorCode::kConflict, "service already started");
  server_ = std::make_unique<httplib::Server>();
  const int threads = config_.threads;
  server_->new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
  mount(*server_);
  int port = config_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(config_.host);
  } else if (!server_->bind_to_port(config_.host, port)) {
    port = -1;
  }
  if (port < 0) {
    server_.reset();
    throw Error(ErrorCode::kIoError, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  {
    std::lock_guard l(sweeper_mutex_);
    stopping_ = false;
  }
  sweeper_thread_ = std::thread([this] { sweeper(); });
  server_->wait_until_ready();
  return port;
}

void SessionService::sweeper() {
  std::unique_lock l(sweeper_mutex_);
  while (!stopping_) {
    sweeper_cv_.wait_for(l, config_.sweep_interval, [this] { return stopping_; });
    if (stopping_) break;
    l.unlock();
    expire_idle();
    l.lock();
  }
}

void SessionService::stop() {
  {
    std::lock_guard l(sweeper_mutex_);
    stopping_ = true;
  }
  sweeper_cv_.notify_all();
  if (sweeper_thread_.joinable()) sweeper_thread_.join();
  if (server_) server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
  server_.reset();
}

}  // namespace prefgym
