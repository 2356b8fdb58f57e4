#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "prefgym/catalog.hpp"
#include "prefgym/engine.hpp"
#include "prefgym/error.hpp"
#include "prefgym/json_io.hpp"
#include "prefgym/simulator.hpp"

namespace httplib {
class Server;
}

namespace prefgym {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;             // 0 picks a free port
  std::string token;           // shared bearer token; empty disables auth
  std::string store_dir;       // per-session logs; empty keeps sessions in memory only
  std::chrono::milliseconds idle_timeout{std::chrono::minutes(15)};
  std::chrono::milliseconds sweep_interval{std::chrono::seconds(5)};
  int max_sessions = 256;      // live (unfinished) sessions
  int threads = 8;
  EnvConfig defaults;          // base config for new sessions
};

// Keys: host, port, token, store_dir, idle_timeout_ms, sweep_interval_ms,
// max_sessions, threads, defaults{EnvConfig}. Unknown keys are rejected.
ServiceConfig service_config_from_json(const Json& j, const ServiceConfig& base = {});
// PREFGYM_SERVICE_HOST, _PORT, _TOKEN, _STORE, _IDLE_TIMEOUT_MS, _MAX_SESSIONS.
void apply_service_env(ServiceConfig& config);

// HTTP status for an error code.
int http_status(ErrorCode code);
Json error_body(ErrorCode code, const std::string& message, const std::vector<std::string>& details = {});

struct ServiceResponse {
  int status = 200;
  Json body;
};

// Session store and request handling, usable without a socket. Each
// session is single-writer: a step that finds another step in progress, or
// whose expected_turn does not match, gets CONFLICT.
class SessionService {
 public:
  using Clock = std::chrono::steady_clock;

  SessionService(ServiceConfig config, std::vector<Scenario> scenarios, std::shared_ptr<SimulatorBackend> simulator);
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  // Reloads sessions from store_dir. Unfinished sessions are rebuilt by
  // replaying their calls; one whose replay differs from the stored turns
  // stays readable but accepts no more steps. Returns the number loaded.
  int recover();

  ServiceResponse create(const Json& body);
  ServiceResponse step(const std::string& id, const Json& body);
  ServiceResponse get(const std::string& id);
  ServiceResponse close(const std::string& id);
  ServiceResponse health();

  // Finalizes sessions idle for longer than the timeout. Returns how many.
  int expire_idle(Clock::time_point now = Clock::now());

  // HTTP. start() binds and serves on a background thread and returns the
  // bound port.
  void mount(httplib::Server& server);
  int start();
  void stop();

  std::string session_log_path(const std::string& id) const;

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id);
  void persist_new(const Session& s);
  void append(const Session& s, const std::string& lines);
  void finalize(Session& s, const std::string& note);
  bool authorized(const std::string& header) const;
  void sweeper();

  ServiceConfig config_;
  std::map<std::string, std::shared_ptr<const Scenario>> scenarios_;
  std::shared_ptr<SimulatorBackend> simulator_;

  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;

  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
  std::thread sweeper_thread_;
  std::mutex sweeper_mutex_;
  std::condition_variable sweeper_cv_;
  bool stopping_ = false;
};

}  // namespace prefgym
