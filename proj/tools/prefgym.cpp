// prefgym command line: generate, validate, run, replay, report, serve.
//
// Exit codes: 0 ok, 1 failure (validation, bad input, run errors), 2 usage,
// 3 file or network I/O.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "prefgym/catalog.hpp"
#include "prefgym/error.hpp"
#include "prefgym/harness.hpp"
#include "prefgym/json_io.hpp"
#include "prefgym/prompts.hpp"
#include "prefgym/rate_limit.hpp"
#include "prefgym/report.hpp"
#include "prefgym/service.hpp"
#include "prefgym/validation.hpp"

namespace fs = std::filesystem;
using namespace prefgym;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

// EnvConfig field names double as flag names and, upper-cased with a
// PREFGYM_ prefix, as environment variables.
const std::vector<std::string> kEnvFields = {
    "mode",          "max_steps",           "search_failure_interval", "elicitation_interval",
    "reward_scale",  "step_penalty",        "search_correct_reward",   "preference_correct_reward",
    "choice_best_reward", "choice_correct_reward", "wrong_choice_penalty", "rng_seed",
    "off_topic_policy"};

Json setting_value(const std::string& key, const std::string& text) {
  auto bad = [&] { return Error(ErrorCode::kInvalidConfig, key + ": cannot read '" + text + "'"); };
  if (key == "mode" || key == "off_topic_policy") return text;
  try {
    std::size_t used = 0;
    if (key == "rng_seed") {
      if (!text.empty() && text.front() == '-') throw bad();
      const auto v = std::stoull(text, &used);
      if (used != text.size()) throw bad();
      return v;
    }
    if (key == "max_steps" || key == "search_failure_interval" || key == "elicitation_interval") {
      const auto v = std::stoll(text, &used);
      if (used != text.size()) throw bad();
      return v;
    }
    const double v = std::stod(text, &used);
    if (used != text.size()) throw bad();
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw bad();
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

Json read_json_file(const std::string& path) {
  Json j = Json::parse(read_text(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kMalformedRequest, path + " is not valid JSON");
  return j;
}

// Options shared by commands that build an EnvConfig.
struct EnvFlags {
  std::map<std::string, std::string> values;
  std::string config_file;

  void attach(CLI::App* cmd) {
    for (const auto& f : kEnvFields) cmd->add_option("--" + f, values[f], "EnvConfig " + f);
    cmd->add_option("--config", config_file, "JSON config file; its \"env\" object holds EnvConfig fields");
  }

  // flag > environment variable > config file > default
  EnvConfig resolve(const CLI::App* cmd) const {
    EnvConfig c;
    if (!config_file.empty()) {
      const Json file = read_json_file(config_file);
      if (file.contains("env")) c = config_from_json(file.at("env"), c);
    }
    Json overlay = Json::object();
    for (const auto& f : kEnvFields) {
      std::string upper = "PREFGYM_";
      for (char ch : f) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      if (const char* v = std::getenv(upper.c_str()); v && *v) overlay[f] = setting_value(f, v);
    }
    for (const auto& f : kEnvFields) {
      if (cmd->count("--" + f) > 0) overlay[f] = setting_value(f, values.at(f));
    }
    c = config_from_json(overlay, c);
    if (auto problems = validate_config(c); !problems.empty()) {
      throw Error(ErrorCode::kInvalidConfig, problems.front(), problems);
    }
    return c;
  }
};

const PreferenceCatalog& catalog_for(const std::string& path, std::unique_ptr<PreferenceCatalog>& holder) {
  if (path.empty()) return builtin_catalog();
  holder = std::make_unique<PreferenceCatalog>(load_catalog_file(path));
  return *holder;
}

struct SimulatorFlags {
  std::string kind = "rule";
  std::string judge_url;
  std::string judge_model;
  double judge_rps = 0.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--simulator", kind, "rule or remote")->check(CLI::IsMember({"rule", "remote"}));
    cmd->add_option("--judge_url", judge_url, "chat endpoint for the remote simulator (or PREFGYM_JUDGE_URL)");
    cmd->add_option("--judge_model", judge_model, "model name for the remote simulator");
    cmd->add_option("--judge_rps", judge_rps, "request rate limit for the remote simulator, 0 for none");
  }

  std::shared_ptr<SimulatorBackend> make(const PreferenceCatalog& catalog) const {
    if (kind == "rule") return std::make_shared<RuleBasedSimulator>(catalog);
    RemoteEndpoint e = RemoteEndpoint::from_env("PREFGYM_JUDGE");
    if (!judge_url.empty()) e.base_url = judge_url;
    if (!judge_model.empty()) e.model = judge_model;
    if (e.base_url.empty()) throw Error(ErrorCode::kInvalidConfig, "remote simulator needs --judge_url or PREFGYM_JUDGE_URL");
    if (judge_rps > 0) e.rate_limit = std::make_shared<TokenBucket>(judge_rps, std::max(1.0, judge_rps));
    return std::make_shared<RemoteSimulator>(e, catalog);
  }
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    seeds.push_back(setting_value("rng_seed", item).get<std::uint64_t>());
  }
  return seeds;
}

std::string log_file_name(const EpisodeResult& r) {
  return r.scenario_id + ".s" + std::to_string(r.sample) + ".jsonl";
}

std::vector<fs::path> collect_logs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
      }
    } else if (fs::exists(in)) {
      files.emplace_back(in);
    } else {
      throw Error(ErrorCode::kIoError, "no such log file or directory: " + in);
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::optional<AgentCall> prompt_call(std::istream& in, std::ostream& out, int turn) {
  std::string choice;
  std::string content;
  out << "[turn " << turn << "] choice (search/action/answer): " << std::flush;
  if (!std::getline(in, choice)) return std::nullopt;
  out << "content: " << std::flush;
  if (!std::getline(in, content)) return std::nullopt;
  return AgentCall{"", choice, content};
}

int run_interactive(const std::string& dataset_path, const std::string& scenario_id, const std::string& log_path,
                    const EnvConfig& base_config, const SimulatorFlags& sim_flags, const std::string& out_path) {
  Dataset ds = read_dataset(dataset_path);
  const Scenario* pick = nullptr;
  for (const auto& s : ds.scenarios) {
    if (scenario_id.empty() || s.scenario_id == scenario_id) {
      pick = &s;
      break;
    }
  }
  if (!pick) throw Error(ErrorCode::kNotFound, "no scenario '" + scenario_id + "' in " + dataset_path);
  EnvConfig config = base_config;
  std::vector<AgentCall> prior;
  if (!log_path.empty()) {
    const auto parsed = log_from_jsonl(read_text(log_path));
    config = parsed.log.config;
    for (const auto& t : parsed.log.turns) prior.push_back(t.call);
  }
  auto scenario = std::make_shared<const Scenario>(*pick);
  Episode episode(scenario, config, sim_flags.make(builtin_catalog()));
  std::cout << prompts::agent_system_prompt(config.mode) << "\n\nuser: " << episode.initial_observation() << "\n";
  for (const auto& call : prior) {
    if (episode.done()) break;
    auto o = episode.step(call);
    std::cout << "\n[turn " << o.info.turn_index << "] " << call.choice << ": " << call.content << "\nuser: "
              << o.observation << "\nreward: " << o.reward << "\n";
  }
  while (!episode.done()) {
    auto call = prompt_call(std::cin, std::cout, episode.turn());
    if (!call) {
      std::cout << "\n";
      break;
    }
    auto o = episode.step(*call);
    std::cout << "user: " << o.observation << "\nreward: " << o.reward << "\n";
  }
  std::cout << "\n" << render_transcript(episode.log(), !episode.done());
  if (!out_path.empty()) write_text(out_path, log_to_jsonl(episode.log()));
  return kExitOk;
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated-user environment for evaluating interactive agents"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "prefgym 0.1.0");

  // generate
  auto* gen = app.add_subcommand("generate", "Sample a dataset of scenarios");
  std::string gen_catalog, gen_plan, gen_out;
  std::uint64_t gen_seed = 0;
  int gen_wrong = OptionCounts{}.wrong, gen_noise = OptionCounts{}.noise;
  gen->add_option("--catalog", gen_catalog, "catalog JSON (built-in catalog when omitted)");
  gen->add_option("--plan", gen_plan, "compositions and counts, e.g. 22:10,33:10,44:10")->required();
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--wrong", gen_wrong, "wrong options per aspect");
  gen->add_option("--noise", gen_noise, "noise options per aspect");

  // validate
  auto* val = app.add_subcommand("validate", "Check a dataset, scenario file or catalog");
  std::string val_path, val_catalog;
  val->add_option("dataset", val_path, "dataset directory or scenario file");
  val->add_option("--catalog", val_catalog, "catalog JSON to check");

  // run
  auto* run = app.add_subcommand("run", "Run an agent over a dataset and write reports");
  std::string run_dataset, run_adapter = "scripted:oracle", run_out, run_seeds, run_group = "tier",
                           run_timing = "reward", run_format = "human", run_sweep, run_agent_model, run_catalog;
  int run_k = 1, run_parallel = 1;
  double run_agent_rps = 0.0;
  EnvFlags run_env;
  SimulatorFlags run_sim;
  run->add_option("--dataset", run_dataset, "dataset directory or scenario file")->required();
  run->add_option("--adapter", run_adapter, "scripted:<name> or remote:<endpoint>");
  run->add_option("--k", run_k, "samples per scenario")->check(CLI::PositiveNumber);
  run->add_option("--seeds", run_seeds, "comma-separated sample seeds; overrides --k");
  run->add_option("--parallel", run_parallel, "episodes run at once")->check(CLI::PositiveNumber);
  run->add_option("--group_by", run_group, "tier, composition or none")->check(CLI::IsMember({"tier", "composition", "none"}));
  run->add_option("--timing", run_timing, "weighted score multiplicand: reward or indicator")
      ->check(CLI::IsMember({"reward", "indicator"}));
  run->add_option("--format", run_format, "stdout format: human, tabular or structured");
  run->add_option("--out", run_out, "directory for reports and episode logs");
  run->add_option("--sweep", run_sweep, "max_steps=10,20,30 or options=w10n5,w10n0");
  run->add_option("--agent_model", run_agent_model, "model name for a remote agent (or PREFGYM_AGENT_MODEL)");
  run->add_option("--agent_rps", run_agent_rps, "request rate limit for a remote agent, 0 for none");
  run->add_option("--catalog", run_catalog, "catalog used for option regeneration and the simulator");
  run_env.attach(run);
  run_sim.attach(run);

  // replay
  auto* rep = app.add_subcommand("replay", "Show a logged episode, or play one by hand");
  std::string rep_log, rep_dataset, rep_scenario, rep_out;
  bool rep_human = false, rep_interactive = false;
  EnvFlags rep_env;
  SimulatorFlags rep_sim;
  rep->add_option("log", rep_log, "episode log (JSONL)");
  rep->add_flag("--human", rep_human, "print a readable transcript");
  rep->add_flag("--interactive", rep_interactive, "type agent calls at a prompt");
  rep->add_option("--dataset", rep_dataset, "dataset holding the scenario (interactive)");
  rep->add_option("--scenario_id", rep_scenario, "scenario to play (interactive; first one by default)");
  rep->add_option("--out", rep_out, "write the interactive episode log here");
  rep_env.attach(rep);
  rep_sim.attach(rep);

  // report
  auto* rpt = app.add_subcommand("report", "Aggregate episode logs into a report");
  std::vector<std::string> rpt_logs;
  std::string rpt_group = "tier", rpt_format = "human", rpt_timing = "reward";
  rpt->add_option("logs", rpt_logs, "log files or directories")->required();
  rpt->add_option("--group_by", rpt_group, "tier, composition or none")->check(CLI::IsMember({"tier", "composition", "none"}));
  rpt->add_option("--format", rpt_format, "human, tabular or structured");
  rpt->add_option("--timing", rpt_timing, "reward or indicator")->check(CLI::IsMember({"reward", "indicator"}));

  // serve
  auto* srv = app.add_subcommand("serve", "Serve the session API");
  std::string srv_config, srv_dataset, srv_host, srv_token, srv_store;
  int srv_port = -1;
  long long srv_idle = -1;
  SimulatorFlags srv_sim;
  srv->add_option("--config", srv_config, "JSON config file; its \"service\" object holds service settings");
  srv->add_option("--dataset", srv_dataset, "scenarios addressable by id");
  srv->add_option("--host", srv_host, "bind address");
  srv->add_option("--port", srv_port, "port, 0 for any free port");
  srv->add_option("--token", srv_token, "shared bearer token");
  srv->add_option("--store", srv_store, "directory for session logs");
  srv->add_option("--idle_timeout_ms", srv_idle, "idle time before a session is closed");
  srv_sim.attach(srv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      std::unique_ptr<PreferenceCatalog> holder;
      const auto& catalog = catalog_for(gen_catalog, holder);
      GenerationOptions options;
      options.counts = {gen_wrong, gen_noise};
      const Dataset ds = generate_dataset(catalog, parse_plan(gen_plan), gen_seed, options);
      write_dataset(ds, gen_out);
      std::cout << "wrote " << ds.scenarios.size() << " scenarios to " << gen_out << "\n";
      for (const auto& [tier, n] : ds.manifest.tier_counts) std::cout << "  " << tier << ": " << n << "\n";
      std::cout << "digest " << ds.manifest.digest << "\n";
      return kExitOk;
    }

    if (*val) {
      if (val_path.empty() && val_catalog.empty()) {
        std::cerr << "validate needs a dataset path or --catalog\n";
        return kExitUsage;
      }
      int bad = 0;
      if (!val_catalog.empty()) {
        load_catalog_file(val_catalog);  // throws with the violation list
        std::cout << "catalog ok: " << val_catalog << "\n";
      }
      if (!val_path.empty()) {
        const Dataset ds = read_dataset(val_path);
        std::optional<OptionCounts> counts;
        if (!ds.manifest.catalog_digest.empty()) counts = ds.manifest.counts;
        for (const auto& s : ds.scenarios) {
          const auto report = validate_scenario(s, counts);
          if (report.empty()) continue;
          ++bad;
          std::cout << s.scenario_id << ":\n" << format_report(report);
        }
        std::cout << ds.scenarios.size() - bad << " of " << ds.scenarios.size() << " scenarios valid\n";
      }
      return bad == 0 ? kExitOk : kExitFail;
    }

    if (*run) {
      std::unique_ptr<PreferenceCatalog> holder;
      const auto& catalog = catalog_for(run_catalog, holder);
      const EnvConfig config = run_env.resolve(run);
      const Dataset ds = read_dataset(run_dataset);
      RemoteAgentOptions remote = RemoteAgentOptions::from_env();
      if (!run_agent_model.empty()) remote.endpoint.model = run_agent_model;
      if (run_agent_rps > 0) remote.endpoint.rate_limit = std::make_shared<TokenBucket>(run_agent_rps, std::max(1.0, run_agent_rps));
      const auto adapters = make_adapter_factory(run_adapter, remote);
      const auto simulator = run_sim.make(catalog);
      const auto format = report_format_from_string(run_format);
      if (!format) throw Error(ErrorCode::kUnsupportedFormat, "unsupported report format '" + run_format + "'");

      BenchmarkOptions options;
      options.samples = run_k;
      options.seeds = parse_seeds(run_seeds);
      options.parallelism = run_parallel;
      options.group_by = *group_by_from_string(run_group);
      options.timing = *timing_mode_from_string(run_timing);
      options.adapter_spec = run_adapter;

      if (!run_sweep.empty()) {
        const auto points = parse_sweep(run_sweep);
        const auto reports = prefgym::run_sweep(catalog, ds, config, simulator, adapters, options, points);
        for (std::size_t i = 0; i < reports.size(); ++i) {
          std::cout << "## " << points[i].label << "\n" << render_report(reports[i], *format) << "\n";
          if (!run_out.empty()) {
            const fs::path dir = fs::path(run_out) / points[i].label;
            write_text(dir / "report.json", render_report(reports[i], ReportFormat::kStructured));
            write_text(dir / "report.csv", render_report(reports[i], ReportFormat::kTabular));
          }
        }
        return kExitOk;
      }

      int errors = 0;
      if (!run_out.empty()) {
        options.on_episode = [&](const EpisodeResult& r) {
          write_text(fs::path(run_out) / "logs" / log_file_name(r), log_to_jsonl(r.log));
        };
      }
      const BenchmarkRun result = run_benchmark(ds, config, simulator, adapters, options);
      for (const auto& r : result.results) {
        if (r.error.empty()) continue;
        ++errors;
        std::cerr << "error: " << r.scenario_id << " sample " << r.sample << ": " << r.error << "\n";
      }
      std::cout << render_report(result.report, *format);
      if (!run_out.empty()) {
        write_text(fs::path(run_out) / "report.json", render_report(result.report, ReportFormat::kStructured));
        write_text(fs::path(run_out) / "report.csv", render_report(result.report, ReportFormat::kTabular));
        write_text(fs::path(run_out) / "report.txt", render_report(result.report, ReportFormat::kHuman));
        std::cout << "report digest " << report_digest(result.report) << "\n";
      }
      return errors == 0 ? kExitOk : kExitFail;
    }

    if (*rep) {
      if (rep_interactive) {
        if (rep_dataset.empty()) {
          std::cerr << "replay --interactive needs --dataset\n";
          return kExitUsage;
        }
        return run_interactive(rep_dataset, rep_scenario, rep_log, rep_env.resolve(rep), rep_sim, rep_out);
      }
      if (rep_log.empty()) {
        std::cerr << "replay needs a log path\n";
        return kExitUsage;
      }
      const auto parsed = log_from_jsonl(read_text(rep_log));
      if (rep_human) {
        std::cout << render_transcript(parsed.log, parsed.truncated);
      } else {
        Json summary = {{"scenario_id", parsed.log.scenario_id},
                        {"turns", parsed.log.turns.size()},
                        {"terminal_reason", parsed.log.terminal_reason
                                                ? Json(std::string(to_string(*parsed.log.terminal_reason)))
                                                : Json(nullptr)},
                        {"truncated", parsed.truncated},
                        {"score", score_episode(parsed.log)},
                        {"metrics", to_json(compute_metrics({parsed.log}))}};
        std::cout << summary.dump(2) << "\n";
      }
      return kExitOk;
    }

    if (*rpt) {
      const auto format = report_format_from_string(rpt_format);
      if (!format) throw Error(ErrorCode::kUnsupportedFormat, "unsupported report format '" + rpt_format + "'");
      std::vector<EpisodeResult> results;
      int truncated = 0;
      for (const auto& path : collect_logs(rpt_logs)) {
        const auto parsed = log_from_jsonl(read_text(path.string()));
        truncated += parsed.truncated;
        EpisodeResult r;
        r.scenario_id = parsed.log.scenario_id;
        r.tier = parsed.log.tier;
        r.composition = composition_label(parsed.log.composition);
        r.seed = parsed.log.config.rng_seed;
        r.log = parsed.log;
        results.push_back(std::move(r));
      }
      BenchmarkReport report = aggregate(results, *group_by_from_string(rpt_group), *timing_mode_from_string(rpt_timing));
      report.metadata["logs"] = results.size();
      report.metadata["truncated_logs"] = truncated;
      report.metadata["group_by"] = rpt_group;
      report.metadata["timing"] = rpt_timing;
      std::cout << render_report(report, *format);
      return kExitOk;
    }

    if (*srv) {
      ServiceConfig config;
      if (!srv_config.empty()) {
        const Json file = read_json_file(srv_config);
        if (file.contains("service")) config = service_config_from_json(file.at("service"), config);
        if (file.contains("env")) config.defaults = config_from_json(file.at("env"), config.defaults);
      }
      apply_service_env(config);
      if (!srv_host.empty()) config.host = srv_host;
      if (srv_port >= 0) config.port = srv_port;
      if (!srv_token.empty()) config.token = srv_token;
      if (!srv_store.empty()) config.store_dir = srv_store;
      if (srv_idle >= 0) config.idle_timeout = std::chrono::milliseconds(srv_idle);
      std::vector<Scenario> scenarios;
      if (!srv_dataset.empty()) scenarios = read_dataset(srv_dataset).scenarios;
      SessionService service(config, std::move(scenarios), srv_sim.make(builtin_catalog()));
      const int recovered = service.recover();
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      const int port = service.start();
      std::cout << "listening on " << config.host << ":" << port << " (" << recovered << " sessions recovered)"
                << std::endl;
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      service.stop();
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& d : e.details()) std::cerr << "  " << d << "\n";
    return e.code() == ErrorCode::kIoError ? kExitIo : kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}
