#pragma once

// Benchmark harness: dataset ingestion, the parallel runner with resume,
// Pass@k, and the run report.

#include <lemmaguide/config.hpp>
#include <lemmaguide/errors.hpp>
#include <lemmaguide/http_transport.hpp>
#include <lemmaguide/orchestrator.hpp>
#include <lemmaguide/run_log.hpp>
#include <lemmaguide/task_model.hpp>
#include <lemmaguide/verifier.hpp>

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace lemmaguide {

// ---------------------------------------------------------------------------
// dataset

struct DatasetEntry {
  std::string name;
  std::string formal_statement;
  std::string informal_statement;
  std::optional<std::string> header;
  int line = 0;
};

/// Drops a trailing `:= by` or `:=` so statements read as headers.
inline std::string strip_proof_opener(std::string statement) {
  std::string_view s = lean::rtrim(statement);
  if (s.size() >= 2 && s.substr(s.size() - 2) == "by" &&
      (s.size() == 2 || !lean::is_ident_rest(static_cast<unsigned char>(s[s.size() - 3])))) {
    const std::string_view before = lean::rtrim(s.substr(0, s.size() - 2));
    if (before.size() >= 2 && before.substr(before.size() - 2) == ":=") s = before;
  }
  if (s.size() >= 2 && s.substr(s.size() - 2) == ":=") s = lean::rtrim(s.substr(0, s.size() - 2));
  return std::string(s);
}

inline std::vector<DatasetEntry> parse_dataset(std::istream& in, const std::string& origin = "dataset") {
  std::vector<DatasetEntry> entries;
  std::map<std::string, int> first_line;
  std::string line;
  auto fail = [&](int number, const std::string& why) {
    throw Error(ErrorCode::dataset_error, origin + ":" + std::to_string(number) + ": " + why);
  };
  for (int number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(number, "parse error: not a JSON object");
    DatasetEntry e;
    e.line = number;
    for (auto [key, field] : {std::pair<const char*, std::string*>{"name", &e.name},
                              {"formal_statement", &e.formal_statement},
                              {"informal_statement", &e.informal_statement}}) {
      auto it = j.find(key);
      if (it == j.end() || !it->is_string()) fail(number, std::string("missing string field `") + key + "`");
      *field = it->get<std::string>();
    }
    if (auto it = j.find("header"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) fail(number, "`header` must be a string");
      e.header = it->get<std::string>();
    }
    if (lean::trim(e.name).empty()) fail(number, "empty name");
    if (auto [it, inserted] = first_line.emplace(e.name, number); !inserted) {
      fail(number, "duplicate name `" + e.name + "` (lines " + std::to_string(it->second) + " and " +
                       std::to_string(number) + ")");
    }
    e.formal_statement = strip_proof_opener(e.formal_statement);
    if (auto why = validate_formal_statement(e.formal_statement); !why.empty()) {
      fail(number, "invalid statement: " + why);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

inline std::vector<DatasetEntry> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::dataset_error, "cannot read dataset " + path.string());
  return parse_dataset(in, path.string());
}

inline TheoremTask to_task(const DatasetEntry& e, const std::string& default_preamble) {
  return TheoremTask{e.name, e.formal_statement, e.informal_statement, e.header.value_or(default_preamble)};
}

// ---------------------------------------------------------------------------
// Pass@k

inline double compute_pass_at_k(const std::vector<TheoremOutcome>& outcomes, int k) {
  if (k < 1) throw Error(ErrorCode::precondition, "k must be >= 1");
  if (outcomes.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& o : outcomes) {
    if (o.solving_attempt_index && *o.solving_attempt_index <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

/// pass_curve[j - 1] = fraction solved within j prover calls, j = 1..budget.
inline std::vector<double> pass_curve(const std::vector<TheoremOutcome>& outcomes, int budget) {
  std::vector<double> curve(static_cast<std::size_t>(std::max(budget, 0)), 0.0);
  if (outcomes.empty()) return curve;
  std::vector<std::size_t> solved_at(curve.size() + 1, 0);
  for (const auto& o : outcomes) {
    if (o.solving_attempt_index && *o.solving_attempt_index >= 1 && *o.solving_attempt_index <= budget) {
      ++solved_at[static_cast<std::size_t>(*o.solving_attempt_index)];
    }
  }
  std::size_t running = 0;
  for (std::size_t j = 1; j <= curve.size(); ++j) {
    running += solved_at[j];
    curve[j - 1] = static_cast<double>(running) / static_cast<double>(outcomes.size());
  }
  return curve;
}

// ---------------------------------------------------------------------------
// report

namespace report_category {
inline const std::vector<std::string> one_time_guidance{"nl_proof", "summary"};
inline const std::vector<std::string> lemma_processing{"syntax_check", "selection", "lemma_proofs", "salvage",
                                                       "assembly"};
}  // namespace report_category

struct RunReport {
  std::vector<TheoremOutcome> outcomes;
  int budget = 128;
  std::vector<double> curve;
  std::vector<int> ks;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::string config_hash;
  nlohmann::ordered_json timings = nlohmann::ordered_json::object();
  bool log_consistent = true;

  std::size_t count(OutcomeStatus s) const {
    std::size_t n = 0;
    for (const auto& o : outcomes) n += o.status == s;
    return n;
  }

  double pass_at(int k) const { return compute_pass_at_k(outcomes, k); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "lemmaguide.report/1";
    j["config_hash"] = config_hash;
    j["theorems"] = outcomes.size();
    j["solved"] = count(OutcomeStatus::solved);
    j["exhausted"] = count(OutcomeStatus::exhausted);
    j["infrastructure_failures"] = count(OutcomeStatus::infrastructure_failure);
    j["budget"] = budget;
    nlohmann::ordered_json pass = nlohmann::ordered_json::object();
    for (int k : ks) pass[std::to_string(k)] = pass_at(k);
    j["pass_at"] = pass;
    j["pass_curve"] = curve;
    int calls = 0;
    for (const auto& o : outcomes) calls += o.ledger.consumed();
    j["prover_calls"] = calls;
    j["timings"] = timings;
    j["log_consistent"] = log_consistent;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& o : outcomes) {
      nlohmann::ordered_json trace = nlohmann::ordered_json::array();
      for (auto p : o.phase_trace) trace.push_back(to_string(p));
      rows.push_back({{"theorem", o.task_name},
                      {"status", to_string(o.status)},
                      {"solving_attempt_index",
                       o.solving_attempt_index ? nlohmann::ordered_json(*o.solving_attempt_index) : nlohmann::ordered_json()},
                      {"prover_calls", o.ledger.consumed()},
                      {"phase_trace", trace}});
    }
    j["outcomes"] = rows;
    j["config"] = config;
    return j;
  }

  std::string to_table() const {
    std::ostringstream out;
    out << std::fixed;
    out << "theorems " << outcomes.size() << "  solved " << count(OutcomeStatus::solved) << "  exhausted "
        << count(OutcomeStatus::exhausted) << "  infrastructure failures "
        << count(OutcomeStatus::infrastructure_failure) << "\n";
    out << "budget " << budget << "  config " << config_hash << "\n\n";
    for (int k : ks) out << "pass@" << std::left << std::setw(5) << k << std::setprecision(4) << pass_at(k) << "\n";
    out << "\n" << std::left << std::setw(22) << "component" << std::setw(12) << "mean s" << "n\n";
    for (const auto& [category, rows] : timings.items()) {
      out << category << "\n";
      for (const auto& [name, row] : rows.items()) {
        out << "  " << std::left << std::setw(20) << name << std::setw(12) << std::setprecision(3)
            << row.at("mean_seconds").get<double>() << row.at("count").get<long>() << "\n";
      }
    }
    out << "\n" << std::left << std::setw(32) << "theorem" << std::setw(24) << "status" << "solved at\n";
    for (const auto& o : outcomes) {
      out << std::left << std::setw(32) << o.task_name << std::setw(24) << to_string(o.status)
          << (o.solving_attempt_index ? std::to_string(*o.solving_attempt_index) : "-") << "\n";
    }
    return out.str();
  }
};

/// Timing aggregates in three groups: one-time guidance and conditional
/// lemma processing as mean seconds per theorem that ran the component,
/// prover costs as mean seconds per attempt by stage.
inline nlohmann::ordered_json timing_summary(const std::vector<TheoremOutcome>& outcomes,
                                             const std::vector<nlohmann::json>& attempts) {
  auto per_theorem = [&](const std::vector<std::string>& names) {
    nlohmann::ordered_json group = nlohmann::ordered_json::object();
    for (const auto& name : names) {
      double total = 0.0;
      long n = 0;
      for (const auto& o : outcomes) {
        if (auto it = o.component_seconds.find(name); it != o.component_seconds.end()) {
          total += it->second;
          ++n;
        }
      }
      group[name] = {{"mean_seconds", n ? total / static_cast<double>(n) : 0.0}, {"count", n}};
    }
    return group;
  };
  nlohmann::ordered_json per_attempt = nlohmann::ordered_json::object();
  std::map<std::string, std::pair<double, long>> by_stage;
  for (const auto& a : attempts) {
    std::string stage = a.value("stage", "");
    if (stage.rfind("lemma:", 0) == 0) stage = "lemma";
    const double s = a.value("gen_seconds", 0.0) + a.value("verify_seconds", 0.0);
    for (const std::string& key : {stage, std::string("all")}) {
      by_stage[key].first += s;
      ++by_stage[key].second;
    }
  }
  for (const char* stage : {"initial", "main_sketch", "lemma", "fallback", "all"}) {
    const auto [total, n] = by_stage[stage];
    per_attempt[stage] = {{"mean_seconds", n ? total / static_cast<double>(n) : 0.0}, {"count", n}};
  }
  return nlohmann::ordered_json{{"one_time_guidance", per_theorem(report_category::one_time_guidance)},
                                {"lemma_processing", per_theorem(report_category::lemma_processing)},
                                {"per_attempt", per_attempt}};
}

namespace log_file {
inline constexpr const char* run_config = "run_config.json";
inline constexpr const char* report_json = "report.json";
inline constexpr const char* report_txt = "report.txt";
}  // namespace log_file

/// Report rebuilt from a log directory alone. Outcomes follow the order of
/// `order` when given, otherwise log order.
inline RunReport report_from_logs(const std::filesystem::path& dir, std::vector<int> ks = {32, 128},
                                  const std::vector<std::string>& order = {}) {
  std::ifstream cfg(dir / log_file::run_config);
  if (!cfg) throw Error(ErrorCode::config_error, "no run_config.json in " + dir.string());
  const auto run_config = nlohmann::ordered_json::parse(cfg, nullptr, false);
  if (run_config.is_discarded()) throw Error(ErrorCode::config_error, "malformed run_config.json");

  RunReport report;
  report.ks = std::move(ks);
  report.config = run_config.at("config");
  report.config_hash = run_config.at("config_hash").get<std::string>();
  report.budget = report.config.at("run").at("budget").get<int>();

  std::map<std::string, TheoremOutcome> by_name;
  std::vector<std::string> log_order;
  for (const auto& j : read_jsonl(dir / log_file::outcomes)) {
    if (j.value("config_hash", "") != report.config_hash) continue;
    TheoremOutcome o = outcome_from_record(j);
    if (!by_name.count(o.task_name)) log_order.push_back(o.task_name);
    by_name[o.task_name] = std::move(o);
  }
  for (const auto& name : order.empty() ? log_order : order) {
    if (auto it = by_name.find(name); it != by_name.end()) report.outcomes.push_back(it->second);
  }
  const auto attempts = read_jsonl(dir / log_file::attempts);
  const auto guidance = read_jsonl(dir / log_file::guidance);
  for (const auto& o : report.outcomes) {
    try {
      const BudgetLedger replayed = replay_ledger(o.task_name, report.budget, attempts, guidance);
      if (replayed.consumed() != o.ledger.consumed() || replayed.per_stage() != o.ledger.per_stage()) {
        report.log_consistent = false;
      }
    } catch (const Error&) {
      report.log_consistent = false;
    }
  }
  report.curve = pass_curve(report.outcomes, report.budget);
  report.timings = timing_summary(report.outcomes, attempts);
  return report;
}

inline void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::ofstream(dir / log_file::report_json, std::ios::trunc | std::ios::binary) << report.to_json().dump(2) << "\n";
  std::ofstream(dir / log_file::report_txt, std::ios::trunc | std::ios::binary) << report.to_table();
}

// ---------------------------------------------------------------------------
// runner

struct BenchmarkOptions {
  std::filesystem::path out_dir = "runs/latest";
  bool resume = false;
  std::vector<int> ks{32, 128};
};

struct BenchmarkResult {
  RunReport report;
  std::size_t resumed = 0;   // theorems taken from an earlier run
  std::size_t executed = 0;  // theorems run now
};

inline std::unique_ptr<LeanChecker> make_checker(const RunConfig& config) {
  if (config.verifier.mode == "lexical") {
    return std::make_unique<LexicalChecker>(config.verifier.simulated_seconds);
  }
  ReplConfig repl;
  repl.command = config.verifier.command;
  repl.working_dir = config.resolve(config.verifier.working_dir).string();
  repl.preamble = config.preamble;
  repl.preamble_timeout_s = config.verifier.preamble_timeout_s;
  repl.grace_s = config.verifier.grace_s;
  return std::make_unique<ReplSession>(std::move(repl));
}

/// Names of theorems already finished under `config_hash`; everything
/// else is removed from the logs so it can be rerun cleanly.
inline std::set<std::string> prepare_resume(const std::filesystem::path& dir, const std::string& config_hash,
                                            const std::vector<DatasetEntry>& entries) {
  std::set<std::string> wanted;
  for (const auto& e : entries) wanted.insert(e.name);
  std::set<std::string> done;
  std::vector<std::string> kept;
  {
    std::ifstream in(dir / log_file::outcomes);
    std::string line;
    while (std::getline(in, line)) {
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) continue;
      const std::string name = j.value("theorem", "");
      if (j.value("config_hash", "") != config_hash || !wanted.count(name) || done.count(name)) continue;
      done.insert(name);
      kept.push_back(line);
    }
  }
  {
    std::ofstream out(dir / log_file::outcomes, std::ios::trunc | std::ios::binary);
    for (const auto& line : kept) out << line << '\n';
  }
  compact_log(dir / log_file::attempts, done);
  compact_log(dir / log_file::guidance, done);
  return done;
}

inline BenchmarkResult run_benchmark(const RunConfig& config, const std::vector<DatasetEntry>& entries,
                                     const BenchmarkOptions& options) {
  config.validate();
  const std::string hash = config.hash();
  const auto& dir = options.out_dir;
  std::filesystem::create_directories(dir);
  const bool previous = std::filesystem::exists(dir / log_file::outcomes) &&
                        std::filesystem::file_size(dir / log_file::outcomes) > 0;
  if (previous && !options.resume) {
    throw Error(ErrorCode::config_error, dir.string() + " already holds a run; pass --resume or another --out");
  }
  std::set<std::string> done;
  if (options.resume) done = prepare_resume(dir, hash, entries);
  {
    nlohmann::ordered_json rc{{"config_hash", hash}, {"workers", config.workers}, {"config", config.snapshot()}};
    std::ofstream(dir / log_file::run_config, std::ios::trunc | std::ios::binary) << rc.dump(2) << "\n";
  }

  const TemplateSet templates = TemplateSet::with_overrides(config.resolve(config.prompts_dir));
  TransportRegistry registry(config.base_dir);
  std::map<Role, std::unique_ptr<ModelClient>> clients;
  for (const auto& [role, endpoint] : config.endpoints) clients[role] = make_model_client(endpoint, registry);
  auto client = [&](Role r) { return clients.count(r) ? clients[r].get() : nullptr; };
  const ModelClients roles{client(Role::reasoner), client(Role::worker), client(Role::prover)};

  const int sessions = config.verifier.sessions > 0 ? config.verifier.sessions : config.workers;
  std::vector<std::unique_ptr<LeanChecker>> checkers;
  for (int i = 0; i < sessions; ++i) checkers.push_back(make_checker(config));
  SessionPool pool(std::move(checkers));

  RunLog log(dir);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> executed{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      if (done.count(entries[i].name)) {
        log.skip(i);
        continue;
      }
      const TheoremTask task = to_task(entries[i], config.preamble);
      TheoremLogBuffer buffer;
      TheoremOutcome outcome;
      {
        auto lease = pool.lease();
        outcome = run_pipeline(task, config.pipeline, roles, *lease, templates, &buffer);
      }
      log.commit(i, buffer, outcome, hash);
      ++executed;
    }
  };
  {
    std::vector<std::jthread> threads;
    for (int w = 0; w < config.workers; ++w) threads.emplace_back(worker);
  }

  std::vector<std::string> order;
  for (const auto& e : entries) order.push_back(e.name);
  BenchmarkResult result;
  result.report = report_from_logs(dir, options.ks, order);
  result.resumed = done.size();
  result.executed = executed.load();
  write_report(result.report, dir);
  return result;
}

}  // namespace lemmaguide
