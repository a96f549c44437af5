#pragma once

// JSONL run records: per-attempt and per-guidance-call logs, content-addressed
// sidecars for prompt and response text, and one outcome line per theorem.

#include <lemmaguide/errors.hpp>
#include <lemmaguide/hash.hpp>
#include <lemmaguide/orchestrator.hpp>
#include <lemmaguide/task_model.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

namespace lemmaguide {

using ojson = nlohmann::ordered_json;

namespace log_file {
inline constexpr const char* attempts = "attempts.jsonl";
inline constexpr const char* guidance = "guidance.jsonl";
inline constexpr const char* guidance_raw = "guidance_raw.jsonl";
inline constexpr const char* prompts = "prompts.jsonl";
inline constexpr const char* outcomes = "outcomes.jsonl";
}  // namespace log_file

inline ojson attempt_record(const std::string& theorem, const ProofAttempt& a) {
  return ojson{{"theorem", theorem},
               {"attempt_index", a.attempt_index},
               {"stage", to_string(a.stage)},
               {"prompt_sha256", sha256_hex(a.prompt_text)},
               {"completion", a.completion_text},
               {"status", to_string(a.verification.status)},
               {"contains_sorry", a.verification.contains_sorry},
               {"gen_seconds", a.timings.generation_seconds},
               {"verify_seconds", a.timings.verification_seconds}};
}

inline ojson guidance_record(const std::string& theorem, const std::string& task, double seconds,
                             const std::string& response) {
  return ojson{{"theorem", theorem}, {"task", task}, {"seconds", seconds}, {"response_sha256", sha256_hex(response)}};
}

inline ojson ledger_json(const BudgetLedger& ledger) {
  return ojson{{"total", ledger.total()},
               {"consumed", ledger.consumed()},
               {"per_stage", ledger.per_stage()},
               {"guidance_calls", ledger.guidance_calls()},
               {"guidance_timings", ledger.guidance_timings()}};
}

inline ojson outcome_record(const TheoremOutcome& o, const std::string& config_hash) {
  ojson trace = ojson::array();
  for (auto p : o.phase_trace) trace.push_back(to_string(p));
  ojson j{{"theorem", o.task_name},
          {"config_hash", config_hash},
          {"status", to_string(o.status)},
          {"solved", o.solved},
          {"solving_attempt_index", nullptr},
          {"final_status", nullptr},
          {"final_proof", nullptr},
          {"phase_trace", trace},
          {"ledger", ledger_json(o.ledger)},
          {"component_seconds", o.component_seconds},
          {"diagnostics", o.diagnostics}};
  if (o.solving_attempt_index) j["solving_attempt_index"] = *o.solving_attempt_index;
  if (o.final_status) j["final_status"] = to_string(*o.final_status);
  if (o.final_proof) j["final_proof"] = *o.final_proof;
  return j;
}

/// Replays per-stage counts and guidance timings from log records.
inline BudgetLedger replay_ledger(const std::string& theorem, int total, const std::vector<nlohmann::json>& attempts,
                                  const std::vector<nlohmann::json>& guidance) {
  BudgetLedger ledger(total);
  std::vector<std::pair<int, Stage>> seen;
  for (const auto& a : attempts) {
    if (a.value("theorem", "") != theorem) continue;
    auto stage = stage_from(a.at("stage").get<std::string>());
    if (!stage) throw Error(ErrorCode::dataset_error, "unknown stage in attempt log");
    seen.emplace_back(a.at("attempt_index").get<int>(), *stage);
  }
  std::sort(seen.begin(), seen.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [index, stage] : seen) {
    if (ledger.record_attempt(stage) != index) {
      throw Error(ErrorCode::dataset_error, theorem + ": attempt indices are not gapless");
    }
  }
  for (const auto& g : guidance) {
    if (g.value("theorem", "") != theorem) continue;
    ledger.record_guidance(g.at("task").get<std::string>(), g.at("seconds").get<double>());
  }
  return ledger;
}

inline TheoremOutcome outcome_from_record(const nlohmann::json& j) {
  TheoremOutcome o;
  o.task_name = j.at("theorem").get<std::string>();
  o.status = outcome_status_from(j.at("status").get<std::string>()).value_or(OutcomeStatus::exhausted);
  o.solved = j.at("solved").get<bool>();
  if (j.at("solving_attempt_index").is_number()) o.solving_attempt_index = j["solving_attempt_index"].get<int>();
  if (j.at("final_status").is_string()) o.final_status = verification_status_from(j["final_status"].get<std::string>());
  if (j.at("final_proof").is_string()) o.final_proof = j["final_proof"].get<std::string>();
  for (const auto& p : j.at("phase_trace")) {
    if (auto phase = phase_from(p.get<std::string>())) o.phase_trace.push_back(*phase);
  }
  const auto& l = j.at("ledger");
  BudgetLedger ledger(l.at("total").get<int>());
  for (const auto& [stage, count] : l.at("per_stage").items()) {
    const Stage s = stage == "lemma" ? Stage::lemma(0) : stage_from(stage).value_or(Stage::initial());
    for (int i = 0; i < count.get<int>(); ++i) ledger.record_attempt(s);
  }
  for (const auto& [task, seconds] : l.at("guidance_timings").items()) {
    ledger.record_guidance(task, seconds.get<double>());
  }
  o.ledger = ledger;
  o.component_seconds = j.at("component_seconds").get<std::map<std::string, double>>();
  o.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  return o;
}

/// Every non-blank line of a JSONL file; a malformed line throws with its number.
inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::vector<nlohmann::json> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::dataset_error, path.string() + ":" + std::to_string(number) + ": malformed JSON");
    }
    out.push_back(std::move(j));
  }
  return out;
}

/// Collects one theorem's records while its pipeline runs.
class TheoremLogBuffer : public RunObserver {
 public:
  void on_attempt(const TheoremTask& task, const ProofAttempt& a) override {
    attempts.push_back(attempt_record(task.name, a).dump());
    texts.emplace_back(log_file::prompts, a.prompt_text);
  }
  void on_guidance(const TheoremTask& task, const std::string& name, double seconds,
                   const std::string& response) override {
    guidance.push_back(guidance_record(task.name, name, seconds, response).dump());
    texts.emplace_back(log_file::guidance_raw, response);
  }

  std::vector<std::string> attempts;
  std::vector<std::string> guidance;
  std::vector<std::pair<std::string, std::string>> texts;  // (sidecar file, text)
};

/// Append-only writer over a log directory. Theorem blocks are committed
/// in dataset order whatever order workers finish in, so logs do not
/// depend on scheduling.
class RunLog {
 public:
  explicit RunLog(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    for (const char* sidecar : {log_file::prompts, log_file::guidance_raw}) {
      for (const auto& j : read_jsonl(dir_ / sidecar)) known_[sidecar].insert(j.value("sha256", ""));
    }
  }

  const std::filesystem::path& dir() const { return dir_; }

  /// Marks dataset position `index` as already complete (resumed).
  void skip(std::size_t index) { commit_block(index, {}); }

  void commit(std::size_t index, const TheoremLogBuffer& buffer, const TheoremOutcome& outcome,
              const std::string& config_hash) {
    Block block;
    block.attempts = buffer.attempts;
    block.guidance = buffer.guidance;
    block.texts = buffer.texts;
    block.outcome = outcome_record(outcome, config_hash).dump();
    commit_block(index, std::move(block));
  }

  /// Blocks still waiting for an earlier theorem to finish.
  std::size_t pending() const {
    std::lock_guard lock(mutex_);
    return waiting_.size();
  }

 private:
  struct Block {
    std::vector<std::string> attempts;
    std::vector<std::string> guidance;
    std::vector<std::pair<std::string, std::string>> texts;
    std::optional<std::string> outcome;
  };

  void commit_block(std::size_t index, Block block) {
    std::lock_guard lock(mutex_);
    waiting_.emplace(index, std::move(block));
    while (!waiting_.empty() && waiting_.begin()->first == next_) {
      write(waiting_.begin()->second);
      waiting_.erase(waiting_.begin());
      ++next_;
    }
  }

  void write(const Block& block) {
    if (!block.outcome) return;
    for (const auto& [file, text] : block.texts) {
      const std::string sha = sha256_hex(text);
      if (known_[file].insert(sha).second) append(file, {ojson{{"sha256", sha}, {"text", text}}.dump()});
    }
    append(log_file::attempts, block.attempts);
    append(log_file::guidance, block.guidance);
    append(log_file::outcomes, {*block.outcome});
  }

  void append(const std::string& file, const std::vector<std::string>& lines) {
    if (lines.empty()) return;
    std::ofstream out(dir_ / file, std::ios::app | std::ios::binary);
    for (const auto& line : lines) out << line << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::transport_error, "cannot write " + (dir_ / file).string());
  }

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::size_t, Block> waiting_;
  std::size_t next_ = 0;
  std::map<std::string, std::set<std::string>> known_;
};

/// Keeps only lines whose `theorem` is in `keep`; used before resuming so
/// records of unfinished or stale theorems do not linger.
inline void compact_log(const std::filesystem::path& file, const std::set<std::string>& keep) {
  if (!std::filesystem::exists(file)) return;
  std::vector<std::string> kept;
  {
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (!j.is_discarded() && j.is_object() && keep.count(j.value("theorem", ""))) kept.push_back(line);
    }
  }
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    for (const auto& line : kept) out << line << '\n';
  }
  std::filesystem::rename(tmp, file);
}

}  // namespace lemmaguide
