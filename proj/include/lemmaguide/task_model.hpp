#pragma once

// Domain types shared by every stage of a theorem run.

#include <lemmaguide/errors.hpp>
#include <lemmaguide/lean_lexer.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lemmaguide {

struct TheoremTask {
  std::string name;
  std::string formal_statement;  // header up to, not including, `:=`
  std::string informal_statement;
  std::string preamble;
};

/// Empty string when the statement is acceptable, otherwise the reason it is not.
inline std::string validate_formal_statement(std::string_view statement) {
  const std::string masked = lean::mask_non_code(statement);
  if (lean::trim(statement).empty()) return "formal statement is empty";
  if (!lean::find_token(masked, "theorem") && !lean::find_token(masked, "example") &&
      !lean::find_token(masked, "lemma")) {
    return "formal statement has no `theorem` or `example` keyword";
  }
  if (lean::find_token(masked, "sorry")) return "formal statement contains `sorry`";
  if (!lean::delimiters_balanced(statement)) return "formal statement has unbalanced delimiters";
  return {};
}

inline void validate(const TheoremTask& task) {
  if (auto why = validate_formal_statement(task.formal_statement); !why.empty()) {
    throw Error(ErrorCode::dataset_error, task.name + ": " + why);
  }
}

struct NlGuidance {
  std::string full_proof;
  std::string summary;
  bool degraded = false;  // guidance model failed; run continues without it
};

enum class SyntaxValidity { unchecked, valid, invalid };

struct Lemma {
  std::string binder_name;
  std::string statement_text;
  std::optional<std::string> proof_text;
  std::set<int> source_attempts;
  std::string normalized_statement;
  SyntaxValidity syntax_valid = SyntaxValidity::unchecked;
  /// Every distinct proof seen for this statement, first-seen order.
  std::vector<std::string> candidate_proofs;
  /// `have ⟨a, b⟩ : ...` destructuring; cannot become a named hypothesis as is.
  bool pattern_binder = false;
};

inline Lemma make_lemma(std::string binder, std::string statement,
                        std::optional<std::string> proof = std::nullopt) {
  Lemma lemma;
  lemma.binder_name = std::move(binder);
  lemma.normalized_statement = lean::normalize_whitespace(statement);
  lemma.statement_text = std::move(statement);
  if (proof) lemma.candidate_proofs.push_back(*proof);
  lemma.proof_text = std::move(proof);
  return lemma;
}

struct SelectedLemma {
  int index = 0;
  Lemma lemma;
  std::string informal_proof;
};

struct LemmaSelection {
  std::vector<SelectedLemma> items;
  std::string main_informal_proof;
  bool degraded = false;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

enum class Severity { error, warning, info };

struct Position {
  int line = 0;
  int column = 0;
};

struct Message {
  Severity severity = Severity::error;
  Position pos;
  std::string text;
};

enum class VerificationStatus { proved, failed, timeout, transport_error };

inline const char* to_string(VerificationStatus s) {
  switch (s) {
    case VerificationStatus::proved: return "proved";
    case VerificationStatus::failed: return "failed";
    case VerificationStatus::timeout: return "timeout";
    case VerificationStatus::transport_error: return "transport-error";
  }
  return "failed";
}

inline std::optional<VerificationStatus> verification_status_from(std::string_view s) {
  if (s == "proved") return VerificationStatus::proved;
  if (s == "failed") return VerificationStatus::failed;
  if (s == "timeout") return VerificationStatus::timeout;
  if (s == "transport-error") return VerificationStatus::transport_error;
  return std::nullopt;
}

struct VerificationResult {
  VerificationStatus status = VerificationStatus::failed;
  std::vector<Message> messages;
  bool contains_sorry = false;
  double elapsed = 0.0;

  bool proved() const { return status == VerificationStatus::proved; }
  bool has_errors() const {
    for (const auto& m : messages) {
      if (m.severity == Severity::error) return true;
    }
    return false;
  }
};

enum class StageKind { initial, main_sketch, lemma, fallback };

struct Stage {
  StageKind kind = StageKind::initial;
  int lemma_index = -1;  // only for StageKind::lemma

  static Stage initial() { return {StageKind::initial, -1}; }
  static Stage main_sketch() { return {StageKind::main_sketch, -1}; }
  static Stage lemma(int i) { return {StageKind::lemma, i}; }
  static Stage fallback() { return {StageKind::fallback, -1}; }

  friend bool operator==(const Stage&, const Stage&) = default;
};

inline const char* to_string(StageKind kind) {
  switch (kind) {
    case StageKind::initial: return "initial";
    case StageKind::main_sketch: return "main_sketch";
    case StageKind::lemma: return "lemma";
    case StageKind::fallback: return "fallback";
  }
  return "initial";
}

/// Log form: `initial`, `main_sketch`, `fallback`, or `lemma:<i>`.
inline std::string to_string(const Stage& stage) {
  if (stage.kind == StageKind::lemma) return "lemma:" + std::to_string(stage.lemma_index);
  return to_string(stage.kind);
}

inline std::optional<Stage> stage_from(std::string_view s) {
  if (s == "initial") return Stage::initial();
  if (s == "main_sketch") return Stage::main_sketch();
  if (s == "fallback") return Stage::fallback();
  if (s.rfind("lemma:", 0) == 0 && s.size() > 6) {
    int index = 0;
    for (char c : s.substr(6)) {
      if (c < '0' || c > '9') return std::nullopt;
      index = index * 10 + (c - '0');
    }
    return Stage::lemma(index);
  }
  return std::nullopt;
}

struct AttemptTimings {
  double generation_seconds = 0.0;
  double verification_seconds = 0.0;
};

struct ProofAttempt {
  int attempt_index = 0;
  Stage stage;
  std::string prompt_text;
  std::string completion_text;
  std::string proof_body;
  std::string verification_source;  // the complete Lean unit that was checked
  VerificationResult verification;
  AttemptTimings timings;
};

/// Prover-call accounting for one theorem run. Guidance calls are tracked
/// but never count against `total`.
class BudgetLedger {
 public:
  explicit BudgetLedger(int total = 128) : total_(total) {}

  int total() const { return total_; }
  int consumed() const { return consumed_; }
  int remaining() const { return total_ - consumed_; }
  bool exhausted() const { return consumed_ >= total_; }
  const std::map<std::string, int>& per_stage() const { return per_stage_; }
  int stage_count(StageKind kind) const {
    auto it = per_stage_.find(to_string(kind));
    return it == per_stage_.end() ? 0 : it->second;
  }
  int guidance_calls() const { return guidance_calls_; }
  const std::map<std::string, double>& guidance_timings() const { return guidance_timings_; }

  /// Consumes one unit for `stage`. Returns the 1-based attempt index.
  int record_attempt(const Stage& stage) {
    if (consumed_ >= total_) {
      throw Error(ErrorCode::budget_exhausted,
                  "ledger full (" + std::to_string(consumed_) + "/" + std::to_string(total_) + ")");
    }
    ++consumed_;
    ++per_stage_[to_string(stage.kind)];
    return consumed_;
  }

  void record_guidance(const std::string& task, double seconds) {
    ++guidance_calls_;
    guidance_timings_[task] += seconds;
  }

  friend bool operator==(const BudgetLedger&, const BudgetLedger&) = default;

 private:
  int total_ = 128;
  int consumed_ = 0;
  std::map<std::string, int> per_stage_;
  int guidance_calls_ = 0;
  std::map<std::string, double> guidance_timings_;
};

enum class Provenance { salvaged, loop_proved };

inline const char* to_string(Provenance p) {
  return p == Provenance::salvaged ? "salvaged" : "loop_proved";
}

struct ProvenEntry {
  std::string proof_text;
  Provenance provenance = Provenance::salvaged;
};

/// Lemma index -> verified proof. Entries are never replaced once set.
class ProvenSet {
 public:
  bool contains(int index) const { return entries_.count(index) != 0; }
  std::size_t size() const { return entries_.size(); }
  const std::map<int, ProvenEntry>& entries() const { return entries_; }
  const ProvenEntry& at(int index) const { return entries_.at(index); }

  /// Returns false (and changes nothing) when `index` is already proven.
  bool add(int index, std::string proof_text, Provenance provenance) {
    return entries_.emplace(index, ProvenEntry{std::move(proof_text), provenance}).second;
  }

  bool covers(std::size_t m) const {
    for (std::size_t i = 0; i < m; ++i) {
      if (!contains(static_cast<int>(i))) return false;
    }
    return true;
  }

 private:
  std::map<int, ProvenEntry> entries_;
};

enum class PipelinePhase {
  InitialAttempts,
  LemmaSelection,
  Salvage,
  MainSketch,
  LemmaLoop,
  Assembly,
  Fallback,
  Solved,
  Exhausted,
};

inline const char* to_string(PipelinePhase p) {
  switch (p) {
    case PipelinePhase::InitialAttempts: return "InitialAttempts";
    case PipelinePhase::LemmaSelection: return "LemmaSelection";
    case PipelinePhase::Salvage: return "Salvage";
    case PipelinePhase::MainSketch: return "MainSketch";
    case PipelinePhase::LemmaLoop: return "LemmaLoop";
    case PipelinePhase::Assembly: return "Assembly";
    case PipelinePhase::Fallback: return "Fallback";
    case PipelinePhase::Solved: return "Solved";
    case PipelinePhase::Exhausted: return "Exhausted";
  }
  return "?";
}

inline std::optional<PipelinePhase> phase_from(std::string_view s) {
  for (auto p : {PipelinePhase::InitialAttempts, PipelinePhase::LemmaSelection,
                 PipelinePhase::Salvage, PipelinePhase::MainSketch, PipelinePhase::LemmaLoop,
                 PipelinePhase::Assembly, PipelinePhase::Fallback, PipelinePhase::Solved,
                 PipelinePhase::Exhausted}) {
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

inline bool legal_transition(PipelinePhase from, PipelinePhase to) {
  using P = PipelinePhase;
  switch (from) {
    case P::InitialAttempts: return to == P::Solved || to == P::LemmaSelection || to == P::Exhausted;
    case P::LemmaSelection: return to == P::Salvage || to == P::Fallback;
    case P::Salvage: return to == P::MainSketch;
    case P::MainSketch: return to == P::LemmaLoop || to == P::Fallback || to == P::Exhausted;
    case P::LemmaLoop: return to == P::Assembly || to == P::Exhausted;
    case P::Assembly: return to == P::Solved || to == P::LemmaLoop;
    case P::Fallback: return to == P::Solved || to == P::Exhausted;
    case P::Solved:
    case P::Exhausted: return false;
  }
  return false;
}

/// A trace is legal when it starts at InitialAttempts and every step is a declared edge.
inline bool legal_trace(const std::vector<PipelinePhase>& trace) {
  if (trace.empty() || trace.front() != PipelinePhase::InitialAttempts) return false;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (!legal_transition(trace[i - 1], trace[i])) return false;
  }
  return true;
}

enum class OutcomeStatus { solved, exhausted, infrastructure_failure };

inline const char* to_string(OutcomeStatus s) {
  switch (s) {
    case OutcomeStatus::solved: return "solved";
    case OutcomeStatus::exhausted: return "exhausted";
    case OutcomeStatus::infrastructure_failure: return "infrastructure-failure";
  }
  return "exhausted";
}

inline std::optional<OutcomeStatus> outcome_status_from(std::string_view s) {
  if (s == "solved") return OutcomeStatus::solved;
  if (s == "exhausted") return OutcomeStatus::exhausted;
  if (s == "infrastructure-failure") return OutcomeStatus::infrastructure_failure;
  return std::nullopt;
}

struct TheoremOutcome {
  std::string task_name;
  bool solved = false;
  OutcomeStatus status = OutcomeStatus::exhausted;
  std::optional<int> solving_attempt_index;
  std::optional<std::string> final_proof;
  std::optional<VerificationStatus> final_status;
  std::vector<PipelinePhase> phase_trace;
  BudgetLedger ledger;
  std::vector<std::string> diagnostics;
  /// Seconds spent per pipeline component (guidance tasks, Lean checks, prover calls).
  std::map<std::string, double> component_seconds;
};

}  // namespace lemmaguide
