#pragma once

// The per-theorem pipeline: guided initial attempts, lemma extraction and
// selection, salvage, main sketch, lemma loop and assembly, with fallback
// to direct attempts and a hard prover-call budget.

#include <lemmaguide/errors.hpp>
#include <lemmaguide/guidance.hpp>
#include <lemmaguide/lean_syntax.hpp>
#include <lemmaguide/model_clients.hpp>
#include <lemmaguide/prompts.hpp>
#include <lemmaguide/task_model.hpp>
#include <lemmaguide/verifier.hpp>

#include <algorithm>
#include <map>
#include <type_traits>
#include <optional>
#include <string>
#include <vector>

namespace lemmaguide {

struct PipelineConfig {
  int budget = 128;
  int initial_attempts = 16;
  int max_lemmas = 5;
  int max_main_attempts = 8;
  double verify_timeout_s = 20.0;
  int pool_cap = 64;
  bool informal_guidance = true;
  bool lemma_guidance = true;

  void validate() const {
    auto fail = [](const std::string& why) { throw Error(ErrorCode::config_error, why); };
    if (budget < 1) fail("budget must be >= 1");
    if (initial_attempts < 0) fail("initial_attempts must be >= 0");
    if (initial_attempts > budget) fail("initial_attempts exceeds budget");
    if (max_lemmas < 1) fail("max_lemmas must be >= 1");
    if (max_main_attempts < 1) fail("max_main_attempts must be >= 1");
    if (!(verify_timeout_s > 0.0)) fail("verify_timeout_s must be positive");
    if (pool_cap < 1) fail("pool_cap must be >= 1");
  }
};

/// Receives every prover attempt and guidance call as it happens.
class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_attempt(const TheoremTask&, const ProofAttempt&) {}
  virtual void on_guidance(const TheoremTask&, const std::string& /*task*/, double /*seconds*/,
                           const std::string& /*response*/) {}
};

struct ModelClients {
  ModelClient* reasoner = nullptr;
  ModelClient* worker = nullptr;
  ModelClient* prover = nullptr;
};

namespace component {
inline constexpr const char* syntax_check = "syntax_check";
inline constexpr const char* salvage = "salvage";
inline constexpr const char* assembly = "assembly";
inline constexpr const char* prover_generation = "prover_generation";
inline constexpr const char* prover_verification = "prover_verification";
}  // namespace component

struct LoopResult {
  enum class Kind { solved, exhausted, assembly_anomaly };
  Kind kind = Kind::exhausted;
  bool assembled = false;
  std::string final_source;
  VerificationResult final_verification;
};

class TheoremPipeline {
 public:
  TheoremPipeline(TheoremTask task, PipelineConfig config, ModelClients clients, LeanChecker& checker,
                  const TemplateSet& templates, RunObserver* observer = nullptr)
      : task_(std::move(task)),
        config_(config),
        clients_(clients),
        checker_(checker),
        templates_(templates),
        observer_(observer),
        ledger_(config.budget) {
    config_.validate();
    const bool needs_worker = config_.informal_guidance || config_.lemma_guidance;
    if (!clients_.prover || (needs_worker && !clients_.worker) ||
        (config_.informal_guidance && !clients_.reasoner)) {
      throw Error(ErrorCode::config_error, "pipeline is missing a model client");
    }
  }

  const TheoremTask& task() const { return task_; }
  const BudgetLedger& ledger() const { return ledger_; }
  const std::vector<ProofAttempt>& attempts() const { return attempts_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }
  const std::map<std::string, double>& component_seconds() const { return seconds_; }
  /// The attempt that proved the theorem directly, if any.
  const std::optional<ProofAttempt>& solving_attempt() const { return solving_attempt_; }

  // -------------------------------------------------------------------------
  // stage operations

  /// Natural-language proof and summary. Guidance failures degrade to an
  /// empty summary instead of aborting.
  NlGuidance prepare_guidance() {
    NlGuidance g;
    if (!config_.informal_guidance) return g;
    const GuidanceContext ctx = guidance_context();
    try {
      g.full_proof = generate_nl_proof(ctx);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::guidance_unavailable) throw;
      note(std::string("degraded: ") + e.what());
      g.degraded = true;
      return g;
    }
    try {
      g.summary = summarize_nl_proof(ctx, g.full_proof).text;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::guidance_unavailable) throw;
      note(std::string("degraded: ") + e.what());
      g.degraded = true;
    }
    return g;
  }

  /// Up to `n` summary-guided attempts, stopping at the first proof.
  bool run_initial_attempts(const NlGuidance& guidance, int n) {
    return direct_attempts(Stage::initial(), guidance, n);
  }

  /// Direct attempts for whatever budget is left.
  bool fallback_direct(const NlGuidance& guidance) {
    return direct_attempts(Stage::fallback(), guidance, ledger_.remaining());
  }

  /// Syntactically valid, deduplicated `have` statements from every failed
  /// attempt, capped at pool_cap by number of source attempts.
  std::vector<Lemma> build_lemma_pool() {
    std::vector<Lemma> extracted;
    for (const auto& attempt : attempts_) {
      if (attempt.verification.proved()) continue;
      for (auto& lemma : lean::extract_have_statements(attempt.proof_body, attempt.attempt_index)) {
        extracted.push_back(std::move(lemma));
      }
    }
    std::vector<Lemma> pool = lean::dedupe_pool(extracted);
    std::vector<Lemma> valid;
    for (auto& lemma : pool) {
      const SyntaxValidity v = timed(component::syntax_check, [&](LeanChecker& c) {
        return check_lemma_syntax(c, task_, lemma, config_.verify_timeout_s);
      });
      if (v == SyntaxValidity::valid) valid.push_back(std::move(lemma));
    }
    if (valid.size() > static_cast<std::size_t>(config_.pool_cap)) {
      std::vector<std::size_t> order(valid.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return valid[a].source_attempts.size() > valid[b].source_attempts.size();
      });
      order.resize(static_cast<std::size_t>(config_.pool_cap));
      std::sort(order.begin(), order.end());
      std::vector<Lemma> capped;
      for (std::size_t i : order) capped.push_back(std::move(valid[i]));
      note("pool capped from " + std::to_string(valid.size()) + " to " + std::to_string(capped.size()));
      valid = std::move(capped);
    }
    return valid;
  }

  /// Selection plus informal lemma proofs. Empty when the worker cannot
  /// produce a usable selection.
  LemmaSelection select(const NlGuidance& guidance, const std::vector<Lemma>& pool) {
    const GuidanceContext ctx = guidance_context();
    LemmaSelection selection;
    try {
      selection = select_lemmas(ctx, guidance.full_proof, pool, static_cast<std::size_t>(config_.max_lemmas));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::guidance_unavailable) throw;
      note(std::string("selection unavailable: ") + e.what());
      return {};
    }
    if (selection.empty() || !config_.informal_guidance) return selection;
    try {
      selection = generate_informal_lemma_proofs(ctx, guidance.full_proof, selection);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::guidance_unavailable) throw;
      note(std::string("degraded: ") + e.what());
      for (auto& item : selection.items) item.informal_proof = sanitize_for_comment(guidance.full_proof);
      selection.main_informal_proof = sanitize_for_comment(guidance.full_proof);
      selection.degraded = true;
    }
    return selection;
  }

  /// Lemmas whose harvested proofs verify from the global hypotheses alone.
  ProvenSet salvage(const LemmaSelection& selection) {
    ProvenSet proven;
    for (const auto& item : selection.items) {
      for (const auto& candidate : item.lemma.candidate_proofs) {
        const VerificationResult v = timed(component::salvage, [&](LeanChecker& c) {
          return check_salvaged_proof(c, task_, item.lemma, candidate, config_.verify_timeout_s);
        });
        if (v.proved()) {
          proven.add(item.index, candidate, Provenance::salvaged);
          break;
        }
      }
    }
    return proven;
  }

  /// Proof of the theorem with every selected lemma as a hypothesis.
  std::optional<std::string> attempt_main_sketch(const LemmaSelection& selection) {
    const std::string header = lean::build_main_theorem(task_, selection);
    const auto summary = embedded(selection.main_informal_proof);
    for (int i = 0; i < config_.max_main_attempts && !ledger_.exhausted(); ++i) {
      const ProofAttempt& a = attempt(Stage::main_sketch(), lean::embed_summary(header, "", summary), header);
      if (a.verification.proved()) return a.proof_body;
    }
    return std::nullopt;
  }

  /// Round-robin passes over unproven lemmas, assembling once all are proven.
  LoopResult lemma_proving_loop(const LemmaSelection& selection, ProvenSet& proven,
                                const std::string& main_body) {
    LoopResult result;
    while (true) {
      for (std::size_t i = 0; i < selection.size() && !proven.covers(selection.size()); ++i) {
        if (proven.contains(static_cast<int>(i))) continue;
        if (ledger_.exhausted()) return result;
        const std::string header = lean::build_lemma_theorem(task_, selection, i);
        const auto summary = embedded(selection.items[i].informal_proof);
        const ProofAttempt& a =
            attempt(Stage::lemma(static_cast<int>(i)), lean::embed_summary(header, "", summary), header);
        if (a.verification.proved()) proven.add(static_cast<int>(i), a.proof_body, Provenance::loop_proved);
      }
      if (proven.covers(selection.size())) {
        result.assembled = true;
        result.final_source = lean::splice_final_proof(task_, selection, proven, main_body);
        result.final_verification = timed(component::assembly, [&](LeanChecker& c) {
          return check_proof(c, result.final_source, config_.verify_timeout_s);
        });
        if (result.final_verification.proved()) {
          result.kind = LoopResult::Kind::solved;
        } else {
          result.kind = LoopResult::Kind::assembly_anomaly;
          note("assembly anomaly: individually verified parts failed together (" +
               std::string(to_string(result.final_verification.status)) + ")");
        }
        return result;
      }
      if (ledger_.exhausted()) return result;
    }
  }

  // -------------------------------------------------------------------------

  TheoremOutcome run() {
    TheoremOutcome out;
    out.task_name = task_.name;
    trace_.clear();
    try {
      run_phases(out);
    } catch (const std::exception& e) {
      const auto* error = dynamic_cast<const Error*>(&e);
      const bool infrastructure = error && (error->code() == ErrorCode::endpoint_unavailable ||
                                            error->code() == ErrorCode::response_malformed ||
                                            error->code() == ErrorCode::transport_error);
      note(std::string(infrastructure ? "infrastructure failure: " : "internal error: ") + e.what());
      out.status = OutcomeStatus::infrastructure_failure;
      out.solved = false;
      out.final_proof.reset();
      out.final_status.reset();
      out.solving_attempt_index.reset();
    }
    out.phase_trace = trace_;
    out.ledger = ledger_;
    out.diagnostics = diagnostics_;
    out.component_seconds = seconds_;
    return out;
  }

 private:
  void run_phases(TheoremOutcome& out) {
    enter(PipelinePhase::InitialAttempts);
    const NlGuidance guidance = prepare_guidance();
    const int n = config_.lemma_guidance ? config_.initial_attempts : config_.budget;
    if (run_initial_attempts(guidance, n)) return solved_directly(out);
    if (!config_.lemma_guidance || ledger_.exhausted()) return finish(out, PipelinePhase::Exhausted);

    enter(PipelinePhase::LemmaSelection);
    LemmaSelection selection;
    try {
      const std::vector<Lemma> pool = build_lemma_pool();
      if (pool.empty()) {
        note("empty lemma pool");
      } else {
        selection = select(guidance, pool);
        if (selection.empty()) note("empty selection");
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_top_level_colon) throw;
      note(std::string("lemma processing skipped: ") + e.what());
      selection = {};
    }
    if (selection.empty()) return fallback(out, guidance);

    enter(PipelinePhase::Salvage);
    ProvenSet proven = salvage(selection);

    enter(PipelinePhase::MainSketch);
    const std::optional<std::string> main_body = attempt_main_sketch(selection);
    if (!main_body) {
      if (ledger_.exhausted()) return finish(out, PipelinePhase::Exhausted);
      note("main sketch failed, falling back");
      return fallback(out, guidance);
    }

    enter(PipelinePhase::LemmaLoop);
    LoopResult loop = lemma_proving_loop(selection, proven, *main_body);
    if (loop.assembled) {
      enter(PipelinePhase::Assembly);
      if (loop.kind == LoopResult::Kind::solved) {
        out.solved = true;
        out.status = OutcomeStatus::solved;
        out.solving_attempt_index = ledger_.consumed();
        out.final_proof = loop.final_source;
        out.final_status = loop.final_verification.status;
        return finish(out, PipelinePhase::Solved);
      }
      enter(PipelinePhase::LemmaLoop);
    }
    finish(out, PipelinePhase::Exhausted);
  }

  void fallback(TheoremOutcome& out, const NlGuidance& guidance) {
    enter(PipelinePhase::Fallback);
    if (fallback_direct(guidance)) return solved_directly(out);
    finish(out, PipelinePhase::Exhausted);
  }

  void solved_directly(TheoremOutcome& out) {
    const ProofAttempt& a = *solving_attempt_;
    out.solved = true;
    out.status = OutcomeStatus::solved;
    out.solving_attempt_index = a.attempt_index;
    out.final_proof = a.verification_source;
    out.final_status = a.verification.status;
    finish(out, PipelinePhase::Solved);
  }

  void finish(TheoremOutcome& out, PipelinePhase terminal) {
    enter(terminal);
    if (terminal == PipelinePhase::Exhausted) out.status = OutcomeStatus::exhausted;
  }

  void enter(PipelinePhase phase) {
    if (!trace_.empty() && !legal_transition(trace_.back(), phase)) {
      throw Error(ErrorCode::precondition, std::string("illegal phase transition ") +
                                               to_string(trace_.back()) + " -> " + to_string(phase));
    }
    trace_.push_back(phase);
  }

  void note(std::string message) { diagnostics_.push_back(std::move(message)); }

  GuidanceContext guidance_context() {
    GuidanceContext ctx{task_, clients_.reasoner ? *clients_.reasoner : *clients_.worker, *clients_.worker,
                        templates_, {}, &diagnostics_};
    ctx.on_call = [this](const std::string& task, double seconds, const std::string& response) {
      ledger_.record_guidance(task, seconds);
      seconds_[task] += seconds;
      if (observer_) observer_->on_guidance(task_, task, seconds, response);
    };
    return ctx;
  }

  /// What gets embedded as the informal block comment: nothing when
  /// informal guidance is off or produced no text.
  std::optional<std::string_view> embedded(const std::string& text) const {
    if (!config_.informal_guidance || lean::trim(text).empty()) return std::nullopt;
    return std::string_view(text);
  }

  bool direct_attempts(const Stage& stage, const NlGuidance& guidance, int limit) {
    const auto summary = embedded(guidance.summary);
    const std::string code = lean::embed_summary(task_.formal_statement, task_.preamble, summary);
    const std::string header = lean::with_preamble(task_.preamble, task_.formal_statement);
    for (int i = 0; i < limit && !ledger_.exhausted(); ++i) {
      const ProofAttempt& a = attempt(stage, code, header);
      if (a.verification.proved()) {
        solving_attempt_ = a;
        return true;
      }
    }
    return false;
  }

  /// One budgeted prover call: generate from `code`, verify the extracted
  /// body under `header`.
  const ProofAttempt& attempt(const Stage& stage, const std::string& code, const std::string& header) {
    if (ledger_.exhausted()) throw Error(ErrorCode::budget_exhausted, "no budget left for " + to_string(stage));
    ProofAttempt a;
    a.stage = stage;
    a.prompt_text = templates_.render(PromptId::prover_cot, {{"lean_code", code}});
    const Completion completion = clients_.prover->complete(
        CompletionRequest{{{"user", a.prompt_text}}, task_.name, to_string(stage)});
    a.attempt_index = ledger_.record_attempt(stage);
    a.completion_text = completion.text;
    a.proof_body = lean::extract_proof_body(completion.text);
    a.verification_source = lean::attach_proof(header, a.proof_body);
    a.verification = check_proof(checker_, a.verification_source, config_.verify_timeout_s);
    a.timings = AttemptTimings{completion.seconds, a.verification.elapsed};
    seconds_[component::prover_generation] += completion.seconds;
    seconds_[component::prover_verification] += a.verification.elapsed;
    attempts_.push_back(std::move(a));
    if (observer_) observer_->on_attempt(task_, attempts_.back());
    return attempts_.back();
  }

  /// Runs a Lean check and charges its elapsed time to `name`.
  template <typename F>
  std::invoke_result_t<F, LeanChecker&> timed(const char* name, F&& f) {
    struct Meter : LeanChecker {
      LeanChecker& inner;
      double total = 0.0;
      explicit Meter(LeanChecker& c) : inner(c) {}
      ReplResponse elaborate(std::string_view source, double timeout_s) override {
        ReplResponse r = inner.elaborate(source, timeout_s);
        total += r.kind == ReplResponse::Kind::timeout ? std::max(r.elapsed, timeout_s) : r.elapsed;
        return r;
      }
    } meter(checker_);
    auto result = f(static_cast<LeanChecker&>(meter));
    seconds_[name] += meter.total;
    return result;
  }

  TheoremTask task_;
  PipelineConfig config_;
  ModelClients clients_;
  LeanChecker& checker_;
  const TemplateSet& templates_;
  RunObserver* observer_;
  BudgetLedger ledger_;
  std::vector<ProofAttempt> attempts_;
  std::optional<ProofAttempt> solving_attempt_;
  std::vector<PipelinePhase> trace_;
  std::vector<std::string> diagnostics_;
  std::map<std::string, double> seconds_;
};

/// Runs the whole pipeline for one theorem.
inline TheoremOutcome run_pipeline(const TheoremTask& task, const PipelineConfig& config, ModelClients clients,
                                   LeanChecker& checker, const TemplateSet& templates,
                                   RunObserver* observer = nullptr) {
  return TheoremPipeline(task, config, clients, checker, templates, observer).run();
}

}  // namespace lemmaguide
