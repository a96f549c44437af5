// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero if any criterion fails.

#include <lemmaguide/lemmaguide.hpp>

#include "support/fixtures.hpp"
#include "support/mock_run.hpp"
#include "support/naive_have_scanner.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>

namespace {

using namespace lemmaguide;
using namespace fixtures;
using P = PipelinePhase;
using Clock = std::chrono::steady_clock;

// pinned tolerances
constexpr double kOracleSeconds = 1.0;
constexpr int kRoundTripTrials = 1000;
constexpr double kRoundTripSeconds = 10.0;
constexpr std::size_t kMinScenarios = 20;
constexpr double kScenarioSeconds = 5.0;
constexpr int kBernoulliTheorems = 200;
constexpr double kBernoulliTolerance = 0.05;
constexpr double kBernoulliSeconds = 30.0;
constexpr double kLeanTimeout = 20.0;
constexpr double kLeanGrace = 2.0;
constexpr double kLeanSeconds = 300.0;

struct Verdict {
  enum Kind { pass, fail, skip } kind = pass;
  std::string detail;
};

Verdict verdict(bool ok, std::string detail) { return {ok ? Verdict::pass : Verdict::fail, std::move(detail)}; }

double since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string trace_string(const std::vector<P>& trace) {
  std::vector<std::string> names;
  for (P p : trace) names.push_back(to_string(p));
  return join(names, ">");
}

struct Recorder : RunObserver {
  std::vector<ProofAttempt> attempts;
  void on_attempt(const TheoremTask&, const ProofAttempt& a) override { attempts.push_back(a); }
  void on_guidance(const TheoremTask&, const std::string&, double, const std::string&) override {}
};

std::vector<Entry> times(int n, const Entry& e) { return std::vector<Entry>(static_cast<std::size_t>(n), e); }

std::vector<Entry> concat(std::initializer_list<std::vector<Entry>> parts) {
  std::vector<Entry> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

const std::vector<std::string> kLemmas{"x = 2", "x ^ 2 = 4", "x ^ 2 + 1 = 5"};

Entry harvest() { return entry("initial", completion(kHarvestBody)); }

PipelineConfig budget_of(int budget) {
  PipelineConfig c;
  c.budget = budget;
  return c;
}

// 1 --------------------------------------------------------------------------

Verdict oracle_equivalence() {
  std::ifstream in(std::string(LEMMAGUIDE_TEST_DATA) + "/have_corpus.lean");
  std::vector<std::string> snippets;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("=== ", 0) == 0) {
      snippets.emplace_back();
    } else if (!snippets.empty()) {
      if (!snippets.back().empty()) snippets.back() += "\n";
      snippets.back() += line;
    }
  }
  const auto start = Clock::now();
  std::size_t agree = 0;
  for (const auto& s : snippets) {
    const auto expected = oracle::scan(s);
    const auto actual = lean::extract_haves(s).lemmas;
    bool same = actual.size() == expected.size();
    for (std::size_t i = 0; same && i < actual.size(); ++i) {
      same = actual[i].binder_name == expected[i].binder &&
             lean::normalize_whitespace(actual[i].statement_text) == expected[i].statement &&
             (actual[i].proof_text ? lean::normalize_whitespace(*actual[i].proof_text) : std::string()) ==
                 expected[i].proof;
    }
    agree += same;
  }
  const double secs = since(start);
  return verdict(snippets.size() >= 50 && agree == snippets.size() && secs < kOracleSeconds,
                 std::to_string(agree) + "/" + std::to_string(snippets.size()) + " snippets agree in " +
                     fmt("%.3f", secs) + " s (limit " + fmt("%.0f", kOracleSeconds) + " s, corpus >= 50)");
}

// 2 --------------------------------------------------------------------------

std::string pick(std::mt19937& rng, const std::vector<std::string>& options) {
  return options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
}

std::string spaced(std::mt19937& rng, const std::string& op) {
  return std::string(std::uniform_int_distribution<int>(1, 3)(rng), ' ') + op +
         std::string(std::uniform_int_distribution<int>(1, 2)(rng), ' ');
}

std::string random_term(std::mt19937& rng, int depth) {
  static const std::vector<std::string> atoms{"x", "y", "n", "a₁", "(2 : ℝ)", "f x", "Real.sqrt 2", "|x - 1|",
                                              "(x + 1)", "Finset.sum (Finset.range n) (fun i => i)"};
  static const std::vector<std::string> ops{"+", "-", "*", "/", "^", "%"};
  if (depth == 0 || std::uniform_int_distribution<int>(0, 2)(rng) == 0) return pick(rng, atoms);
  std::string t = random_term(rng, depth - 1) + spaced(rng, pick(rng, ops)) + random_term(rng, depth - 1);
  return std::uniform_int_distribution<int>(0, 1)(rng) ? "(" + t + ")" : t;
}

std::string random_statement(std::mt19937& rng) {
  static const std::vector<std::string> rels{"=", "≤", "<", "≠", "∣"};
  std::string s = random_term(rng, 2) + spaced(rng, pick(rng, rels)) + random_term(rng, 2);
  switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
    case 0: return "∀ k : ℕ, k ≤ n → " + s;
    case 1: return "∃ m : ℕ, " + s;
    case 2: return "(" + s + ") ∧ " + random_term(rng, 1) + " = " + random_term(rng, 1);
    default: return s;
  }
}

std::string random_proof(std::mt19937& rng) {
  static const std::vector<std::string> proofs{
      "linarith",
      "norm_num [l_0]",
      "rw [l_0]\nring",
      "constructor\n· linarith\n· nlinarith [sq_nonneg x]",
      "-- have hidden : False := by trivial\nsimp",
      "/- have x : y := z -/\nomega",
      "calc x = 2 := by linarith\n  _ = 2 := rfl",
      "intro k hk\nexact ⟨k, by simp⟩",
      "nlinarith [sq_nonneg (x - 1), sq_nonneg (x + 1)]"};
  return pick(rng, proofs);
}

Verdict round_trip() {
  std::mt19937 rng(20240601);
  TheoremTask task = toy_task("round_trip");
  task.preamble = "";
  const auto start = Clock::now();
  int recovered = 0;
  std::string first_failure;
  for (int trial = 0; trial < kRoundTripTrials; ++trial) {
    const int m = std::uniform_int_distribution<int>(1, 5)(rng);
    LemmaSelection sel;
    ProvenSet proven;
    std::vector<std::string> proofs;
    for (int i = 0; i < m; ++i) {
      sel.items.push_back({i, make_lemma(lean::lemma_binder(static_cast<std::size_t>(i)), random_statement(rng)), ""});
      proofs.push_back(random_proof(rng));
      proven.add(i, proofs.back(),
                 std::uniform_int_distribution<int>(0, 1)(rng) ? Provenance::salvaged : Provenance::loop_proved);
    }
    const std::string main = random_proof(rng) == "linarith" ? "exact l_0" : "nlinarith [l_0]\n<;> simp";
    bool ok = true;
    try {
      const auto back = lean::extract_haves(lean::splice_final_proof(task, sel, proven, main)).lemmas;
      ok = static_cast<int>(back.size()) == m;
      for (int i = 0; ok && i < m; ++i) {
        const auto& item = sel.items[static_cast<std::size_t>(i)];
        ok = back[static_cast<std::size_t>(i)].binder_name == item.lemma.binder_name &&
             back[static_cast<std::size_t>(i)].normalized_statement == item.lemma.normalized_statement &&
             back[static_cast<std::size_t>(i)].proof_text &&
             lean::normalize_whitespace(*back[static_cast<std::size_t>(i)].proof_text) ==
                 lean::normalize_whitespace(proofs[static_cast<std::size_t>(i)]);
      }
    } catch (const std::exception& e) {
      ok = false;
      if (first_failure.empty()) first_failure = e.what();
    }
    if (!ok && first_failure.empty()) first_failure = "trial " + std::to_string(trial);
    recovered += ok;
  }
  const double secs = since(start);
  return verdict(recovered == kRoundTripTrials && secs < kRoundTripSeconds,
                 std::to_string(recovered) + "/" + std::to_string(kRoundTripTrials) + " triples recovered in " +
                     fmt("%.2f", secs) + " s (limit " + fmt("%.0f", kRoundTripSeconds) + " s)" +
                     (first_failure.empty() ? "" : "; first failure: " + first_failure));
}

// 3 --------------------------------------------------------------------------

struct Scenario {
  std::string name;
  std::vector<Entry> reasoner;
  std::vector<Entry> worker;
  std::vector<Entry> prover;
  PipelineConfig config = budget_of(128);
  OutcomeStatus status = OutcomeStatus::solved;
  int consumed = 0;
  LexicalChecker::Rule rule = {};
};

std::vector<Scenario> scenarios() {
  PipelineConfig informal_only = budget_of(128);
  informal_only.lemma_guidance = false;
  PipelineConfig lemma_only = budget_of(128);
  lemma_only.informal_guidance = false;
  PipelineConfig bare = informal_only;
  bare.informal_guidance = false;
  PipelineConfig single = budget_of(1);
  single.initial_attempts = 1;
  const auto lemma_path = concat({times(16, harvest()), {prover_ok("main_sketch"), prover_ok("lemma:1"), prover_ok("lemma:2")}});
  const auto exhausted = OutcomeStatus::exhausted;

  std::vector<Scenario> s;
  s.push_back({"initial success at 1", reasoner_ok(), worker_ok({}), {prover_ok("initial")}, budget_of(128),
               OutcomeStatus::solved, 1});
  s.push_back({"initial success at 8", reasoner_ok(), worker_ok({}),
               concat({times(7, prover_fail("initial")), {prover_ok("initial")}}), budget_of(128), OutcomeStatus::solved, 8});
  s.push_back({"initial success at 16", reasoner_ok(), worker_ok({}),
               concat({times(15, prover_fail("initial")), {prover_ok("initial")}}), budget_of(128), OutcomeStatus::solved,
               16});
  s.push_back({"lemma path", reasoner_ok(), worker_ok(kLemmas), lemma_path, budget_of(128), OutcomeStatus::solved, 19});
  s.push_back({"salvage covers every lemma", reasoner_ok(), worker_ok({"x = 2", "x ^ 2 = 4"}),
               concat({times(16, entry("initial", completion("have h1 : x = 2 := by linarith\n"
                                                             "have h2 : x ^ 2 = 4 := by nlinarith\nfail"))),
                       {prover_ok("main_sketch")}}),
               budget_of(128), OutcomeStatus::solved, 17});
  s.push_back({"round robin", reasoner_ok(), worker_ok(kLemmas),
               concat({times(16, harvest()),
                       {prover_ok("main_sketch"), prover_fail("lemma:1"), prover_fail("lemma:2"), prover_ok("lemma:1"),
                        prover_fail("lemma:2"), prover_ok("lemma:2")}}),
               budget_of(128), OutcomeStatus::solved, 22});
  s.push_back({"main sketch on second try", reasoner_ok(), worker_ok(kLemmas),
               concat({times(16, harvest()),
                       {prover_fail("main_sketch"), prover_ok("main_sketch"), prover_ok("lemma:1"), prover_ok("lemma:2")}}),
               budget_of(128), OutcomeStatus::solved, 20});
  s.push_back({"main sketch fails, fallback solves", reasoner_ok(), worker_ok(kLemmas),
               concat({times(16, harvest()), times(8, prover_fail("main_sketch")), {prover_ok("fallback")}}),
               budget_of(128), OutcomeStatus::solved, 25});
  s.push_back({"empty pool, fallback solves", reasoner_ok(), worker_ok({}),
               concat({times(20, prover_fail("")), {prover_ok("fallback")}}), budget_of(128), OutcomeStatus::solved, 21});
  s.push_back({"empty pool exhausts", reasoner_ok(), worker_ok({}), {repeat(prover_fail(""))}, budget_of(128),
               exhausted, 128});
  s.push_back({"empty selection exhausts", reasoner_ok(), worker_ok({}),
               concat({times(16, harvest()), {repeat(prover_fail(""))}}), budget_of(128), exhausted, 128});
  s.push_back({"unusable selection exhausts", reasoner_ok(),
               {entry("summary", "We have it."), entry("selection", "no heading"), entry("selection", "still none")},
               concat({times(16, harvest()), {repeat(prover_fail(""))}}), budget_of(128), exhausted, 128});
  s.push_back({"initial attempts exhaust small budget", reasoner_ok(), worker_ok({}), {repeat(prover_fail(""))},
               single, exhausted, 1});
  s.push_back({"main sketch exhausts", reasoner_ok(), worker_ok(kLemmas),
               concat({times(16, harvest()), {repeat(prover_fail(""))}}), budget_of(20), exhausted, 20});
  s.push_back({"lemma loop exhausts", reasoner_ok(), worker_ok(kLemmas),
               concat({times(16, harvest()), {prover_ok("main_sketch"), repeat(prover_fail(""))}}), budget_of(128),
               exhausted, 128});
  s.push_back({"fallback exhausts after main sketch", reasoner_ok(), worker_ok(kLemmas),
               concat({times(16, harvest()), {repeat(prover_fail(""))}}), budget_of(128), exhausted, 128});
  Scenario anomaly{"assembly anomaly", reasoner_ok(), worker_ok(kLemmas), lemma_path, budget_of(128), exhausted, 19};
  anomaly.rule = [](std::string_view src) {
    std::vector<Message> out;
    if (src.find("  have l_0 : ") != std::string_view::npos) out.push_back({Severity::error, {}, "type mismatch"});
    return out;
  };
  s.push_back(anomaly);
  s.push_back({"reasoner outage", {repeat(failing("", 503))}, {}, {repeat(prover_fail(""))}, budget_of(128), exhausted,
               128});
  s.push_back({"worker outage", reasoner_ok(), {repeat(failing("", 500))},
               concat({times(16, harvest()), {repeat(prover_fail(""))}}), budget_of(128), exhausted, 128});
  s.push_back({"informal proofs unavailable", reasoner_ok(),
               {entry("summary", "We have it."), entry("selection", chosen(kLemmas)), repeat(failing("lemma_proofs", 500))},
               lemma_path, budget_of(128), OutcomeStatus::solved, 19});
  s.push_back({"informal only", reasoner_ok(), worker_ok({}),
               concat({times(29, prover_fail("")), {prover_ok("initial")}}), informal_only, OutcomeStatus::solved, 30});
  s.push_back({"lemma only", {}, {entry("selection", chosen(kLemmas))}, lemma_path, lemma_only, OutcomeStatus::solved,
               19});
  s.push_back({"no guidance exhausts", {}, {}, {repeat(prover_fail(""))}, bare, exhausted, 128});
  s.push_back({"prover outage", reasoner_ok(), worker_ok({}), {repeat(failing("", 500))}, budget_of(128),
               OutcomeStatus::infrastructure_failure, 0});
  return s;
}

Verdict budget_invariants() {
  const auto all = scenarios();
  const auto start = Clock::now();
  std::vector<std::string> broken;
  for (const auto& sc : all) {
    MockEnv env(sc.reasoner, sc.worker, sc.prover);
    LexicalChecker checker(0.0, sc.rule);
    Recorder r;
    const auto o = run_pipeline(toy_task(), sc.config, env.clients(), checker, env.templates, &r);
    const int calls = static_cast<int>(env.prover->call_count());
    std::vector<std::string> why;
    if (o.ledger.consumed() != calls) why.push_back("consumed " + std::to_string(o.ledger.consumed()) + " != calls " +
                                                    std::to_string(calls));
    if (o.ledger.consumed() > 128 || o.ledger.consumed() > sc.config.budget) why.push_back("over budget");
    if (static_cast<int>(r.attempts.size()) != calls) why.push_back("attempt log size");
    if (o.status != sc.status) why.push_back(std::string("status ") + to_string(o.status));
    if (o.ledger.consumed() != sc.consumed) why.push_back("consumed " + std::to_string(o.ledger.consumed()));
    if (o.solved != (o.status == OutcomeStatus::solved)) why.push_back("solved flag");
    if (o.solved && (!o.solving_attempt_index || *o.solving_attempt_index != calls)) why.push_back("stop-on-success");
    if (!legal_trace(o.phase_trace)) why.push_back("illegal trace " + trace_string(o.phase_trace));
    if (!why.empty()) broken.push_back(sc.name + ": " + join(why, ", "));
  }
  const double secs = since(start);
  return verdict(all.size() >= kMinScenarios && broken.empty() && secs < kScenarioSeconds,
                 std::to_string(all.size() - broken.size()) + "/" + std::to_string(all.size()) +
                     " scenarios hold exactly in " + fmt("%.2f", secs) + " s (limit " + fmt("%.0f", kScenarioSeconds) +
                     " s)" + (broken.empty() ? "" : "; " + join(broken, "; ")));
}

// 4 --------------------------------------------------------------------------

Verdict pipeline_fidelity() {
  MockEnv env(reasoner_ok(), worker_ok(kLemmas),
              concat({times(16, harvest()), {prover_ok("main_sketch"), prover_ok("lemma:1"), prover_ok("lemma:2")}}));
  Recorder r;
  const auto o = env.run(toy_task(), budget_of(128), &r);
  const std::vector<P> expected{P::InitialAttempts, P::LemmaSelection, P::Salvage, P::MainSketch,
                                P::LemmaLoop,       P::Assembly,       P::Solved};
  const bool salvaged_one = r.attempts.size() == 19 && to_string(r.attempts[16].stage) == std::string("main_sketch");
  const bool ok = o.status == OutcomeStatus::solved && o.ledger.consumed() == 16 + 1 + 2 &&
                  o.ledger.stage_count(StageKind::initial) == 16 && o.ledger.stage_count(StageKind::main_sketch) == 1 &&
                  o.ledger.stage_count(StageKind::lemma) == 2 && o.phase_trace == expected && salvaged_one;
  return verdict(ok, std::string("status ") + to_string(o.status) + ", consumed " +
                         std::to_string(o.ledger.consumed()) + " (expected 19), trace " + trace_string(o.phase_trace));
}

// 5 --------------------------------------------------------------------------

BenchmarkResult run_mock(const MockRun& run, const std::filesystem::path& out,
                         const std::function<void(RunConfig&)>& tweak = {}) {
  RunConfig config = load_config(run.config);
  if (tweak) tweak(config);
  BenchmarkOptions options;
  options.out_dir = out;
  return run_benchmark(config, load_dataset(run.dataset), options);
}

Verdict ablations() {
  const auto dir = scratch_dir("acceptance_ablation");
  const MockRun run = write_mock_run(dir, 8);
  run_mock(run, dir / "informal_only", [](RunConfig& c) { c.pipeline.lemma_guidance = false; });
  run_mock(run, dir / "lemma_only", [](RunConfig& c) { c.pipeline.informal_guidance = false; });

  std::size_t selection_entries = 0, informal_prompts = 0, informal_with_summary = 0;
  for (const auto& o : read_jsonl(dir / "informal_only" / log_file::outcomes)) {
    for (const auto& phase : o.at("phase_trace")) selection_entries += phase == "LemmaSelection";
  }
  for (const auto& p : read_jsonl(dir / "informal_only" / log_file::prompts)) {
    ++informal_prompts;
    informal_with_summary += p.at("text").get<std::string>().find("/- We have x = 2") != std::string::npos;
  }
  std::size_t lemma_prompts = 0, lemma_comments = 0, lemma_selection = 0;
  for (const auto& p : read_jsonl(dir / "lemma_only" / log_file::prompts)) {
    ++lemma_prompts;
    lemma_comments += p.at("text").get<std::string>().find("/-") != std::string::npos;
  }
  for (const auto& o : read_jsonl(dir / "lemma_only" / log_file::outcomes)) {
    for (const auto& phase : o.at("phase_trace")) lemma_selection += phase == "LemmaSelection";
  }
  std::filesystem::remove_all(dir);
  const bool ok = selection_entries == 0 && informal_prompts > 0 && informal_with_summary == informal_prompts &&
                  lemma_prompts > 0 && lemma_comments == 0 && lemma_selection > 0;
  return verdict(ok, "informal-only: " + std::to_string(selection_entries) + " LemmaSelection entries, " +
                         std::to_string(informal_with_summary) + "/" + std::to_string(informal_prompts) +
                         " prompts carry the summary; lemma-only: " + std::to_string(lemma_comments) + "/" +
                         std::to_string(lemma_prompts) + " prompts embed a comment, " +
                         std::to_string(lemma_selection) + " selection phases");
}

// 6 --------------------------------------------------------------------------

Verdict pass_at_k_sanity() {
  const auto start = Clock::now();
  auto transport = std::make_shared<BernoulliProverTransport>(0.5, 20240601);
  ChatClient prover(endpoint(Role::prover), transport, [](double) {});
  PipelineConfig config = budget_of(128);
  config.informal_guidance = false;
  config.lemma_guidance = false;
  LexicalChecker checker;
  const TemplateSet templates;
  std::vector<TheoremOutcome> outcomes;
  for (int t = 0; t < kBernoulliTheorems; ++t) {
    outcomes.push_back(run_pipeline(toy_task("bernoulli_" + std::to_string(t)), config,
                                    ModelClients{nullptr, nullptr, &prover}, checker, templates));
  }
  const double measured = compute_pass_at_k(outcomes, 4);
  const double expected = 1.0 - std::pow(0.5, 4);
  const double secs = since(start);
  return verdict(std::abs(measured - expected) <= kBernoulliTolerance && secs < kBernoulliSeconds,
                 "pass@4 " + fmt("%.4f", measured) + " vs " + fmt("%.4f", expected) + " (tolerance " +
                     fmt("%.2f", kBernoulliTolerance) + ", " + std::to_string(kBernoulliTheorems) + " theorems, " +
                     fmt("%.2f", secs) + " s, limit " + fmt("%.0f", kBernoulliSeconds) + " s)");
}

// 7 --------------------------------------------------------------------------

Verdict determinism() {
  const auto dir = scratch_dir("acceptance_determinism");
  const MockRun run = write_mock_run(dir, 12);
  auto bernoulli = [](RunConfig& c) {
    c.endpoints[Role::prover].base_url = "mock-bernoulli:0.05:7";
    c.workers = 4;
  };
  run_mock(run, dir / "script_a");
  run_mock(run, dir / "script_b");
  run_mock(run, dir / "bernoulli_a", bernoulli);
  run_mock(run, dir / "bernoulli_b", bernoulli);
  std::vector<std::string> differ;
  std::size_t compared = 0;
  for (const std::string kind : {"script", "bernoulli"}) {
    for (const char* f : {log_file::attempts, log_file::outcomes, log_file::guidance, log_file::prompts,
                          log_file::report_json, log_file::report_txt}) {
      ++compared;
      if (slurp(dir / (kind + "_a") / f) != slurp(dir / (kind + "_b") / f)) differ.push_back(kind + "/" + f);
    }
  }
  std::filesystem::remove_all(dir);
  return verdict(differ.empty(), std::to_string(compared - differ.size()) + "/" + std::to_string(compared) +
                                     " log and report files byte-identical across repeated runs" +
                                     (differ.empty() ? "" : "; differ: " + join(differ, ", ")));
}

// 8 --------------------------------------------------------------------------

std::vector<std::string> split_command(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

Verdict live_lean() {
  const char* cmd = std::getenv("LEMMAGUIDE_REPL_CMD");
  if (!cmd || !*cmd) return {Verdict::skip, "set LEMMAGUIDE_REPL_CMD (and LEMMAGUIDE_REPL_DIR) to run against Lean"};
  const char* repl_dir = std::getenv("LEMMAGUIDE_REPL_DIR");
  const auto start = Clock::now();
  const std::filesystem::path samples = std::filesystem::path(LEMMAGUIDE_SOURCE_DIR) / "samples" / "toy";
  RunConfig config = load_config(samples / "config.toml");
  config.verifier.mode = "repl";
  config.verifier.command = split_command(cmd);
  config.verifier.working_dir = repl_dir ? repl_dir : "";
  config.verifier.grace_s = kLeanGrace;
  config.pipeline.verify_timeout_s = kLeanTimeout;
  config.workers = 1;

  ReplConfig repl;
  repl.command = config.verifier.command;
  repl.working_dir = config.verifier.working_dir;
  repl.preamble = config.preamble;
  repl.grace_s = kLeanGrace;
  ReplSession session(repl);
  const std::string pre = config.preamble;
  const auto good = check_proof(session, pre + "theorem good (x : ℝ) (h₀ : 3 * x + 1 = 7) : x = 2 := by\n  linarith\n",
                                kLeanTimeout);
  const auto bad = check_proof(session, pre + "theorem bad (x : ℝ) (h₀ : 3 * x + 1 = 7) : x = 3 := by\n  linarith\n",
                               kLeanTimeout);
  const auto spin = check_proof(session,
                                pre + "theorem spin : True := by\n  run_tac do\n    repeat\n      IO.sleep 100\n",
                                kLeanTimeout);

  TheoremTask task = toy_task("live_square");
  task.preamble = pre;
  LemmaSelection sel;
  sel.items.push_back({0, make_lemma("l_0", "x = 2"), ""});
  sel.items.push_back({1, make_lemma("l_1", "x ^ 2 = 4"), ""});
  ProvenSet proven;
  proven.add(0, "linarith", Provenance::salvaged);
  proven.add(1, "rw [l_0]\nnorm_num", Provenance::loop_proved);
  const auto spliced = check_proof(session, lean::splice_final_proof(task, sel, proven, "linarith [l_1]"), kLeanTimeout);

  const auto dir = scratch_dir("acceptance_live");
  config.base_dir = samples;
  BenchmarkOptions options;
  options.out_dir = dir / "out";
  const auto result = run_benchmark(config, load_dataset(samples / "dataset.jsonl"), options);
  std::size_t solved = 0;
  for (const auto& o : result.report.outcomes) solved += o.solved;
  std::filesystem::remove_all(dir);
  const double secs = since(start);

  const double spin_elapsed = spin.elapsed;
  const bool ok = good.status == VerificationStatus::proved && bad.status == VerificationStatus::failed &&
                  spin.status == VerificationStatus::timeout && spin_elapsed >= kLeanTimeout - kLeanGrace &&
                  spin_elapsed <= kLeanTimeout + kLeanGrace && spliced.status == VerificationStatus::proved &&
                  solved == result.report.outcomes.size() && secs < kLeanSeconds;
  return verdict(ok, std::string("good ") + to_string(good.status) + ", bad " + to_string(bad.status) + ", spin " +
                         to_string(spin.status) + " after " + fmt("%.1f", spin_elapsed) + " s (20 +/- 2), spliced " +
                         to_string(spliced.status) + ", toy dataset " + std::to_string(solved) + "/" +
                         std::to_string(result.report.outcomes.size()) + " solved, " + fmt("%.0f", secs) +
                         " s (limit " + fmt("%.0f", kLeanSeconds) + " s)");
}

// 9 --------------------------------------------------------------------------

Verdict defaults() {
  const PipelineConfig p;
  const RunConfig c = parse_config(
      "[endpoints.reasoner]\nbase_url = \"http://r\"\n[endpoints.worker]\nbase_url = \"http://w\"\n"
      "[endpoints.prover]\nbase_url = \"http://p\"\n");
  const bool ok = p.budget == 128 && p.initial_attempts == 16 && p.max_lemmas == 5 && p.verify_timeout_s == 20.0 &&
                  c.pipeline.budget == 128 && c.pipeline.initial_attempts == 16 && c.pipeline.max_lemmas == 5 &&
                  c.pipeline.verify_timeout_s == 20.0;
  return verdict(ok, "B=" + std::to_string(c.pipeline.budget) + " N=" + std::to_string(c.pipeline.initial_attempts) +
                         " k=" + std::to_string(c.pipeline.max_lemmas) + " timeout=" +
                         fmt("%.0f", c.pipeline.verify_timeout_s) + "s");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"parser oracle equivalence", oracle_equivalence},
      {"splice/extract round trip", round_trip},
      {"budget invariants", budget_invariants},
      {"pipeline flow fidelity", pipeline_fidelity},
      {"ablation toggles", ablations},
      {"pass@k estimator sanity", pass_at_k_sanity},
      {"determinism", determinism},
      {"live Lean integration", live_lean},
      {"hyperparameter defaults", defaults},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {Verdict::fail, std::string("threw: ") + e.what()};
    }
    const char* tag = v.kind == Verdict::pass ? "PASS" : v.kind == Verdict::fail ? "FAIL" : "SKIP";
    failures += v.kind == Verdict::fail;
    std::printf("%s  %zu  %-28s %s\n", tag, i + 1, criteria[i].first.c_str(), v.detail.c_str());
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
