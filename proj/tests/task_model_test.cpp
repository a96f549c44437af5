#include <lemmaguide/task_model.hpp>

#include <gtest/gtest.h>

namespace {

using namespace lemmaguide;

TEST(Ledger, CountsAttemptsPerStageAndRefusesPastTotal) {
  BudgetLedger ledger(3);
  EXPECT_EQ(ledger.record_attempt(Stage::initial()), 1);
  EXPECT_EQ(ledger.record_attempt(Stage::lemma(2)), 2);
  EXPECT_EQ(ledger.record_attempt(Stage::lemma(0)), 3);
  EXPECT_TRUE(ledger.exhausted());
  EXPECT_EQ(ledger.remaining(), 0);
  EXPECT_EQ(ledger.stage_count(StageKind::lemma), 2);
  try {
    ledger.record_attempt(Stage::fallback());
    FAIL() << "expected budget_exhausted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::budget_exhausted);
  }
  EXPECT_EQ(ledger.consumed(), 3);
}

TEST(Ledger, GuidanceCallsAreFree) {
  BudgetLedger ledger(1);
  ledger.record_guidance("summary", 2.5);
  ledger.record_guidance("summary", 0.5);
  ledger.record_guidance("selection", 1.0);
  EXPECT_EQ(ledger.consumed(), 0);
  EXPECT_EQ(ledger.guidance_calls(), 3);
  EXPECT_DOUBLE_EQ(ledger.guidance_timings().at("summary"), 3.0);
}

TEST(Stage, RoundTripsThroughLogForm) {
  for (const Stage& s : {Stage::initial(), Stage::main_sketch(), Stage::fallback(), Stage::lemma(0), Stage::lemma(12)}) {
    auto back = stage_from(to_string(s));
    ASSERT_TRUE(back.has_value()) << to_string(s);
    EXPECT_EQ(*back, s);
  }
  EXPECT_FALSE(stage_from("lemma:").has_value());
  EXPECT_FALSE(stage_from("lemma:x").has_value());
  EXPECT_FALSE(stage_from("bogus").has_value());
}

TEST(ProvenSet, EntriesAreNeverReplaced) {
  ProvenSet set;
  EXPECT_TRUE(set.add(1, "linarith", Provenance::salvaged));
  EXPECT_FALSE(set.add(1, "simp", Provenance::loop_proved));
  EXPECT_EQ(set.at(1).proof_text, "linarith");
  EXPECT_FALSE(set.covers(2));
  set.add(0, "norm_num", Provenance::loop_proved);
  EXPECT_TRUE(set.covers(2));
  EXPECT_TRUE(set.covers(0));
}

TEST(Phases, TransitionTableIsExact) {
  using P = PipelinePhase;
  const std::vector<P> all{P::InitialAttempts, P::LemmaSelection, P::Salvage, P::MainSketch, P::LemmaLoop,
                           P::Assembly,        P::Fallback,       P::Solved,  P::Exhausted};
  const std::set<std::pair<P, P>> edges{
      {P::InitialAttempts, P::Solved},   {P::InitialAttempts, P::LemmaSelection},
      {P::InitialAttempts, P::Exhausted}, {P::LemmaSelection, P::Salvage},
      {P::LemmaSelection, P::Fallback},  {P::Salvage, P::MainSketch},
      {P::MainSketch, P::LemmaLoop},     {P::MainSketch, P::Fallback},
      {P::MainSketch, P::Exhausted},     {P::LemmaLoop, P::Assembly},
      {P::LemmaLoop, P::Exhausted},      {P::Assembly, P::Solved},
      {P::Assembly, P::LemmaLoop},       {P::Fallback, P::Solved},
      {P::Fallback, P::Exhausted}};
  for (P a : all) {
    for (P b : all) EXPECT_EQ(legal_transition(a, b), edges.count({a, b}) == 1) << to_string(a) << "->" << to_string(b);
    EXPECT_EQ(phase_from(to_string(a)), a);
  }
  EXPECT_TRUE(legal_trace({P::InitialAttempts, P::LemmaSelection, P::Salvage, P::MainSketch, P::LemmaLoop,
                           P::Assembly, P::LemmaLoop, P::Exhausted}));
  EXPECT_FALSE(legal_trace({P::LemmaSelection, P::Salvage}));
  EXPECT_FALSE(legal_trace({}));
}

TEST(Task, FormalStatementValidation) {
  EXPECT_EQ(validate_formal_statement("theorem t (x : ℕ) : x = x"), "");
  EXPECT_NE(validate_formal_statement(""), "");
  EXPECT_NE(validate_formal_statement("def f : ℕ := 1"), "");
  EXPECT_NE(validate_formal_statement("theorem t : sorry = 1"), "");
  EXPECT_EQ(validate_formal_statement("theorem t : \"sorry\" = \"sorry\""), "");
  EXPECT_NE(validate_formal_statement("theorem t (x : ℕ : x = x"), "");
  TheoremTask task{"bad", "theorem t : (", "", ""};
  try {
    validate(task);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dataset_error);
  }
}

TEST(Lemma, MakeLemmaNormalizesAndSeedsCandidates) {
  Lemma l = make_lemma("h", "  a  +\n b = c ", std::string("ring"));
  EXPECT_EQ(l.normalized_statement, "a + b = c");
  ASSERT_EQ(l.candidate_proofs.size(), 1u);
  EXPECT_EQ(l.candidate_proofs[0], "ring");
  EXPECT_TRUE(make_lemma("h", "P").candidate_proofs.empty());
}

TEST(Status, StringForms) {
  for (auto s : {VerificationStatus::proved, VerificationStatus::failed, VerificationStatus::timeout,
                 VerificationStatus::transport_error}) {
    EXPECT_EQ(verification_status_from(to_string(s)), s);
  }
  for (auto s : {OutcomeStatus::solved, OutcomeStatus::exhausted, OutcomeStatus::infrastructure_failure}) {
    EXPECT_EQ(outcome_status_from(to_string(s)), s);
  }
}

}  // namespace
