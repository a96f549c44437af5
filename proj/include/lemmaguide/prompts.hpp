#pragma once

// Prompt templates for the guidance model and the prover, with `{name}`
// placeholder rendering. Defaults are compiled in; a directory of
// `<id>.txt` files can override any of them.

#include <lemmaguide/errors.hpp>

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lemmaguide {

enum class PromptId {
  nl_proof,
  summarize_system,
  summarize_user,
  select_system,
  select_user,
  lemma_proofs_system,
  lemma_proofs_user,
  prover_cot,
};

inline constexpr std::array<PromptId, 8> kAllPrompts{
    PromptId::nl_proof,      PromptId::summarize_system,    PromptId::summarize_user,
    PromptId::select_system, PromptId::select_user,         PromptId::lemma_proofs_system,
    PromptId::lemma_proofs_user, PromptId::prover_cot};

inline const char* to_string(PromptId id) {
  switch (id) {
    case PromptId::nl_proof: return "nl_proof";
    case PromptId::summarize_system: return "summarize_system";
    case PromptId::summarize_user: return "summarize_user";
    case PromptId::select_system: return "select_system";
    case PromptId::select_user: return "select_user";
    case PromptId::lemma_proofs_system: return "lemma_proofs_system";
    case PromptId::lemma_proofs_user: return "lemma_proofs_user";
    case PromptId::prover_cot: return "prover_cot";
  }
  return "?";
}

/// Names a template may reference.
inline const std::set<std::string, std::less<>>& known_placeholders() {
  static const std::set<std::string, std::less<>> names{
      "formal_statement", "informal_statement", "nl_proof", "lemmas", "summary", "lean_code"};
  return names;
}

namespace detail {

inline bool placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

/// Calls `visit(begin, end, name)` for each `{name}` whose name is a known placeholder.
template <typename Visit>
void for_each_placeholder(std::string_view text, Visit visit) {
  std::size_t pos = text.find('{');
  while (pos != std::string_view::npos) {
    std::size_t end = pos + 1;
    while (end < text.size() && placeholder_char(text[end])) ++end;
    if (end < text.size() && text[end] == '}' && end > pos + 1) {
      const std::string_view name = text.substr(pos + 1, end - pos - 1);
      if (known_placeholders().count(name)) visit(pos, end + 1, name);
    }
    pos = text.find('{', pos + 1);
  }
}

}  // namespace detail

inline std::vector<std::string> placeholders_of(std::string_view text) {
  std::vector<std::string> out;
  detail::for_each_placeholder(text, [&](std::size_t, std::size_t, std::string_view name) {
    out.emplace_back(name);
  });
  return out;
}

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Single-pass substitution: bound values are inserted verbatim and never
/// re-scanned. Throws missing_binding naming every unbound placeholder.
inline std::string render(std::string_view text, const Bindings& bindings) {
  std::set<std::string> missing;
  std::string out;
  std::size_t copied = 0;
  detail::for_each_placeholder(text, [&](std::size_t begin, std::size_t end, std::string_view name) {
    auto it = bindings.find(name);
    if (it == bindings.end()) {
      missing.emplace(name);
      return;
    }
    out.append(text.substr(copied, begin - copied));
    out += it->second;
    copied = end;
  });
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::missing_binding, names);
  }
  out.append(text.substr(copied));
  return out;
}

inline std::string_view default_template(PromptId id) {
  switch (id) {
    case PromptId::nl_proof:
      return R"(Provide a proof in natural language for the theorem below:

Theorem statement in Lean 4:

{formal_statement}

Informal Statement:

{informal_statement}

Please provide a rigorous, detailed proof using natural language.)";

    case PromptId::summarize_system:
      return R"(You are a mathematical proof summarizer. You will be given a formal statement of a theorem in Lean 4, its informal counterpart, and a natural language proof of the theorem. Your response should contain only a summarized version of the natural language proof that's both concise and complete. You should start you response with "We want to show that", "We have", "We need to show that" or "To show that". You should write only the proof in your response, nothing more.)";

    case PromptId::summarize_user:
      return R"(THEOREM STATEMENT IN LEAN 4:

{formal_statement}

INFORMAL STATEMENT:

{informal_statement}

COMPLETE PROOF:

{nl_proof}

Write your summarized proof below)";

    case PromptId::select_system:
      return R"(You are a theorem-proving assistant trained to evaluate individual statements for their provability as standalone lemmas in Lean 4. Your task is to analyze a single list of candidate lemma statements, and then select at most 5 to cover all key steps of the natural language proof.

Core Principle for Lemma Evaluation

A candidate lemma statement L is "correct" if and only if a Lean 4 statement `have [name] : [statement] := by [proof]` would be successfully provable using ONLY the global assumptions/hypotheses provided in the formal theorem statement.

A lemma is "incorrect" if it couldn't be proven in Lean 4 using only the assumptions and hypothesis provided in the, or if it's not fully justified by the natural language proof based on the global assumptions.

Specific Criteria Guiding "Correct" vs. "Incorrect" Evaluation

1. Global Provability: The exact mathematical statement of the lemma must be provably true using only the given hypotheses in the formal theorem statement.

2. Justification by NL Proof: The lemma must be a direct and logical step or assertion found in the natural language proof, understandable from the global context.

3. No Dependence on Undischarged Assumptions:
   - If the proof proceeds by cases (e.g., "Case 1: Assume P... then R", "Case 2: Assume Q... then T"), a lemma stating P by itself, Q by itself, R by itself (if R depends on P), or T by itself (if T depends on Q) is incorrect. These statements are only true under temporary, local assumptions.
   - However, a lemma stating P ∨ Q (if this disjunction is provable globally) would be correct.
   - Similarly, P → R or Q → T might be correct if these implications are what the proof establishes.

4. Contradictions & Unjustified Steps:
   - If a lemma contradicts a statement in the proof or a hypothesis, it's incorrect.
   - If a lemma makes an assertion not present or derivable from the NL proof and global hypotheses, it's incorrect.
   - In a proof by contradiction, if 'A' is true and the proof temporarily assumes 'not A' to reach a contradiction, a lemma stating 'not A' as a factual step from the global context is incorrect.

5. Consequences of Incorrect Lemmas: If a lemma B follows logically from another lemma A, and lemma A is determined to be "incorrect", then lemma B is also "incorrect".

Input Format
You'll receive the formal statement of the theorem in Lean 4, its informal counterpart, a complete natural language proof, and a list of candidate lemma statements.

THEOREM STATEMENT IN LEAN 4:
<Formal statement in Lean 4>

INFORMAL STATEMENT:
<Informal translation of theorem statement>

COMPLETE PROOF:
<Complete natural language proof of theorem>

LEMMAS:
0: <lemma in Lean 4>
1: <lemma in Lean 4>
...
N-1: <lemma in Lean 4>

Output Format (Strictly Adhere to This Structure)
LEMMA ANALYSIS
0:
Analysis: [Provide a short, step-by-step analysis of lemma 0. Explain precisely why it IS or IS NOT provable as a standalone 'have' statement given ONLY the theorem's global hypotheses and the NL proof. Reference the Core Principle and Specific Criteria above.]
Evaluation: [correct or incorrect]

1:
Analysis: [Analysis for lemma 1 as above.]
Evaluation: [correct or incorrect]
...

N-1:
Analysis: [Analysis for lemma N-1 as above.]
Evaluation: [correct or incorrect]

SELECTION RATIONALE FOR CHOSEN LEMMAS
AVAILABLE LEMMAS: [List all lemmas that you evaluated as 'correct'.]
REASONING: [Based on your 'Evaluation' of all original lemmas above, select up to 5 correct lemmas that represent the key intermediate steps from the provided natural language proof. Do not select lemmas that are restatements of the theorem's hypotheses or its final conclusion. Always try to select 5 lemmas, choosing fewer only if there are not enough correct intermediate lemmas available. The final chosen lemmas must be ordered to reflect the logical flow of the natural language proof.]

CHOSEN LEMMAS

[Write all chosen lemmas here. Each chosen lemma must be presented in the following format. Number them sequentially starting from l_0, regardless of their original index.]

have l_0 : <statement> := by
have l_1 : <statement> := by
...

This is how your output should look like

LEMMA ANALYSIS
0:
Analysis: [Analysis of lemma 0 based on the criteria explained above]
Evaluation: [Evaluation of lemma 1 (correct or incorrect)]

1:
Analysis: [Analysis of lemma 0 based on the criteria explained above]
Evaluation: [Evaluation of lemma 1 (correct or incorrect)]
...

N-1:
Analysis: [Analysis of lemma 0 based on the criteria explained above]
Evaluation: [Evaluation of lemma 1 (correct or incorrect)]

SELECTION RATIONALE FOR CHOSEN LEMMAS
AVAILABLE LEMMAS:

[first correct lemma statement]

...

[last correct lemma statement]

REASONING: [Reasoning about which (AT MOST 5) lemmas to choose, with the goal of selecting the key intermediate steps of the NL proof, excluding hypotheses and the conclusion, and ordering them according to the proof's logical flow.]

CHOSEN LEMMAS:

[List of chosen lemmas. Note that the subscripts should be in the order 0, 1, 2, ..., irrespective of the number of its corresponding lemma in the input.]

have l_0 : <statement> := by
have l_1 : <statement> := by)";

    case PromptId::select_user:
      return R"(THEOREM STATEMENT IN LEAN 4:
{formal_statement}

INFORMAL STATEMENT:
{informal_statement}

COMPLETE PROOF:
{nl_proof}

LEMMAS:
{lemmas}

Proceed with your response below, strictly following all guidelines and output structures specified in the system prompt.)";

    case PromptId::lemma_proofs_system:
      return R"(You are a mathematical proof analyst. Your task is to analyze a given mathematical proof (provided alongside formal and informal statements) and break it down into a sequence of logical steps, formatted clearly for potential formalization in Lean 4.

You will receive:
1. A formal theorem statement in Lean 4, potentially including hypothesis labels like h_0, h_1.
2. An informal statement of the theorem.
3. A complete natural language proof of the theorem.
4. Formal lemma statements (e.g., have l_0 : <...> ) that will appear in the Lean proof.

Analyze the provided natural language proof and follow these guidelines meticulously to structure your output:

1. REASONING Section:
   - Start with REASONING:.
   - Analyze the provided natural language proof to identify its overall strategy and key insights.
   - Explicitly note how the formal lemma statements (have l_0, have l_1, etc.) map to the key steps in the natural language proof. These will directly correspond 1-to-1 with the l_0:, l_1: steps you generate. You must NEVER include new lemma statements that are not present in the input.
   - Briefly list the main steps you identified in the provided proof, ensuring each step aligns with one of the provided formal lemma statements. Remember to never include new lemma statements in the steps.
   - In the case the formal lemma statements don't match the steps in the proof well, you should try to modify the natural language proof to make it match the formal lemma statements. You should NEVER modify the formal lemma statements themselves, or add new lemma statements.

2. STEPS Section:
   - Follow with STEPS:.
   - Label the key milestones as l_0:, l_1:, etc. These must exactly match the order and content of the formal have statements provided.
   - Each step (l_i:) must state a precise mathematical fact in natural mathematical language.

3. Step Proofs (Proof: sections):
   - Follow each l_i: statement with Proof:.
   - Provide a concise summary of the justification found in the provided natural language proof.
   - To show dependency on a previous step l_j, state the mathematical result of l_j as a fact within the narrative summary of the proof for l_i, instead of mentioning the name l_j directly. You should NEVER mention the name l_j inside the proof.
   - Correct: "Since <mathematical statement from l_j holds / was established>, the proof proceeds by..."
   - Incorrect: "By l_j..." or "Using the result from l_j...". This is incorrect because 'l_j' is present in the proof, which is not allowed.

4. Final Proof Section:
   - End with Final Proof:.
   - Summarize how the proof combines the results stated in the l_i steps to reach the final conclusion.
   - State intermediate results directly as established facts, without referencing step labels.

5. Formatting:

   Your response must follow this exact structure:

   REASONING:
   <Analysis noting correspondence between formal lemmas and steps>

   STEPS:
   l_0:
   <First mathematical statement matching first have>
   Proof:
   <Detailed explanation with all necessary calculations>

   l_1:
   <Next mathematical statement matching next have>
   Proof:
   <Detailed explanation with all necessary calculations>

   ...

   Final Proof:
   <Conclusion using established results>

Here's an example showing the expected output format:

REASONING:
The proof first establishes that x equals 2 from the linear equation, then squares it. The formal lemmas l_0 and l_1 correspond to these two steps.

STEPS:
l_0:
x = 2.
Proof:
From 3x + 1 = 7 we get 3x = 6, so x = 2.

l_1:
x^2 = 4.
Proof:
Since x = 2, squaring gives x^2 = 2^2 = 4.

Final Proof:
Since x^2 = 4, we have x^2 + 1 = 5, which is the claim.)";

    case PromptId::lemma_proofs_user:
      return R"(THEOREM STATEMENT IN LEAN 4:
{formal_statement}

INFORMAL STATEMENT:
{informal_statement}

COMPLETE PROOF:
{nl_proof}

FORMAL LEMMAS::
{lemmas})";

    case PromptId::prover_cot:
      return "Complete the following Lean 4 code with explanatory comments preceding each line of code:\n"
             "\n"
             "```lean4\n"
             "{lean_code}";
  }
  return {};
}

/// The active set of templates.
class TemplateSet {
 public:
  TemplateSet() {
    for (PromptId id : kAllPrompts) texts_[id] = std::string(default_template(id));
  }

  /// Replaces defaults with `<dir>/<id>.txt` where present. A single trailing
  /// newline in a file is dropped.
  static TemplateSet with_overrides(const std::filesystem::path& dir) {
    TemplateSet set;
    if (dir.empty()) return set;
    if (!std::filesystem::is_directory(dir)) {
      throw Error(ErrorCode::config_error, "prompts directory not found: " + dir.string());
    }
    for (PromptId id : kAllPrompts) {
      const auto file = dir / (std::string(to_string(id)) + ".txt");
      if (!std::filesystem::exists(file)) continue;
      std::ifstream in(file, std::ios::binary);
      std::ostringstream buffer;
      buffer << in.rdbuf();
      std::string text = buffer.str();
      if (!text.empty() && text.back() == '\n') text.pop_back();
      set.texts_[id] = std::move(text);
    }
    return set;
  }

  const std::string& text(PromptId id) const { return texts_.at(id); }
  std::string render(PromptId id, const Bindings& bindings) const {
    return lemmaguide::render(text(id), bindings);
  }

 private:
  std::map<PromptId, std::string> texts_;
};

}  // namespace lemmaguide
