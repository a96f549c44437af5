#pragma once

// The guidance-model procedures: natural-language proof, summary, lemma
// selection and per-lemma informal proofs, with parsers for the structured
// response formats their prompts ask for.

#include <lemmaguide/errors.hpp>
#include <lemmaguide/lean_syntax.hpp>
#include <lemmaguide/model_clients.hpp>
#include <lemmaguide/prompts.hpp>
#include <lemmaguide/task_model.hpp>

#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lemmaguide {

namespace guidance_task {
inline constexpr const char* nl_proof = "nl_proof";
inline constexpr const char* summary = "summary";
inline constexpr const char* selection = "selection";
inline constexpr const char* lemma_proofs = "lemma_proofs";
}  // namespace guidance_task

struct GuidanceContext {
  const TheoremTask& task;
  ModelClient& reasoner;
  ModelClient& worker;
  const TemplateSet& templates;
  /// Called once per guidance call with (task name, seconds, raw response).
  std::function<void(const std::string&, double, const std::string&)> on_call;
  std::vector<std::string>* diagnostics = nullptr;

  void note(std::string message) const {
    if (diagnostics) diagnostics->push_back(std::move(message));
  }
};

namespace detail {

inline std::string call_guidance(const GuidanceContext& ctx, ModelClient& client, const std::string& task,
                                 std::vector<ChatMessage> messages) {
  Completion completion;
  try {
    completion = client.complete(CompletionRequest{std::move(messages), ctx.task.name, task});
  } catch (const Error& e) {
    throw Error(ErrorCode::guidance_unavailable, task + ": " + e.what());
  }
  if (ctx.on_call) ctx.on_call(task, completion.seconds, completion.text);
  return completion.text;
}

/// Heading text with markdown decoration, colons and surrounding space removed.
inline std::string heading_key(std::string_view line) {
  std::string out;
  for (char c : line) {
    if (c == '*' || c == '#' || c == '_' || c == ':' || c == '`') continue;
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return lean::normalize_whitespace(out);
}

/// Line with leading list/markdown decoration removed.
inline std::string_view strip_decoration(std::string_view line) {
  line = lean::trim(line);
  while (!line.empty() && (line.front() == '*' || line.front() == '-' || line.front() == '`' ||
                           line.front() == '#' || line.front() == '>')) {
    line.remove_prefix(1);
    line = lean::trim(line);
  }
  while (!line.empty() && (line.back() == '*' || line.back() == '`' || line.back() == '$')) {
    line.remove_suffix(1);
  }
  return lean::trim(line);
}

inline bool mentions_lemma_name(std::string_view text) {
  const std::string masked(text);
  for (std::size_t pos = 0; (pos = masked.find("l_", pos)) != std::string::npos; pos += 2) {
    if (pos > 0 && lean::is_ident_rest(static_cast<unsigned char>(masked[pos - 1]))) continue;
    if (pos + 2 < masked.size() && std::isdigit(static_cast<unsigned char>(masked[pos + 2]))) return true;
  }
  return false;
}

}  // namespace detail

/// Makes text safe inside a Lean block comment.
inline std::string sanitize_for_comment(std::string text) {
  for (bool changed = true; changed;) {
    changed = false;
    for (auto [from, to] : {std::pair<std::string_view, std::string_view>{"-/", "- /"}, {"/-", "/ -"}}) {
      for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
        text.replace(pos, from.size(), to);
        changed = true;
      }
    }
  }
  return text;
}

inline bool has_summary_opener(std::string_view summary) {
  const std::string_view s = lean::trim(summary);
  for (std::string_view opener : {"We want to show that", "We have", "We need to show that", "To show that"}) {
    if (s.substr(0, opener.size()) == opener) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// parsers

/// Statements listed under the last `CHOSEN LEMMAS` heading, in order.
/// nullopt when the heading is missing. Lines that are not
/// `have l_<i> : <statement> := by` are skipped.
inline std::optional<std::vector<std::string>> parse_chosen_lemmas(std::string_view response) {
  const auto lines = lean::lines_of(response);
  std::optional<std::size_t> heading;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::heading_key(lines[i]) == "CHOSEN LEMMAS") heading = i;
  }
  if (!heading) return std::nullopt;

  std::vector<std::string> statements;
  std::optional<std::string> pending;
  auto finish = [&](std::string_view text) {
    const std::size_t assign = text.rfind(":=");
    if (assign == std::string_view::npos) return false;
    std::string stmt = lean::normalize_whitespace(text.substr(0, assign));
    if (!stmt.empty()) statements.push_back(std::move(stmt));
    return true;
  };
  for (std::size_t i = *heading + 1; i < lines.size(); ++i) {
    const std::string_view line = detail::strip_decoration(lines[i]);
    if (line.rfind("have", 0) == 0 && line.size() > 4 && lean::is_space(line[4])) {
      pending.reset();
      std::string_view rest = lean::trim(line.substr(4));
      if (rest.rfind("l_", 0) != 0) continue;
      std::size_t p = 2;
      while (p < rest.size() && std::isdigit(static_cast<unsigned char>(rest[p]))) ++p;
      if (p == 2) continue;
      rest = lean::trim(rest.substr(p));
      if (rest.empty() || rest.front() != ':' || rest.substr(0, 2) == ":=") continue;
      rest.remove_prefix(1);
      if (!finish(rest)) pending = std::string(rest);
    } else if (pending && !line.empty()) {
      *pending += " ";
      *pending += line;
      if (finish(*pending)) pending.reset();
    } else if (line.empty()) {
      pending.reset();
    }
  }
  return statements;
}

struct StepProofs {
  std::map<int, std::string> proofs;      // l_i -> Proof: body
  std::map<int, std::string> statements;  // l_i -> informal statement line(s)
  std::optional<std::string> final_proof;
};

/// Sections `l_<i>: ... Proof: ...` and `Final Proof:` after the STEPS heading.
inline StepProofs parse_step_proofs(std::string_view response) {
  const auto lines = lean::lines_of(response);
  std::size_t start = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::heading_key(lines[i]) == "STEPS") {
      start = i + 1;
      break;
    }
  }
  StepProofs out;
  enum class Part { none, statement, proof, final };
  Part part = Part::none;
  int current = -1;
  std::string buffer;
  auto flush = [&] {
    std::string text(lean::trim(buffer));
    if (part == Part::statement) out.statements[current] = text;
    if (part == Part::proof) out.proofs[current] = text;
    if (part == Part::final) out.final_proof = text;
    buffer.clear();
  };
  for (std::size_t i = start; i < lines.size(); ++i) {
    const std::string_view raw = lines[i];
    const std::string_view line = detail::strip_decoration(raw);
    const std::string key = detail::heading_key(raw);
    if (key.rfind("FINAL PROOF", 0) == 0) {
      flush();
      part = Part::final;
      const std::size_t colon = raw.find(':');
      if (colon != std::string_view::npos) buffer = std::string(detail::strip_decoration(raw.substr(colon + 1)));
      continue;
    }
    if (line.rfind("l_", 0) == 0) {
      std::size_t p = 2;
      while (p < line.size() && std::isdigit(static_cast<unsigned char>(line[p]))) ++p;
      std::string_view after = line.substr(p);
      while (!after.empty() && (after.front() == '*' || after.front() == ' ')) after.remove_prefix(1);
      if (p > 2 && !after.empty() && after.front() == ':' && part != Part::final) {
        flush();
        current = std::stoi(std::string(line.substr(2, p - 2)));
        part = Part::statement;
        after.remove_prefix(1);
        while (!after.empty() && (after.front() == '*' || after.front() == ' ')) after.remove_prefix(1);
        buffer = std::string(lean::trim(after));
        continue;
      }
    }
    if (part != Part::none && part != Part::final && key.rfind("PROOF", 0) == 0) {
      flush();
      part = Part::proof;
      const std::size_t colon = raw.find(':');
      if (colon != std::string_view::npos) buffer = std::string(detail::strip_decoration(raw.substr(colon + 1)));
      continue;
    }
    if (part != Part::none) {
      if (!buffer.empty()) buffer.push_back('\n');
      buffer.append(raw);
    }
  }
  flush();
  return out;
}

// ---------------------------------------------------------------------------
// procedures

/// Full natural-language proof from the reasoner. Whitespace-only answers
/// are asked once more, then reported as guidance-unavailable.
inline std::string generate_nl_proof(const GuidanceContext& ctx) {
  const std::string prompt = ctx.templates.render(
      PromptId::nl_proof, {{"formal_statement", ctx.task.formal_statement},
                           {"informal_statement", ctx.task.informal_statement}});
  for (int ask = 0; ask < 2; ++ask) {
    std::string text = detail::call_guidance(ctx, ctx.reasoner, guidance_task::nl_proof, {{"user", prompt}});
    if (!lean::trim(text).empty()) return text;
    ctx.note("nl_proof: empty response" + std::string(ask == 0 ? ", re-asking" : ""));
  }
  throw Error(ErrorCode::guidance_unavailable, "nl_proof: empty response after re-ask");
}

struct SummaryResult {
  std::string text;
  bool conforming_opener = true;
};

/// Summary from the worker, sanitized for embedding in a block comment.
/// A non-standard opening phrase is accepted with a warning.
inline SummaryResult summarize_nl_proof(const GuidanceContext& ctx, const std::string& nl_proof) {
  if (lean::trim(nl_proof).empty()) {
    throw Error(ErrorCode::precondition, "summary requested for an empty proof");
  }
  const std::string system = ctx.templates.render(PromptId::summarize_system, {});
  const std::string user = ctx.templates.render(
      PromptId::summarize_user, {{"formal_statement", ctx.task.formal_statement},
                                 {"informal_statement", ctx.task.informal_statement},
                                 {"nl_proof", nl_proof}});
  for (int ask = 0; ask < 2; ++ask) {
    const std::string text = detail::call_guidance(ctx, ctx.worker, guidance_task::summary,
                                                   {{"system", system}, {"user", user}});
    if (lean::trim(text).empty()) {
      ctx.note("summary: empty response" + std::string(ask == 0 ? ", re-asking" : ""));
      continue;
    }
    SummaryResult result{sanitize_for_comment(std::string(lean::trim(text))), true};
    if (!has_summary_opener(result.text)) {
      result.conforming_opener = false;
      ctx.note("summary: nonconforming opening phrase");
    }
    return result;
  }
  throw Error(ErrorCode::guidance_unavailable, "summary: empty response after re-ask");
}

inline std::string enumerate_pool(const std::vector<Lemma>& pool) {
  std::string out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i) out.push_back('\n');
    out += std::to_string(i) + ": " + pool[i].normalized_statement;
  }
  return out;
}

/// At most k lemmas chosen by the worker, matched back to the pool by
/// normalized statement and renamed l_0..l_{m-1}. Unparseable responses
/// are asked once more; after that the selection is empty.
inline LemmaSelection select_lemmas(const GuidanceContext& ctx, const std::string& nl_proof,
                                    const std::vector<Lemma>& valid_pool, std::size_t k) {
  if (valid_pool.empty() || k == 0) {
    throw Error(ErrorCode::precondition, "selection needs a non-empty pool and k >= 1");
  }
  const std::string system = ctx.templates.render(PromptId::select_system, {});
  const std::string user = ctx.templates.render(
      PromptId::select_user, {{"formal_statement", ctx.task.formal_statement},
                              {"informal_statement", ctx.task.informal_statement},
                              {"nl_proof", nl_proof},
                              {"lemmas", enumerate_pool(valid_pool)}});
  std::optional<std::vector<std::string>> chosen;
  for (int ask = 0; ask < 2 && !chosen; ++ask) {
    chosen = parse_chosen_lemmas(detail::call_guidance(ctx, ctx.worker, guidance_task::selection,
                                                       {{"system", system}, {"user", user}}));
    if (!chosen) ctx.note("selection: no CHOSEN LEMMAS section" + std::string(ask == 0 ? ", re-asking" : ""));
  }
  LemmaSelection selection;
  if (!chosen) return selection;

  std::unordered_map<std::string, std::size_t> by_statement;
  for (std::size_t i = 0; i < valid_pool.size(); ++i) {
    by_statement.emplace(valid_pool[i].normalized_statement, i);
  }
  std::vector<Lemma> picked;
  std::set<std::size_t> used;
  for (const auto& statement : *chosen) {
    auto it = by_statement.find(statement);
    if (it == by_statement.end()) {
      ctx.note("selection: dropped lemma not in pool: " + statement);
      continue;
    }
    if (!used.insert(it->second).second) continue;
    if (picked.size() == k) {
      ctx.note("selection: more than " + std::to_string(k) + " lemmas chosen, keeping the first");
      break;
    }
    picked.push_back(valid_pool[it->second]);
  }
  try {
    picked = lean::rename_binders(picked);
  } catch (const Error& e) {
    ctx.note(std::string("selection: ") + e.what());
    return selection;
  }
  for (std::size_t i = 0; i < picked.size(); ++i) {
    selection.items.push_back(SelectedLemma{static_cast<int>(i), std::move(picked[i]), {}});
  }
  return selection;
}

inline std::string enumerate_selection(const LemmaSelection& selection) {
  std::string out;
  for (const auto& item : selection.items) {
    if (!out.empty()) out.push_back('\n');
    out += "have " + lean::lemma_binder(static_cast<std::size_t>(item.index)) + " : " +
           item.lemma.normalized_statement;
  }
  return out;
}

/// Attaches an informal proof to every selected lemma and the main theorem.
/// Sections still missing after one re-ask fall back to the whole
/// natural-language proof and mark the selection degraded.
inline LemmaSelection generate_informal_lemma_proofs(const GuidanceContext& ctx, const std::string& nl_proof,
                                                     LemmaSelection selection) {
  if (selection.empty()) throw Error(ErrorCode::precondition, "no selected lemmas");
  const std::string system = ctx.templates.render(PromptId::lemma_proofs_system, {});
  const std::string user = ctx.templates.render(
      PromptId::lemma_proofs_user, {{"formal_statement", ctx.task.formal_statement},
                                    {"informal_statement", ctx.task.informal_statement},
                                    {"nl_proof", nl_proof},
                                    {"lemmas", enumerate_selection(selection)}});
  const int m = static_cast<int>(selection.size());
  auto complete = [m](const StepProofs& p) {
    for (int i = 0; i < m; ++i) {
      if (!p.proofs.count(i) || p.proofs.at(i).empty()) return false;
    }
    return p.final_proof && !p.final_proof->empty();
  };
  std::vector<StepProofs> parses;
  for (int ask = 0; ask < 2; ++ask) {
    parses.push_back(parse_step_proofs(detail::call_guidance(ctx, ctx.worker, guidance_task::lemma_proofs,
                                                             {{"system", system}, {"user", user}})));
    if (complete(parses.back())) break;
    ctx.note("lemma_proofs: missing sections" + std::string(ask == 0 ? ", re-asking" : ""));
  }
  auto lookup = [&](auto&& get) -> std::optional<std::string> {
    for (auto it = parses.rbegin(); it != parses.rend(); ++it) {
      if (auto v = get(*it); v && !v->empty()) return v;
    }
    return std::nullopt;
  };
  for (auto& item : selection.items) {
    auto proof = lookup([&](const StepProofs& p) -> std::optional<std::string> {
      auto it = p.proofs.find(item.index);
      return it == p.proofs.end() ? std::nullopt : std::optional<std::string>(it->second);
    });
    if (!proof) {
      selection.degraded = true;
      ctx.note("lemma_proofs: l_" + std::to_string(item.index) + " missing, using the full proof");
      proof = nl_proof;
    } else if (detail::mentions_lemma_name(*proof)) {
      ctx.note("lemma_proofs: proof of l_" + std::to_string(item.index) + " mentions a lemma name");
    }
    item.informal_proof = sanitize_for_comment(*proof);
  }
  auto main = lookup([](const StepProofs& p) { return p.final_proof; });
  if (!main) {
    selection.degraded = true;
    ctx.note("lemma_proofs: Final Proof missing, using the full proof");
    main = nl_proof;
  }
  selection.main_informal_proof = sanitize_for_comment(*main);
  return selection;
}

}  // namespace lemmaguide
