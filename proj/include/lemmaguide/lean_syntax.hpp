#pragma once

// Structural handling of Lean 4 proof text: `have` extraction, statement
// splitting, hypothesis injection and final-proof splicing. Lexical and
// indentation based; elaboration is left to the verifier.

#include <lemmaguide/errors.hpp>
#include <lemmaguide/lean_lexer.hpp>
#include <lemmaguide/task_model.hpp>

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lemmaguide::lean {

struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  int line = 0;    // 1-based, of `start`
  int column = 0;  // 0-based byte column
};

struct StatementSplit {
  std::string binder_segment;
  std::string goal_segment;
};

// ---------------------------------------------------------------------------
// text utilities

inline std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) {
      out.push_back(text.substr(begin));
      break;
    }
    out.push_back(text.substr(begin, end - begin));
    begin = end + 1;
  }
  return out;
}

inline std::size_t leading_spaces(std::string_view line) {
  std::size_t n = 0;
  while (n < line.size() && (line[n] == ' ' || line[n] == '\t')) ++n;
  return n;
}

inline bool blank_line(std::string_view line) { return trim(line).empty(); }

inline std::string_view rtrim(std::string_view s) {
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

/// Removes the common leading indentation of the non-blank lines, drops
/// leading/trailing blank lines and trailing spaces.
inline std::string dedent(std::string_view text) {
  auto lines = lines_of(text);
  while (!lines.empty() && blank_line(lines.front())) lines.erase(lines.begin());
  while (!lines.empty() && blank_line(lines.back())) lines.pop_back();
  std::size_t common = std::numeric_limits<std::size_t>::max();
  for (auto line : lines) {
    if (!blank_line(line)) common = std::min(common, leading_spaces(line));
  }
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    if (!blank_line(lines[i])) out.append(rtrim(lines[i].substr(common)));
  }
  return out;
}

/// Dedents, then prefixes every non-blank line with `width` spaces.
inline std::string indent(std::string_view text, std::size_t width) {
  const std::string body = dedent(text);
  const std::string pad(width, ' ');
  std::string out;
  for (auto line : lines_of(body)) {
    if (!blank_line(line)) {
      out += pad;
      out.append(line);
    }
    out.push_back('\n');
  }
  if (!out.empty()) out.pop_back();
  return out;
}

inline std::string with_preamble(std::string_view preamble, std::string_view body) {
  std::string out(preamble);
  if (!out.empty() && out.back() != '\n') out.push_back('\n');
  out.append(body);
  return out;
}

// ---------------------------------------------------------------------------
// have extraction

struct ExtractionResult {
  std::vector<Lemma> lemmas;
  std::vector<SourceSpan> spans;  // one per lemma, covering `have` .. end of proof
  int skipped = 0;                // `have` tokens that did not parse as `have x : P := proof`
};

namespace detail {

inline std::size_t skip_blanks(std::string_view code, std::size_t pos) {
  while (pos < code.size() && is_space(code[pos])) ++pos;
  return pos;
}

inline std::size_t line_index(const std::vector<Line>& lines, std::size_t offset) {
  auto it = std::upper_bound(lines.begin(), lines.end(), offset,
                             [](std::size_t off, const Line& l) { return off < l.begin; });
  return static_cast<std::size_t>(std::distance(lines.begin(), it)) - 1;
}

/// Composes the proof text from the remainder of the `:=` line and the
/// deeper lines following it. Continuation lines keep their layout relative
/// to each other; when the first line carries content they are shifted two
/// columns right of it so they stay continuation lines after re-indentation.
inline std::string compose_block(std::string_view first, std::string_view rest) {
  const std::string head(trim(first));
  const std::string tail = dedent(rest);
  if (tail.empty()) return head;
  if (head.empty()) return tail;
  std::string out = head;
  for (auto line : lines_of(tail)) {
    out.push_back('\n');
    if (!blank_line(line)) {
      out += "  ";
      out.append(line);
    }
  }
  return out;
}

inline std::string term_as_tactic(const std::string& term) {
  auto lines = lines_of(term);
  std::string out = "exact " + std::string(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    out.push_back('\n');
    if (!blank_line(lines[i])) {
      out += "  ";
      out.append(lines[i]);
    }
  }
  return out;
}

}  // namespace detail

/// Every `have <name> : <stmt> := <proof>` in source order, nested ones
/// included. Haves inside comments and string literals are ignored.
/// Term proofs are returned as `exact <term>` so proof_text is always a
/// tactic block.
inline ExtractionResult extract_haves(std::string_view text, int attempt_index = 0) {
  ExtractionResult result;
  const std::string masked = mask_non_code(text);
  const std::vector<Line> lines = split_lines(masked);
  const std::string_view code = masked;
  int anonymous = 0;

  for (auto hit = find_token(code, "have"); hit; hit = find_token(code, "have", *hit + 4)) {
    const std::size_t have_pos = *hit;
    const std::size_t have_line = detail::line_index(lines, have_pos);
    const std::size_t base_indent = lines[have_line].indent;

    std::size_t p = detail::skip_blanks(code, have_pos + 4);
    std::string binder;
    bool pattern = false;
    if (p < code.size() && code[p] == ':' && !(p + 1 < code.size() && code[p + 1] == '=')) {
      binder = "anon_" + std::to_string(anonymous++);
    } else if (p < code.size() && decode_utf8(code, p).value == U'⟨') {
      int depth = 0;
      std::size_t q = p;
      do {
        const CodePoint cp = decode_utf8(code, q);
        if (is_open_bracket(cp.value)) ++depth;
        if (is_close_bracket(cp.value)) --depth;
        q += cp.length;
      } while (q < code.size() && depth > 0);
      if (depth != 0) {
        ++result.skipped;
        continue;
      }
      binder = normalize_whitespace(text.substr(p, q - p));
      pattern = true;
      p = detail::skip_blanks(code, q);
    } else if (const std::size_t len = identifier_length(code, p); len > 0) {
      binder = std::string(text.substr(p, len));
      p = detail::skip_blanks(code, p + len);
    } else {
      ++result.skipped;
      continue;
    }
    if (p >= code.size() || code[p] != ':' || (p + 1 < code.size() && code[p + 1] == '=')) {
      ++result.skipped;
      continue;
    }
    const std::size_t stmt_begin = p + 1;

    // statement runs to the first `:=` at depth 0
    int depth = 0;
    std::size_t q = stmt_begin;
    std::optional<std::size_t> assign;
    bool malformed = false;
    while (q < code.size()) {
      const CodePoint cp = decode_utf8(code, q);
      if (cp.value == '\n') {
        const std::size_t next = detail::line_index(lines, q + 1);
        if (depth == 0 && next < lines.size() && !lines[next].blank &&
            lines[next].indent <= base_indent) {
          malformed = true;
          break;
        }
      } else if (is_open_bracket(cp.value)) {
        ++depth;
      } else if (is_close_bracket(cp.value)) {
        if (--depth < 0) {
          malformed = true;
          break;
        }
      } else if (cp.value == ':' && depth == 0 && q + 1 < code.size() && code[q + 1] == '=') {
        assign = q;
        break;
      }
      q += cp.length;
    }
    if (malformed || !assign) {
      ++result.skipped;
      continue;
    }
    const std::string statement(trim(text.substr(stmt_begin, *assign - stmt_begin)));
    if (statement.empty()) {
      ++result.skipped;
      continue;
    }

    // proof: rest of the `:=` line plus every following line that is blank,
    // deeper than the `have` line, or inside an open bracket.
    const std::size_t proof_begin = *assign + 2;
    const std::size_t assign_line = detail::line_index(lines, *assign);
    std::size_t first_end = lines[assign_line].end;
    depth = 0;
    std::size_t r = proof_begin;
    bool closed_enclosing = false;
    while (r < first_end) {
      const CodePoint cp = decode_utf8(code, r);
      if (is_open_bracket(cp.value)) ++depth;
      if (is_close_bracket(cp.value) && --depth < 0) {
        closed_enclosing = true;
        break;
      }
      r += cp.length;
    }
    std::size_t region_end = r;
    std::size_t rest_begin = region_end;
    std::size_t rest_end = region_end;
    if (!closed_enclosing) {
      std::size_t li = assign_line + 1;
      std::size_t last_code_end = region_end;
      rest_begin = (li < lines.size()) ? lines[li].begin : region_end;
      for (; li < lines.size(); ++li) {
        const Line& line = lines[li];
        if (!line.blank && line.indent <= base_indent && depth <= 0) break;
        std::size_t s = line.begin;
        bool stop = false;
        while (s < line.end) {
          const CodePoint cp = decode_utf8(code, s);
          if (is_open_bracket(cp.value)) ++depth;
          if (is_close_bracket(cp.value) && --depth < 0) {
            stop = true;
            break;
          }
          s += cp.length;
        }
        if (!line.blank) last_code_end = stop ? s : line.end;
        if (stop) break;
      }
      rest_end = std::max(rest_begin, last_code_end);
      region_end = std::max(region_end, last_code_end);
      if (rest_end <= rest_begin) rest_end = rest_begin;
    }

    const std::string_view first_part = text.substr(proof_begin, r - proof_begin);
    const std::string_view rest_part =
        rest_end > rest_begin ? text.substr(rest_begin, rest_end - rest_begin) : std::string_view{};
    const std::string_view first_code = code.substr(proof_begin, r - proof_begin);

    std::optional<std::string> proof;
    const std::size_t lead = detail::skip_blanks(first_code, 0);
    const bool tactic_on_first = lead < first_code.size() && first_code.substr(lead, 2) == "by" &&
                                 !ident_after(first_code, lead + 2);
    bool tactic_on_next = false;
    std::size_t rest_lead = 0;
    if (lead >= first_code.size() && !rest_part.empty()) {
      const std::string_view rest_code = code.substr(rest_begin, rest_end - rest_begin);
      rest_lead = detail::skip_blanks(rest_code, 0);
      tactic_on_next = rest_code.substr(rest_lead, 2) == "by" && !ident_after(rest_code, rest_lead + 2);
    }
    std::string body;
    if (tactic_on_first) {
      body = detail::compose_block(first_part.substr(lead + 2), rest_part);
    } else if (tactic_on_next) {
      // `:=` ends the line and the next line opens with `by`
      const std::size_t by_abs = rest_begin + rest_lead;
      const std::size_t by_line_end = lines[detail::line_index(lines, by_abs)].end;
      const std::size_t after_line = std::min(by_line_end + 1, rest_end);
      body = detail::compose_block(
          text.substr(by_abs + 2, by_line_end - (by_abs + 2)),
          after_line < rest_end ? text.substr(after_line, rest_end - after_line) : std::string_view{});
    } else {
      const std::string term = detail::compose_block(first_part, rest_part);
      if (!term.empty()) body = detail::term_as_tactic(term);
    }
    if (!body.empty()) proof = body;

    Lemma lemma = make_lemma(binder, statement, proof);
    lemma.pattern_binder = pattern;
    lemma.source_attempts.insert(attempt_index);
    result.lemmas.push_back(std::move(lemma));
    result.spans.push_back(SourceSpan{have_pos, region_end, static_cast<int>(have_line) + 1,
                                      static_cast<int>(have_pos - lines[have_line].begin)});
  }
  return result;
}

inline std::vector<Lemma> extract_have_statements(std::string_view proof_text, int attempt_index = 0) {
  return extract_haves(proof_text, attempt_index).lemmas;
}

/// Merges lemmas with equal normalized statements, keeping first-seen order,
/// the union of source attempts and every distinct candidate proof.
inline std::vector<Lemma> dedupe_pool(const std::vector<Lemma>& lemmas) {
  std::vector<Lemma> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const Lemma& lemma : lemmas) {
    auto [it, inserted] = index.emplace(lemma.normalized_statement, out.size());
    if (inserted) {
      out.push_back(lemma);
      continue;
    }
    Lemma& merged = out[it->second];
    merged.source_attempts.insert(lemma.source_attempts.begin(), lemma.source_attempts.end());
    for (const auto& proof : lemma.candidate_proofs) {
      if (std::find(merged.candidate_proofs.begin(), merged.candidate_proofs.end(), proof) ==
          merged.candidate_proofs.end()) {
        merged.candidate_proofs.push_back(proof);
      }
    }
    if (!merged.proof_text && lemma.proof_text) merged.proof_text = lemma.proof_text;
  }
  return out;
}

// ---------------------------------------------------------------------------
// tokens

/// `sorry` as a standalone code token (comments and strings excluded).
inline bool contains_sorry(std::string_view text) {
  return find_token(mask_non_code(text), "sorry").has_value();
}

inline bool is_lemma_binder_name(std::string_view name) {
  if (name.size() < 3 || name.substr(0, 2) != "l_") return false;
  return std::all_of(name.begin() + 2, name.end(), [](char c) { return c >= '0' && c <= '9'; });
}

inline std::string lemma_binder(std::size_t i) { return "l_" + std::to_string(i); }

/// Renames binders to l_0 .. l_{m-1} in order and rewrites references to an
/// earlier lemma's old name inside later statements.
inline std::vector<Lemma> rename_binders(const std::vector<Lemma>& selection) {
  std::vector<Lemma> out = selection;
  for (std::size_t i = 0; i < selection.size(); ++i) {
    const std::string& original = selection[i].statement_text;
    const std::string masked = mask_non_code(original);
    std::string rewritten;
    std::size_t copied = 0;
    std::size_t pos = 0;
    while (pos < masked.size()) {
      const std::size_t len = ident_before(masked, pos) ? 0 : identifier_length(masked, pos);
      if (len == 0) {
        pos += decode_utf8(masked, pos).length;
        continue;
      }
      const std::string_view ident = std::string_view(masked).substr(pos, len);
      const std::string_view head = ident.substr(0, ident.find('.'));
      std::optional<std::size_t> target;
      for (std::size_t j = i; j-- > 0;) {
        if (selection[j].binder_name == head && head != "this") {
          target = j;
          break;
        }
      }
      if (target) {
        rewritten.append(original, copied, pos - copied);
        rewritten += lemma_binder(*target);
        copied = pos + head.size();
      } else if (is_lemma_binder_name(head)) {
        throw Error(ErrorCode::binder_collision,
                    "statement " + std::to_string(i) + " already uses `" + std::string(head) + "`");
      }
      pos += len;
    }
    rewritten.append(original, copied, std::string::npos);
    out[i].binder_name = lemma_binder(i);
    out[i].normalized_statement = normalize_whitespace(rewritten);
    out[i].statement_text = std::move(rewritten);
  }
  return out;
}

// ---------------------------------------------------------------------------
// statements

namespace detail {

struct DeclarationHead {
  std::size_t keyword = 0;
  std::size_t keyword_len = 0;
  std::size_t name_begin = 0;  // == name_end for `example`
  std::size_t name_end = 0;
};

inline std::optional<DeclarationHead> find_declaration(std::string_view masked) {
  std::optional<std::size_t> best;
  std::size_t best_len = 0;
  for (std::string_view kw : {"theorem", "lemma", "example"}) {
    if (auto pos = find_token(masked, kw); pos && (!best || *pos < *best)) {
      best = pos;
      best_len = kw.size();
    }
  }
  if (!best) return std::nullopt;
  DeclarationHead head{*best, best_len, *best + best_len, *best + best_len};
  if (masked.substr(*best, best_len) != "example") {
    const std::size_t p = skip_blanks(masked, *best + best_len);
    const std::size_t len = identifier_length(masked, p);
    head.name_begin = p;
    head.name_end = p + len;
  }
  return head;
}

}  // namespace detail

/// Splits a theorem header at the top-level colon that separates the
/// binders from the goal. Binders in a declaration header are always
/// bracketed, so the first colon at depth 0 after the name is the split;
/// colons of `∀ x : T` in the goal are never mistaken for it.
inline StatementSplit split_statement(std::string_view formal_statement) {
  const std::string masked = mask_non_code(formal_statement);
  const auto head = detail::find_declaration(masked);
  std::size_t p = head ? head->name_end : 0;
  int depth = 0;
  while (p < masked.size()) {
    const CodePoint cp = decode_utf8(masked, p);
    if (is_open_bracket(cp.value)) ++depth;
    if (is_close_bracket(cp.value)) --depth;
    if (cp.value == ':' && depth == 0) {
      const bool assign = p + 1 < masked.size() && masked[p + 1] == '=';
      const bool cons = (p + 1 < masked.size() && masked[p + 1] == ':') || (p > 0 && masked[p - 1] == ':');
      if (!assign && !cons) {
        return StatementSplit{std::string(trim(formal_statement.substr(0, p))),
                              std::string(trim(formal_statement.substr(p + 1)))};
      }
    }
    p += cp.length;
  }
  throw Error(ErrorCode::no_top_level_colon, std::string(formal_statement));
}

/// Lean-safe form of a task name for derived declarations.
inline std::string sanitize_name(std::string_view name) {
  std::string out;
  for (std::size_t i = 0; i < name.size();) {
    const CodePoint cp = decode_utf8(name, i);
    if (is_ident_rest(cp.value) && cp.value != '!' && cp.value != '?') {
      out.append(name.substr(i, cp.length));
    } else {
      out.push_back('_');
    }
    i += cp.length;
  }
  if (out.empty() || !is_ident_start(decode_utf8(out, 0).value)) out.insert(0, "t_");
  return out;
}

/// Binder segment with its declaration renamed to `theorem <new_name>`.
inline std::string rename_declaration(std::string_view binder_segment, std::string_view new_name) {
  const std::string masked = mask_non_code(binder_segment);
  const auto head = detail::find_declaration(masked);
  if (!head) return "theorem " + std::string(new_name) + " " + std::string(binder_segment);
  std::string out(binder_segment.substr(0, head->keyword));
  out += "theorem ";
  out += new_name;
  out.append(binder_segment.substr(head->name_end));
  return out;
}

/// `theorem <name> <global binders> (extra...) : <goal>` without preamble or body.
inline std::string build_theorem_header(const TheoremTask& task, std::string_view name,
                                        const std::vector<std::pair<std::string, std::string>>& extra,
                                        std::string_view goal) {
  const StatementSplit split = split_statement(task.formal_statement);
  std::string out = rename_declaration(split.binder_segment, name);
  for (const auto& [binder, statement] : extra) {
    out += " (" + binder + " : " + statement + ")";
  }
  out += " : ";
  out += goal;
  return out;
}

inline std::string lemma_theorem_name(const TheoremTask& task, std::size_t i) {
  return sanitize_name(task.name) + "_lemma_" + std::to_string(i);
}

inline std::string main_theorem_name(const TheoremTask& task) {
  return sanitize_name(task.name) + "_main";
}

/// Lemma i as a standalone theorem: global binders plus l_0..l_{i-1} as
/// hypotheses, goal = statement of l_i.
inline std::string build_lemma_theorem(const TheoremTask& task, const LemmaSelection& selection,
                                       std::size_t i) {
  if (i >= selection.size()) {
    throw Error(ErrorCode::precondition, "lemma index " + std::to_string(i) + " out of range");
  }
  std::vector<std::pair<std::string, std::string>> hyps;
  for (std::size_t j = 0; j < i; ++j) {
    hyps.emplace_back(lemma_binder(j), selection.items[j].lemma.normalized_statement);
  }
  return with_preamble(task.preamble,
                       build_theorem_header(task, lemma_theorem_name(task, i), hyps,
                                            selection.items[i].lemma.normalized_statement));
}

/// The original theorem with every selected lemma appended as a hypothesis.
inline std::string build_main_theorem(const TheoremTask& task, const LemmaSelection& selection) {
  if (selection.empty()) {
    throw Error(ErrorCode::precondition, "main theorem needs at least one selected lemma");
  }
  const StatementSplit split = split_statement(task.formal_statement);
  std::vector<std::pair<std::string, std::string>> hyps;
  for (std::size_t j = 0; j < selection.size(); ++j) {
    hyps.emplace_back(lemma_binder(j), selection.items[j].lemma.normalized_statement);
  }
  return with_preamble(task.preamble,
                       build_theorem_header(task, main_theorem_name(task), hyps, split.goal_segment));
}

/// `<header> := by` followed by the body indented one level.
inline std::string attach_proof(std::string_view header_with_preamble, std::string_view body) {
  std::string out(header_with_preamble);
  out += " := by\n";
  out += indent(body, 2);
  out += "\n";
  return out;
}

/// Lean source for the prover: the statement opened with `:= by` and, when
/// a summary is given, the summary as a block comment the prover continues from.
inline std::string embed_summary(std::string_view formal_statement, std::string_view preamble,
                                 std::optional<std::string_view> summary) {
  std::string body(formal_statement);
  body += " := by\n";
  if (summary) {
    if (summary->find("-/") != std::string_view::npos || summary->find("/-") != std::string_view::npos) {
      throw Error(ErrorCode::embedding_unsafe, "summary contains a comment delimiter");
    }
    body += "  /- ";
    body += *summary;
    body += " -/\n";
  }
  return with_preamble(preamble, body);
}

/// Complete proof: one `have l_i : stmt := by <proof_i>` per selected lemma,
/// then the main body.
inline std::string splice_final_proof(const TheoremTask& task, const LemmaSelection& selection,
                                      const ProvenSet& proven, std::string_view main_proof_body) {
  if (trim(main_proof_body).empty()) {
    throw Error(ErrorCode::precondition, "main proof body is empty");
  }
  std::string body(task.formal_statement);
  body += " := by\n";
  for (std::size_t i = 0; i < selection.size(); ++i) {
    if (!proven.contains(static_cast<int>(i))) {
      throw Error(ErrorCode::missing_lemma_proof, "no verified proof for " + lemma_binder(i));
    }
    body += "  have " + lemma_binder(i) + " : " + selection.items[i].lemma.normalized_statement +
            " := by\n";
    body += indent(proven.at(static_cast<int>(i)).proof_text, 4);
    body += "\n";
  }
  body += indent(main_proof_body, 2);
  body += "\n";
  return with_preamble(task.preamble, body);
}

// ---------------------------------------------------------------------------
// prover output

/// Tactic body out of a prover completion. Handles plain continuations
/// (text up to the closing fence) and completions that restate the whole
/// declaration inside a code fence.
inline std::string extract_proof_body(std::string_view completion) {
  std::string_view content = completion;
  const std::size_t fence = content.find("```");
  if (fence != std::string_view::npos) {
    const bool opens_block = trim(content.substr(0, fence)).empty();
    if (opens_block) {
      std::size_t start = content.find('\n', fence);
      start = (start == std::string_view::npos) ? content.size() : start + 1;
      const std::size_t close = content.find("```", start);
      content = content.substr(start, close == std::string_view::npos ? std::string_view::npos
                                                                       : close - start);
    } else {
      content = content.substr(0, fence);
    }
  }
  const std::string masked = mask_non_code(content);
  if (auto head = detail::find_declaration(masked)) {
    int depth = 0;
    for (std::size_t p = head->name_end; p < masked.size();) {
      const CodePoint cp = decode_utf8(masked, p);
      if (is_open_bracket(cp.value)) ++depth;
      if (is_close_bracket(cp.value)) --depth;
      if (depth == 0 && cp.value == ':' && p + 1 < masked.size() && masked[p + 1] == '=') {
        std::size_t q = detail::skip_blanks(masked, p + 2);
        if (masked.compare(q, 2, "by") == 0 && !ident_after(masked, q + 2)) q += 2;
        content = content.substr(q);
        break;
      }
      p += cp.length;
    }
  }
  // first line may sit right after `by` on the same line
  auto lines = lines_of(content);
  if (!lines.empty() && !blank_line(lines.front()) && lines.size() > 1) {
    std::size_t common = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (!blank_line(lines[i])) common = std::min(common, leading_spaces(lines[i]));
    }
    if (leading_spaces(lines.front()) == 0 && common != std::numeric_limits<std::size_t>::max() &&
        common > 0) {
      std::string rebuilt(common, ' ');
      rebuilt.append(content);
      return dedent(rebuilt);
    }
  }
  return dedent(content);
}

}  // namespace lemmaguide::lean
