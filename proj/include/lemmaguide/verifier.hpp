#pragma once

// Lean verification: the REPL session client, outcome classification and
// the two derived checks used by lemma processing (statement syntax and
// salvaged proofs).

#include <lemmaguide/errors.hpp>
#include <lemmaguide/lean_syntax.hpp>
#include <lemmaguide/process.hpp>
#include <lemmaguide/task_model.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lemmaguide {

/// What one elaboration request produced, before classification.
struct ReplResponse {
  enum class Kind { completed, timeout, transport_error };
  Kind kind = Kind::completed;
  std::vector<Message> messages;
  int sorries = 0;
  std::optional<int> env;
  double elapsed = 0.0;
  std::string error;
};

/// Something that can elaborate a complete Lean source unit.
class LeanChecker {
 public:
  virtual ~LeanChecker() = default;
  virtual ReplResponse elaborate(std::string_view source, double timeout_s) = 0;
};

inline Severity severity_from(std::string_view s) {
  if (s == "error") return Severity::error;
  if (s == "warning") return Severity::warning;
  return Severity::info;
}

/// Parses one REPL JSON response. Unknown fields are ignored; a response
/// carrying only a top-level `message` is a protocol-level failure.
inline ReplResponse parse_repl_response(const nlohmann::json& j) {
  ReplResponse r;
  if (!j.is_object()) {
    r.kind = ReplResponse::Kind::transport_error;
    r.error = "response is not an object";
    return r;
  }
  if (j.contains("message") && !j.contains("messages") && !j.contains("env")) {
    r.kind = ReplResponse::Kind::transport_error;
    r.error = j["message"].is_string() ? j["message"].get<std::string>() : j["message"].dump();
    return r;
  }
  if (auto it = j.find("messages"); it != j.end() && it->is_array()) {
    for (const auto& m : *it) {
      Message msg;
      msg.severity = severity_from(m.value("severity", std::string("error")));
      if (auto pos = m.find("pos"); pos != m.end() && pos->is_object()) {
        msg.pos.line = pos->value("line", 0);
        msg.pos.column = pos->value("column", 0);
      }
      msg.text = m.value("data", std::string());
      r.messages.push_back(std::move(msg));
    }
  }
  if (auto it = j.find("sorries"); it != j.end() && it->is_array()) {
    r.sorries = static_cast<int>(it->size());
  }
  if (auto it = j.find("env"); it != j.end() && it->is_number_integer()) r.env = it->get<int>();
  return r;
}

/// Success criterion: no error-severity message, no sorry anywhere, within time.
inline VerificationResult classify(std::string_view source, const ReplResponse& response,
                                   double timeout_s) {
  VerificationResult v;
  v.messages = response.messages;
  v.elapsed = response.elapsed;
  switch (response.kind) {
    case ReplResponse::Kind::timeout:
      v.status = VerificationStatus::timeout;
      v.elapsed = std::max(v.elapsed, timeout_s);
      v.contains_sorry = lean::contains_sorry(source);
      return v;
    case ReplResponse::Kind::transport_error:
      v.status = VerificationStatus::transport_error;
      v.messages.push_back(Message{Severity::error, {}, response.error});
      v.contains_sorry = lean::contains_sorry(source);
      return v;
    case ReplResponse::Kind::completed:
      break;
  }
  bool sorry_warning = false;
  for (const auto& m : v.messages) {
    if (m.text.find("declaration uses 'sorry'") != std::string::npos) sorry_warning = true;
  }
  v.contains_sorry = response.sorries > 0 || sorry_warning || lean::contains_sorry(source);
  v.status = (!v.has_errors() && !v.contains_sorry) ? VerificationStatus::proved
                                                    : VerificationStatus::failed;
  return v;
}

/// Elaborates and classifies; a transport failure is retried once.
inline VerificationResult check_proof(LeanChecker& checker, std::string_view source, double timeout_s) {
  ReplResponse response = checker.elaborate(source, timeout_s);
  if (response.kind == ReplResponse::Kind::transport_error) {
    response = checker.elaborate(source, timeout_s);
  }
  return classify(source, response, timeout_s);
}

/// `theorem <task>_syntax_check <globals> : <stmt> := by sorry`.
inline std::string syntax_check_source(const TheoremTask& task, const Lemma& lemma) {
  const std::string header = lean::build_theorem_header(
      task, lean::sanitize_name(task.name) + "_syntax_check", {}, lemma.normalized_statement);
  return lean::with_preamble(task.preamble, header + " := by sorry\n");
}

/// The lemma as a standalone theorem over the global binders only.
inline std::string salvage_source(const TheoremTask& task, const Lemma& lemma,
                                  std::string_view candidate_proof) {
  const std::string header = lean::build_theorem_header(
      task, lean::sanitize_name(task.name) + "_salvage", {}, lemma.normalized_statement);
  return lean::attach_proof(lean::with_preamble(task.preamble, header), candidate_proof);
}

/// Valid iff the sorry-stubbed statement elaborates with no error messages.
/// Throws Error(transport_error) when the checker cannot answer twice in a row.
inline SyntaxValidity check_lemma_syntax(LeanChecker& checker, const TheoremTask& task, Lemma& lemma,
                                         double timeout_s) {
  const std::string source = syntax_check_source(task, lemma);
  ReplResponse response = checker.elaborate(source, timeout_s);
  if (response.kind == ReplResponse::Kind::transport_error) {
    response = checker.elaborate(source, timeout_s);
  }
  if (response.kind == ReplResponse::Kind::transport_error) {
    throw Error(ErrorCode::transport_error, response.error);
  }
  bool errors = response.kind != ReplResponse::Kind::completed;
  for (const auto& m : response.messages) {
    if (m.severity == Severity::error) errors = true;
  }
  lemma.syntax_valid = errors ? SyntaxValidity::invalid : SyntaxValidity::valid;
  return lemma.syntax_valid;
}

inline VerificationResult check_salvaged_proof(LeanChecker& checker, const TheoremTask& task,
                                               const Lemma& lemma, std::string_view candidate_proof,
                                               double timeout_s) {
  if (lean::trim(candidate_proof).empty()) {
    VerificationResult v;
    v.messages.push_back(Message{Severity::error, {}, "empty proof"});
    return v;
  }
  return check_proof(checker, salvage_source(task, lemma, candidate_proof), timeout_s);
}

// ---------------------------------------------------------------------------
// Lean REPL over a child process

struct ReplConfig {
  std::vector<std::string> command{"lake", "exe", "repl"};
  std::string working_dir;
  std::string preamble;
  double preamble_timeout_s = 600.0;
  /// Extra wall time allowed for kill/respawn beyond the verification timeout.
  double grace_s = 2.0;
  bool record_transcript = false;
};

/// One REPL process bound to one preamble. The preamble is elaborated once
/// and its environment reused; calls are serialized by an internal mutex.
/// A timeout or protocol failure kills the process; the next call respawns.
class ReplSession : public LeanChecker {
 public:
  explicit ReplSession(ReplConfig config) : config_(std::move(config)) {}

  ReplResponse elaborate(std::string_view source, double timeout_s) override {
    std::lock_guard lock(mutex_);
    const auto start = std::chrono::steady_clock::now();
    ReplResponse response;
    if (!ensure_started()) {
      response.kind = ReplResponse::Kind::transport_error;
      response.error = "REPL failed to start: " + start_error_;
      response.elapsed = seconds_since(start);
      return response;
    }
    // sources carrying a different preamble are elaborated from scratch
    std::string_view body = source;
    const bool reuse = body.substr(0, config_.preamble.size()) == config_.preamble;
    if (reuse) body.remove_prefix(config_.preamble.size());
    nlohmann::json request{{"cmd", std::string(body)}};
    if (reuse && env_) request["env"] = *env_;
    if (config_.record_transcript) transcript_.push_back(std::string(body));
    response = exchange(request, timeout_s);
    response.elapsed = seconds_since(start);
    return response;
  }

  bool healthy() const {
    std::lock_guard lock(mutex_);
    return process_.running();
  }

  int spawn_count() const {
    std::lock_guard lock(mutex_);
    return spawns_;
  }

  std::vector<std::string> transcript() const {
    std::lock_guard lock(mutex_);
    return transcript_;
  }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  bool ensure_started() {
    if (process_.running()) return true;
    try {
      process_ = ChildProcess::spawn(config_.command, config_.working_dir);
    } catch (const std::exception& e) {
      start_error_ = e.what();
      return false;
    }
    ++spawns_;
    buffer_.clear();
    env_.reset();
    if (!config_.preamble.empty()) {
      ReplResponse r = exchange(nlohmann::json{{"cmd", config_.preamble}}, config_.preamble_timeout_s);
      if (r.kind != ReplResponse::Kind::completed || !r.env) {
        start_error_ = r.kind == ReplResponse::Kind::completed ? "preamble produced no env" : r.error;
        process_.kill();
        return false;
      }
      env_ = r.env;
    }
    return true;
  }

  ReplResponse exchange(const nlohmann::json& request, double timeout_s) {
    ReplResponse failure;
    failure.kind = ReplResponse::Kind::transport_error;
    if (!process_.write_all(request.dump() + "\n\n")) {
      process_.kill();
      failure.error = "write to REPL failed";
      return failure;
    }
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(timeout_s));
    while (true) {
      // a response is a JSON value terminated by a blank line; other
      // blank-line separated chunks are noise and dropped
      for (std::size_t sep = buffer_.find("\n\n"); sep != std::string::npos; sep = buffer_.find("\n\n")) {
        auto parsed = nlohmann::json::parse(buffer_.substr(0, sep), nullptr, false);
        buffer_.erase(0, sep + 2);
        if (!parsed.is_discarded()) return parse_repl_response(parsed);
      }
      switch (process_.read_some(buffer_, deadline)) {
        case ChildProcess::ReadStatus::data:
          break;
        case ChildProcess::ReadStatus::timeout: {
          process_.kill();
          ReplResponse timeout;
          timeout.kind = ReplResponse::Kind::timeout;
          timeout.error = "verification timed out";
          return timeout;
        }
        case ChildProcess::ReadStatus::eof:
        case ChildProcess::ReadStatus::error: {
          // a final response may lack the trailing blank line
          auto parsed = nlohmann::json::parse(buffer_, nullptr, false);
          process_.kill();
          if (!parsed.is_discarded() && !lean::trim(buffer_).empty()) {
            buffer_.clear();
            return parse_repl_response(parsed);
          }
          failure.error = "REPL exited";
          return failure;
        }
      }
    }
  }

  ReplConfig config_;
  mutable std::mutex mutex_;
  ChildProcess process_;
  std::string buffer_;
  std::optional<int> env_;
  std::string start_error_;
  int spawns_ = 0;
  std::vector<std::string> transcript_;
};

// ---------------------------------------------------------------------------
// deterministic stand-in used by mock runs and tests

/// Lexical approximation of Lean: rejects unbalanced delimiters, a `fail`
/// tactic token, a binary operator dangling before `:=`, and empty `by`
/// blocks; reports `sorry` the way Lean does. Elapsed time is simulated.
class LexicalChecker : public LeanChecker {
 public:
  using Rule = std::function<std::vector<Message>(std::string_view source)>;

  explicit LexicalChecker(double simulated_seconds = 0.0, Rule extra = {})
      : simulated_seconds_(simulated_seconds), extra_(std::move(extra)) {}

  ReplResponse elaborate(std::string_view source, double) override {
    ReplResponse r;
    r.elapsed = simulated_seconds_;
    const std::string masked = lean::mask_non_code(source);
    if (!lean::delimiters_balanced(source)) {
      r.messages.push_back(Message{Severity::error, {1, 0}, "unexpected token; unbalanced delimiters"});
    }
    if (lean::find_token(masked, "fail")) {
      r.messages.push_back(Message{Severity::error, {1, 0}, "tactic 'fail' failed"});
    }
    for (auto pos = masked.find(":="); pos != std::string::npos; pos = masked.find(":=", pos + 2)) {
      const std::string_view before = lean::rtrim(std::string_view(masked).substr(0, pos));
      if (!before.empty() && std::string_view("+-*/^<>=,").find(before.back()) != std::string_view::npos &&
          !(before.size() >= 2 && before.substr(before.size() - 2) == "=>")) {
        r.messages.push_back(Message{Severity::error, {1, 0}, "unexpected token ':='; expected term"});
      }
      const std::string_view after = lean::trim(std::string_view(masked).substr(pos + 2));
      if (after == "by") {
        r.messages.push_back(Message{Severity::error, {1, 0}, "unsolved goals"});
      }
    }
    if (lean::find_token(masked, "sorry")) {
      r.sorries = 1;
      r.messages.push_back(Message{Severity::warning, {1, 0}, "declaration uses 'sorry'"});
    }
    if (extra_) {
      for (auto& m : extra_(source)) r.messages.push_back(std::move(m));
    }
    return r;
  }

 private:
  double simulated_seconds_;
  Rule extra_;
};

// ---------------------------------------------------------------------------
// session pool

/// Fixed set of checkers leased exclusively, one per running pipeline.
class SessionPool {
 public:
  explicit SessionPool(std::vector<std::unique_ptr<LeanChecker>> sessions)
      : sessions_(std::move(sessions)) {
    for (std::size_t i = 0; i < sessions_.size(); ++i) free_.push_back(i);
  }

  class Lease {
   public:
    Lease(SessionPool& pool, std::size_t index) : pool_(&pool), index_(index) {}
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    Lease(Lease&& other) noexcept : pool_(std::exchange(other.pool_, nullptr)), index_(other.index_) {}
    ~Lease() {
      if (pool_) pool_->release(index_);
    }
    LeanChecker& operator*() const { return *pool_->sessions_[index_]; }
    LeanChecker* operator->() const { return pool_->sessions_[index_].get(); }

   private:
    SessionPool* pool_;
    std::size_t index_;
  };

  Lease lease() {
    std::unique_lock lock(mutex_);
    available_.wait(lock, [&] { return !free_.empty(); });
    const std::size_t index = free_.back();
    free_.pop_back();
    return Lease(*this, index);
  }

  std::size_t size() const { return sessions_.size(); }

 private:
  void release(std::size_t index) {
    {
      std::lock_guard lock(mutex_);
      free_.push_back(index);
    }
    available_.notify_one();
  }

  std::vector<std::unique_ptr<LeanChecker>> sessions_;
  std::vector<std::size_t> free_;
  std::mutex mutex_;
  std::condition_variable available_;
};

}  // namespace lemmaguide
