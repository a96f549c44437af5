#pragma once

// Chat-completions transport for the three model roles, transport-level
// retry with exponential backoff, and scripted mock transports.

#include <lemmaguide/errors.hpp>
#include <lemmaguide/hash.hpp>

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace lemmaguide {

enum class Role { reasoner, worker, prover };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::reasoner: return "reasoner";
    case Role::worker: return "worker";
    case Role::prover: return "prover";
  }
  return "?";
}

inline std::optional<Role> role_from(std::string_view s) {
  if (s == "reasoner") return Role::reasoner;
  if (s == "worker") return Role::worker;
  if (s == "prover") return Role::prover;
  return std::nullopt;
}

struct Sampling {
  double temperature = 0.7;
  double top_p = 1.0;
  int max_tokens = 4096;
};

struct EndpointConfig {
  Role role = Role::worker;
  std::string base_url;
  std::string model;
  Sampling sampling;
  double timeout_s = 300.0;
  int max_retries = 3;
  int max_concurrency = 16;
  std::string api_key_env;  // name of the environment variable holding a bearer token

  static EndpointConfig defaults_for(Role role) {
    EndpointConfig c;
    c.role = role;
    if (role == Role::prover) {
      c.sampling = Sampling{1.0, 0.95, 2048};
    }
    return c;
  }
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  std::string theorem;  // routing/diagnostic tag, not sent to hosted models
  std::string task;
};

struct Completion {
  std::string text;
  double seconds = 0.0;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  int retries = 0;
};

class ModelClient {
 public:
  virtual ~ModelClient() = default;
  virtual Completion complete(const CompletionRequest& request) = 0;
  virtual const EndpointConfig& config() const = 0;
  /// Successful completions served so far.
  virtual std::size_t call_count() const = 0;
};

// ---------------------------------------------------------------------------
// transport

struct HttpResponse {
  int status = 0;  // 0: no response (connection failure or timeout)
  std::string body;
  std::optional<double> simulated_seconds;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& base_url, const std::string& path, const std::string& body,
                            const Headers& headers, double timeout_s) = 0;
};

inline bool retryable_status(int status) { return status == 0 || status == 429 || status >= 500; }

inline std::string chat_request_body(const EndpointConfig& config, const CompletionRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return nlohmann::json{{"model", config.model},
                        {"messages", std::move(messages)},
                        {"temperature", config.sampling.temperature},
                        {"top_p", config.sampling.top_p},
                        {"max_tokens", config.sampling.max_tokens},
                        {"stream", false}}
      .dump();
}

/// First choice's text from a chat-completions (or legacy completions) body.
inline std::optional<Completion> parse_chat_response(std::string_view body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const auto& first = (*choices)[0];
  Completion c;
  if (auto msg = first.find("message"); msg != first.end() && msg->is_object() &&
                                        msg->contains("content") && (*msg)["content"].is_string()) {
    c.text = (*msg)["content"].get<std::string>();
  } else if (auto text = first.find("text"); text != first.end() && text->is_string()) {
    c.text = text->get<std::string>();
  } else {
    return std::nullopt;
  }
  if (auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
    c.prompt_tokens = usage->value("prompt_tokens", 0);
    c.completion_tokens = usage->value("completion_tokens", 0);
  }
  return c;
}

/// Chat-completions client. Transient failures (no response, 429, 5xx) are
/// retried with exponential backoff and never reach the caller unless every
/// retry fails.
class ChatClient : public ModelClient {
 public:
  using Sleeper = std::function<void(double seconds)>;

  ChatClient(EndpointConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper = {},
             double backoff_base_s = 1.0)
      : config_(std::move(config)),
        transport_(std::move(transport)),
        sleeper_(sleeper ? std::move(sleeper)
                         : Sleeper([](double s) {
                             std::this_thread::sleep_for(std::chrono::duration<double>(s));
                           })),
        backoff_base_s_(backoff_base_s),
        admission_(std::max(1, config_.max_concurrency)) {}

  Completion complete(const CompletionRequest& request) override {
    admission_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{admission_};

    const std::string body = chat_request_body(config_, request);
    Headers headers{{"Content-Type", "application/json"},
                    {"X-Lemmaguide-Theorem", request.theorem},
                    {"X-Lemmaguide-Task", request.task}};
    if (!config_.api_key_env.empty()) {
      if (const char* key = std::getenv(config_.api_key_env.c_str())) {
        headers.emplace_back("Authorization", std::string("Bearer ") + key);
      }
    }
    const auto start = std::chrono::steady_clock::now();
    std::string last_error;
    for (int attempt = 0;; ++attempt) {
      HttpResponse response =
          transport_->post(config_.base_url, "/chat/completions", body, headers, config_.timeout_s);
      if (response.status >= 200 && response.status < 300) {
        auto parsed = parse_chat_response(response.body);
        if (!parsed) {
          throw Error(ErrorCode::response_malformed, std::string(to_string(config_.role)) +
                                                         " endpoint returned an unparseable body");
        }
        parsed->retries = attempt;
        parsed->seconds = response.simulated_seconds
                              ? *response.simulated_seconds
                              : std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                                    .count();
        ++calls_;
        return *parsed;
      }
      last_error = "HTTP " + std::to_string(response.status);
      if (!retryable_status(response.status) || attempt >= config_.max_retries) break;
      sleeper_(backoff_base_s_ * static_cast<double>(1u << std::min(attempt, 16)));
    }
    throw Error(ErrorCode::endpoint_unavailable,
                std::string(to_string(config_.role)) + " endpoint failed: " + last_error);
  }

  const EndpointConfig& config() const override { return config_; }
  std::size_t call_count() const override { return calls_.load(); }

 private:
  EndpointConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  double backoff_base_s_;
  std::counting_semaphore<> admission_;
  std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// scripted mock

inline std::string chat_response_body(std::string_view text) {
  return nlohmann::json{{"choices", nlohmann::json::array({{{"index", 0},
                                                            {"message", {{"role", "assistant"},
                                                                         {"content", text}}},
                                                            {"finish_reason", "stop"}}})}}
      .dump();
}

inline std::string header_value(const Headers& headers, std::string_view name) {
  for (const auto& [k, v] : headers) {
    if (k == name) return v;
  }
  return {};
}

/// Serves responses from a JSONL script. Each line is an object with
/// `text` and optionally `theorem`, `task`, `seconds`, `status` (a non-2xx
/// status to inject) and `repeat` (entry is never consumed). Requests are
/// served from their theorem's queue first, then from the untagged queue;
/// within a queue the first entry whose `task` matches (or is absent) wins.
class ScriptTransport : public HttpTransport {
 public:
  struct Entry {
    std::string theorem;
    std::string task;
    std::string text;
    double seconds = 0.0;
    int status = 200;
    bool repeat = false;
  };

  explicit ScriptTransport(std::vector<Entry> entries) {
    for (auto& e : entries) {
      queues_[e.theorem].push_back(std::move(e));
    }
  }

  static std::vector<Entry> parse_script(std::istream& in, const std::string& origin = "script") {
    std::vector<Entry> entries;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorCode::config_error, origin + ":" + std::to_string(number) + ": invalid JSON");
      }
      Entry e;
      e.theorem = j.value("theorem", std::string());
      e.task = j.value("task", std::string());
      e.text = j.value("text", std::string());
      e.seconds = j.value("seconds", 0.0);
      e.status = j.value("status", 200);
      e.repeat = j.value("repeat", false);
      entries.push_back(std::move(e));
    }
    return entries;
  }

  static std::shared_ptr<ScriptTransport> from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config_error, "mock script not found: " + path.string());
    return std::make_shared<ScriptTransport>(parse_script(in, path.string()));
  }

  HttpResponse post(const std::string&, const std::string&, const std::string&, const Headers& headers,
                    double) override {
    const std::string theorem = header_value(headers, "X-Lemmaguide-Theorem");
    const std::string task = header_value(headers, "X-Lemmaguide-Task");
    std::lock_guard lock(mutex_);
    ++requests_[theorem];
    for (const std::string& key : {theorem, std::string()}) {
      auto q = queues_.find(key);
      if (q == queues_.end()) continue;
      for (auto it = q->second.begin(); it != q->second.end(); ++it) {
        if (!it->task.empty() && it->task != task) continue;
        Entry e = *it;
        if (!e.repeat) q->second.erase(it);
        HttpResponse r;
        r.status = e.status;
        r.body = e.status >= 200 && e.status < 300 ? chat_response_body(e.text) : e.text;
        r.simulated_seconds = e.seconds;
        return r;
      }
    }
    return HttpResponse{503, "script exhausted", 0.0};
  }

  std::size_t requests_for(const std::string& theorem) const {
    std::lock_guard lock(mutex_);
    auto it = requests_.find(theorem);
    return it == requests_.end() ? 0 : it->second;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::deque<Entry>> queues_;
  std::map<std::string, std::size_t> requests_;
};

/// Prover stand-in whose n-th call for a theorem succeeds with probability
/// `p`, drawn from a generator seeded by (seed, theorem, n) so outcomes do
/// not depend on scheduling. Successful completions close the goal with
/// `norm_num`; failures emit the `fail` tactic.
class BernoulliProverTransport : public HttpTransport {
 public:
  BernoulliProverTransport(double p, std::uint64_t seed) : p_(p), seed_(seed) {}

  HttpResponse post(const std::string&, const std::string&, const std::string&, const Headers& headers,
                    double) override {
    const std::string theorem = header_value(headers, "X-Lemmaguide-Theorem");
    std::size_t n = 0;
    {
      std::lock_guard lock(mutex_);
      n = counters_[theorem]++;
    }
    std::mt19937_64 rng(fnv1a64(theorem, seed_ ^ (0x9E3779B97F4A7C15ULL * (n + 1))));
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    HttpResponse r;
    r.status = 200;
    r.body = chat_response_body(u < p_ ? "  norm_num\n```" : "  fail\n```");
    r.simulated_seconds = 0.0;
    return r;
  }

 private:
  double p_;
  std::uint64_t seed_;
  std::mutex mutex_;
  std::map<std::string, std::size_t> counters_;
};

}  // namespace lemmaguide
