#pragma once

// Run configuration loaded from a TOML file.
//
//   [run]        budget, initial_attempts, max_lemmas, max_main_attempts,
//                verify_timeout_s, pool_cap, informal_guidance, lemma_guidance,
//                workers, preamble, prompts_dir
//   [verifier]   mode ("repl" | "lexical"), command, working_dir, grace_s,
//                preamble_timeout_s, sessions, lean_version, simulated_seconds
//   [endpoints.reasoner|worker|prover]
//                base_url, model, temperature, top_p, max_tokens, timeout_s,
//                max_retries, max_concurrency, api_key_env

#include <lemmaguide/errors.hpp>
#include <lemmaguide/hash.hpp>
#include <lemmaguide/model_clients.hpp>
#include <lemmaguide/orchestrator.hpp>
#include <lemmaguide/prompts.hpp>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lemmaguide {

inline constexpr const char* kDefaultPreamble =
    "import Mathlib\n"
    "import Aesop\n"
    "\n"
    "set_option maxHeartbeats 400000\n"
    "\n"
    "open BigOperators Real Nat Topology Rat\n";

struct VerifierSettings {
  std::string mode = "repl";
  std::vector<std::string> command{"lake", "exe", "repl"};
  std::string working_dir;
  double grace_s = 2.0;
  double preamble_timeout_s = 600.0;
  int sessions = 0;  // 0: one per worker
  std::string lean_version = "v4.15.0";
  double simulated_seconds = 0.0;  // lexical mode only
};

struct RunConfig {
  PipelineConfig pipeline;
  int workers = 1;
  std::string preamble = kDefaultPreamble;
  std::filesystem::path prompts_dir;
  VerifierSettings verifier;
  std::map<Role, EndpointConfig> endpoints;
  std::filesystem::path base_dir;  // relative paths resolve against this

  std::vector<Role> required_roles() const {
    std::vector<Role> roles{Role::prover};
    if (pipeline.informal_guidance) roles.push_back(Role::reasoner);
    if (pipeline.informal_guidance || pipeline.lemma_guidance) roles.push_back(Role::worker);
    return roles;
  }

  void validate() const {
    auto fail = [](const std::string& why) { throw Error(ErrorCode::config_error, why); };
    pipeline.validate();
    if (workers < 1) fail("workers must be >= 1");
    if (verifier.mode != "repl" && verifier.mode != "lexical") fail("verifier.mode must be repl or lexical");
    if (verifier.mode == "repl" && verifier.command.empty()) fail("verifier.command is empty");
    if (verifier.grace_s < 0.0) fail("verifier.grace_s must be >= 0");
    if (verifier.sessions < 0) fail("verifier.sessions must be >= 0");
    for (Role role : required_roles()) {
      if (!endpoints.count(role)) fail(std::string("missing [endpoints.") + to_string(role) + "]");
    }
    for (const auto& [role, e] : endpoints) {
      const std::string where = std::string("endpoints.") + to_string(role);
      if (e.base_url.empty()) fail(where + ".base_url is required");
      if (e.sampling.temperature < 0.0) fail(where + ".temperature must be >= 0");
      if (!(e.sampling.top_p > 0.0 && e.sampling.top_p <= 1.0)) fail(where + ".top_p must be in (0, 1]");
      if (e.sampling.max_tokens < 1) fail(where + ".max_tokens must be >= 1");
      if (!(e.timeout_s > 0.0)) fail(where + ".timeout_s must be positive");
      if (e.max_retries < 0) fail(where + ".max_retries must be >= 0");
      if (e.max_concurrency < 1) fail(where + ".max_concurrency must be >= 1");
    }
  }

  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.empty() || p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }

  /// Everything that can change a theorem's outcome. Worker count is left
  /// out: outcomes do not depend on it.
  nlohmann::ordered_json snapshot() const {
    nlohmann::ordered_json j;
    j["run"] = {{"budget", pipeline.budget},
                {"initial_attempts", pipeline.initial_attempts},
                {"max_lemmas", pipeline.max_lemmas},
                {"max_main_attempts", pipeline.max_main_attempts},
                {"verify_timeout_s", pipeline.verify_timeout_s},
                {"pool_cap", pipeline.pool_cap},
                {"informal_guidance", pipeline.informal_guidance},
                {"lemma_guidance", pipeline.lemma_guidance},
                {"preamble", preamble}};
    j["verifier"] = {{"mode", verifier.mode},
                     {"command", verifier.command},
                     {"lean_version", verifier.lean_version},
                     {"grace_s", verifier.grace_s},
                     {"simulated_seconds", verifier.simulated_seconds}};
    nlohmann::ordered_json eps = nlohmann::ordered_json::object();
    for (const auto& [role, e] : endpoints) {
      eps[to_string(role)] = {{"base_url", e.base_url},
                              {"model", e.model},
                              {"temperature", e.sampling.temperature},
                              {"top_p", e.sampling.top_p},
                              {"max_tokens", e.sampling.max_tokens},
                              {"timeout_s", e.timeout_s},
                              {"max_retries", e.max_retries}};
    }
    j["endpoints"] = eps;
    const TemplateSet templates = TemplateSet::with_overrides(resolve(prompts_dir));
    nlohmann::ordered_json prompts = nlohmann::ordered_json::object();
    for (PromptId id : kAllPrompts) prompts[to_string(id)] = sha256_hex(templates.text(id));
    j["prompts_sha256"] = prompts;
    return j;
  }

  std::string hash() const { return sha256_hex(snapshot().dump()).substr(0, 16); }
};

namespace detail {

inline void reject_unknown(const toml::table& table, const std::string& where,
                           const std::set<std::string, std::less<>>& allowed) {
  for (const auto& [key, value] : table) {
    if (!allowed.count(key.str())) {
      throw Error(ErrorCode::config_error, "unknown key " + where + "." + std::string(key.str()));
    }
  }
}

template <typename T>
void read(const toml::table& table, std::string_view key, T& out, const std::string& where) {
  const toml::node* node = table.get(key);
  if (!node) return;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = node->value<double>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, int>) {
    if (auto v = node->value_exact<int64_t>()) {
      out = static_cast<int>(*v);
      return;
    }
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node->value_exact<bool>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node->value_exact<std::string>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
    if (const toml::array* arr = node->as_array()) {
      std::vector<std::string> items;
      for (const auto& item : *arr) {
        auto s = item.value_exact<std::string>();
        if (!s) break;
        items.push_back(*s);
      }
      if (items.size() == arr->size()) {
        out = std::move(items);
        return;
      }
    }
  }
  throw Error(ErrorCode::config_error, "wrong type for " + where + "." + std::string(key));
}

}  // namespace detail

inline RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {},
                              const std::string& origin = "config") {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << origin << ":" << e.source().begin.line << ": " << e.description();
    throw Error(ErrorCode::config_error, msg.str());
  }
  RunConfig c;
  c.base_dir = base_dir;
  detail::reject_unknown(root, "", {"run", "verifier", "endpoints"});

  if (const toml::table* run = root["run"].as_table()) {
    detail::reject_unknown(*run, "run",
                           {"budget", "initial_attempts", "max_lemmas", "max_main_attempts", "verify_timeout_s",
                            "pool_cap", "informal_guidance", "lemma_guidance", "workers", "preamble",
                            "prompts_dir"});
    auto& p = c.pipeline;
    detail::read(*run, "budget", p.budget, "run");
    detail::read(*run, "initial_attempts", p.initial_attempts, "run");
    detail::read(*run, "max_lemmas", p.max_lemmas, "run");
    detail::read(*run, "max_main_attempts", p.max_main_attempts, "run");
    detail::read(*run, "verify_timeout_s", p.verify_timeout_s, "run");
    detail::read(*run, "pool_cap", p.pool_cap, "run");
    detail::read(*run, "informal_guidance", p.informal_guidance, "run");
    detail::read(*run, "lemma_guidance", p.lemma_guidance, "run");
    detail::read(*run, "workers", c.workers, "run");
    detail::read(*run, "preamble", c.preamble, "run");
    std::string prompts_dir;
    detail::read(*run, "prompts_dir", prompts_dir, "run");
    c.prompts_dir = prompts_dir;
  }

  if (const toml::table* v = root["verifier"].as_table()) {
    detail::reject_unknown(*v, "verifier",
                           {"mode", "command", "working_dir", "grace_s", "preamble_timeout_s", "sessions",
                            "lean_version", "simulated_seconds"});
    auto& s = c.verifier;
    detail::read(*v, "mode", s.mode, "verifier");
    detail::read(*v, "command", s.command, "verifier");
    detail::read(*v, "working_dir", s.working_dir, "verifier");
    detail::read(*v, "grace_s", s.grace_s, "verifier");
    detail::read(*v, "preamble_timeout_s", s.preamble_timeout_s, "verifier");
    detail::read(*v, "sessions", s.sessions, "verifier");
    detail::read(*v, "lean_version", s.lean_version, "verifier");
    detail::read(*v, "simulated_seconds", s.simulated_seconds, "verifier");
  }

  if (const toml::node* node = root.get("endpoints")) {
    const toml::table* eps = node->as_table();
    if (!eps) throw Error(ErrorCode::config_error, "endpoints must be a table");
    for (const auto& [key, value] : *eps) {
      const std::string name(key.str());
      const auto role = role_from(name);
      if (!role) throw Error(ErrorCode::config_error, "unknown endpoint role " + name);
      const toml::table* t = value.as_table();
      if (!t) throw Error(ErrorCode::config_error, "endpoints." + name + " must be a table");
      const std::string where = "endpoints." + name;
      detail::reject_unknown(*t, where,
                             {"base_url", "model", "temperature", "top_p", "max_tokens", "timeout_s",
                              "max_retries", "max_concurrency", "api_key_env"});
      EndpointConfig e = EndpointConfig::defaults_for(*role);
      detail::read(*t, "base_url", e.base_url, where);
      detail::read(*t, "model", e.model, where);
      detail::read(*t, "temperature", e.sampling.temperature, where);
      detail::read(*t, "top_p", e.sampling.top_p, where);
      detail::read(*t, "max_tokens", e.sampling.max_tokens, where);
      detail::read(*t, "timeout_s", e.timeout_s, where);
      detail::read(*t, "max_retries", e.max_retries, where);
      detail::read(*t, "max_concurrency", e.max_concurrency, where);
      detail::read(*t, "api_key_env", e.api_key_env, where);
      c.endpoints[*role] = e;
    }
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::config_error, "cannot read config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path(), path.string());
}

}  // namespace lemmaguide
