#pragma once

// Shared mocks for pipeline-level tests: scripted model endpoints, the
// lexical checker and a small theorem.

#include <lemmaguide/lemmaguide.hpp>

#include <memory>
#include <string>
#include <vector>

namespace fixtures {

using namespace lemmaguide;

inline TheoremTask toy_task(std::string name = "toy") {
  TheoremTask t;
  t.name = std::move(name);
  t.formal_statement = "theorem " + t.name + " (x : ℝ) (h₀ : 3 * x + 1 = 7) : x ^ 2 + 1 = 5";
  t.informal_statement = "If 3x + 1 = 7 then x^2 + 1 = 5.";
  t.preamble = "import Mathlib\n";
  return t;
}

using Entry = ScriptTransport::Entry;

inline Entry entry(std::string task, std::string text, double seconds = 0.0, std::string theorem = {}) {
  Entry e;
  e.theorem = std::move(theorem);
  e.task = std::move(task);
  e.text = std::move(text);
  e.seconds = seconds;
  return e;
}

inline Entry repeat(Entry e) {
  e.repeat = true;
  return e;
}

inline Entry failing(std::string task, int status, std::string theorem = {}) {
  Entry e;
  e.theorem = std::move(theorem);
  e.task = std::move(task);
  e.status = status;
  e.text = "injected";
  return e;
}

/// Prover completion continuing the `:= by` block.
inline std::string completion(const std::string& body) {
  std::string out;
  std::size_t start = 0;
  while (start <= body.size()) {
    const std::size_t nl = body.find('\n', start);
    out += "  " + body.substr(start, nl == std::string::npos ? std::string::npos : nl - start) + "\n";
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return out + "```";
}

inline Entry prover_ok(std::string task, double seconds = 0.0) {
  return entry(std::move(task), completion("norm_num"), seconds);
}
inline Entry prover_fail(std::string task, double seconds = 0.0) {
  return entry(std::move(task), completion("fail"), seconds);
}

inline std::string chosen(const std::vector<std::string>& statements) {
  std::string out = "ANALYSIS:\nThe key steps are below.\n\nCHOSEN LEMMAS:\n";
  for (std::size_t i = 0; i < statements.size(); ++i) {
    out += "have l_" + std::to_string(i) + " : " + statements[i] + " := by\n";
  }
  return out;
}

inline std::string steps(int m, const std::string& tag = "step") {
  std::string out = "STEPS:\n";
  for (int i = 0; i < m; ++i) {
    out += "l_" + std::to_string(i) + ": statement " + std::to_string(i) + "\nProof: " + tag + " " +
           std::to_string(i) + "\n";
  }
  return out + "Final Proof: combine the steps\n";
}

inline EndpointConfig endpoint(Role role) {
  EndpointConfig e = EndpointConfig::defaults_for(role);
  e.base_url = "mock:test";
  e.max_retries = 2;
  return e;
}

/// Three scripted endpoints, a lexical checker and default templates.
struct MockEnv {
  std::shared_ptr<ScriptTransport> reasoner_script;
  std::shared_ptr<ScriptTransport> worker_script;
  std::shared_ptr<ScriptTransport> prover_script;
  std::unique_ptr<ChatClient> reasoner;
  std::unique_ptr<ChatClient> worker;
  std::unique_ptr<ChatClient> prover;
  LexicalChecker checker;
  TemplateSet templates;

  MockEnv(std::vector<Entry> reasoner_entries, std::vector<Entry> worker_entries,
          std::vector<Entry> prover_entries, double check_seconds = 0.0)
      : reasoner_script(std::make_shared<ScriptTransport>(std::move(reasoner_entries))),
        worker_script(std::make_shared<ScriptTransport>(std::move(worker_entries))),
        prover_script(std::make_shared<ScriptTransport>(std::move(prover_entries))),
        reasoner(std::make_unique<ChatClient>(endpoint(Role::reasoner), reasoner_script, [](double) {})),
        worker(std::make_unique<ChatClient>(endpoint(Role::worker), worker_script, [](double) {})),
        prover(std::make_unique<ChatClient>(endpoint(Role::prover), prover_script, [](double) {})),
        checker(check_seconds) {}

  ModelClients clients() { return ModelClients{reasoner.get(), worker.get(), prover.get()}; }

  TheoremOutcome run(const TheoremTask& task, const PipelineConfig& config, RunObserver* observer = nullptr) {
    return run_pipeline(task, config, clients(), checker, templates, observer);
  }
};

/// Standard guidance answers for a run whose selection picks `statements`.
inline std::vector<Entry> reasoner_ok() { return {repeat(entry("nl_proof", "Solve for x, then square it.", 1.0))}; }

inline std::vector<Entry> worker_ok(const std::vector<std::string>& statements) {
  std::vector<Entry> out{entry("summary", "We have x = 2 so x ^ 2 + 1 = 5.", 0.5),
                         entry("selection", chosen(statements), 0.5)};
  if (!statements.empty()) out.push_back(entry("lemma_proofs", steps(static_cast<int>(statements.size())), 0.5));
  return out;
}

}  // namespace fixtures
