// prove: run a benchmark, rebuild a report from logs, inspect the have
// statements of a Lean file, or write out the default prompt templates.
//
// exit codes: 0 ok, 1 config or usage error, 2 infrastructure failure,
// 3 dataset error

#include <lemmaguide/lemmaguide.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace lemmaguide;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::config_error: return 1;
    case ErrorCode::dataset_error: return 3;
    case ErrorCode::endpoint_unavailable:
    case ErrorCode::transport_error:
    case ErrorCode::response_malformed:
    case ErrorCode::guidance_unavailable: return 2;
    default: return 2;
  }
}

struct RunArgs {
  std::string dataset;
  std::string config;
  std::optional<int> budget;
  std::optional<int> initial_attempts;
  std::optional<int> max_lemmas;
  std::optional<double> verify_timeout;
  std::optional<int> workers;
  bool resume = false;
  std::string out = "runs/latest";
  std::vector<int> ks{32, 128};
};

int run(const RunArgs& args) {
  RunConfig config = load_config(args.config);
  if (args.budget) config.pipeline.budget = *args.budget;
  if (args.initial_attempts) config.pipeline.initial_attempts = *args.initial_attempts;
  if (args.max_lemmas) config.pipeline.max_lemmas = *args.max_lemmas;
  if (args.verify_timeout) config.pipeline.verify_timeout_s = *args.verify_timeout;
  if (args.workers) config.workers = *args.workers;
  config.validate();
  const auto entries = load_dataset(args.dataset);

  BenchmarkOptions options;
  options.out_dir = args.out;
  options.resume = args.resume;
  options.ks = args.ks;
  const BenchmarkResult result = run_benchmark(config, entries, options);
  std::cout << result.report.to_table();
  std::cout << "\nlogs: " << args.out << "  (ran " << result.executed << ", resumed " << result.resumed << ")\n";
  return result.report.count(OutcomeStatus::infrastructure_failure) ? 2 : 0;
}

int report(const std::string& dir, const std::vector<int>& ks, bool json) {
  const RunReport r = report_from_logs(dir, ks);
  if (json) {
    std::cout << r.to_json().dump(2) << "\n";
  } else {
    std::cout << r.to_table();
  }
  return 0;
}

int extract(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::dataset_error, "cannot read " + file);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const auto result = lean::extract_haves(buffer.str());
  nlohmann::ordered_json lemmas = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.lemmas.size(); ++i) {
    const Lemma& l = result.lemmas[i];
    lemmas.push_back({{"binder", l.binder_name},
                      {"statement", l.statement_text},
                      {"normalized_statement", l.normalized_statement},
                      {"proof", l.proof_text ? nlohmann::ordered_json(*l.proof_text) : nlohmann::ordered_json()},
                      {"pattern_binder", l.pattern_binder},
                      {"start", result.spans[i].start},
                      {"end", result.spans[i].end},
                      {"line", result.spans[i].line}});
  }
  std::cout << nlohmann::ordered_json{{"lemmas", lemmas}, {"skipped", result.skipped}}.dump(2) << "\n";
  return 0;
}

int dump_prompts(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const TemplateSet defaults;
  for (PromptId id : kAllPrompts) {
    std::ofstream(dir / (std::string(to_string(id)) + ".txt"), std::ios::trunc | std::ios::binary)
        << defaults.text(id) << "\n";
  }
  std::cout << "wrote " << std::size(kAllPrompts) << " templates to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lemma-guided theorem proving harness"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "prove every theorem of a dataset");
  run_cmd->add_option("--dataset", run_args.dataset, "JSONL dataset")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--config", run_args.config, "TOML run configuration")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--budget", run_args.budget, "prover calls per theorem");
  run_cmd->add_option("--initial-attempts", run_args.initial_attempts, "guided attempts before lemma selection");
  run_cmd->add_option("--max-lemmas", run_args.max_lemmas, "lemmas kept by selection");
  run_cmd->add_option("--verify-timeout", run_args.verify_timeout, "seconds per Lean check");
  run_cmd->add_option("--workers", run_args.workers, "theorems in flight");
  run_cmd->add_flag("--resume", run_args.resume, "continue the run in --out");
  run_cmd->add_option("--out", run_args.out, "log directory")->capture_default_str();
  run_cmd->add_option("--k", run_args.ks, "pass@k values to report")->delimiter(',')->capture_default_str();

  std::string log_dir;
  std::vector<int> ks{32, 128};
  bool json = false;
  auto* report_cmd = app.add_subcommand("report", "rebuild the report of a run from its logs");
  report_cmd->add_option("--log", log_dir, "log directory")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--k", ks, "pass@k values")->delimiter(',')->capture_default_str();
  report_cmd->add_flag("--json", json, "print JSON instead of a table");

  std::string lean_file;
  auto* extract_cmd = app.add_subcommand("extract", "list the have statements of a Lean file");
  extract_cmd->add_option("--file", lean_file, "Lean source")->required()->check(CLI::ExistingFile);

  std::string prompts_dir;
  auto* prompts_cmd = app.add_subcommand("prompts", "write the default prompt templates to a directory");
  prompts_cmd->add_option("--out", prompts_dir, "target directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (int k : run_args.ks) {
      if (k < 1) throw Error(ErrorCode::config_error, "--k values must be >= 1");
    }
    for (int k : ks) {
      if (k < 1) throw Error(ErrorCode::config_error, "--k values must be >= 1");
    }
    if (*run_cmd) return run(run_args);
    if (*report_cmd) return report(log_dir, ks, json);
    if (*extract_cmd) return extract(lean_file);
    if (*prompts_cmd) return dump_prompts(prompts_dir);
  } catch (const Error& e) {
    std::cerr << "prove: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "prove: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
