// SPDX-License-Identifier: Apache-2.0
//
// mhop: dataset conversion, splitting, oracle checks, inference runs and
// scoring for multi-hop QA under knowledge edits.

#include <array>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mhop/config.hpp"
#include "mhop/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mhop;

namespace {

constexpr int kExitError = 1;
constexpr int kExitEmpty = 2;
constexpr int kExitBackend = 3;

bool is_backend_failure(ErrorKind k) {
  return k == ErrorKind::endpoint_unreachable || k == ErrorKind::http_error || k == ErrorKind::timeout ||
         k == ErrorKind::retries_exhausted;
}

struct Options {
  std::string config_path;
  std::uint64_t seed = 42;
  bool verbose = false;

  std::string input;
  std::string output_dir;
  std::string data_dir;
  std::string instruction;
  std::string instruction_file;
  double ratio = 0.7;

  std::string partition = "test";
  std::string mode = "direct";
  std::string endpoint;
  std::string model;
  std::string mock_scope;
  int parallelism = 1;
  double timeout = 60;
  int retries = 3;
  int max_hops = 4;
  int max_tokens = 256;
  double temperature = 0;
  int backoff_ms = 500;
  bool replay_history = false;

  std::vector<std::string> logs;
  std::string label = "Comparison";
  std::vector<std::array<std::string, 3>> rows;

  int epochs = 2;
  int batch_size = 1;
  int grad_accum = 8;
  double learning_rate = 1e-4;
  std::string dataset_path;
  std::string train_output_dir;
};

bool given(const CLI::App& app, const std::string& name) {
  const auto* opt = app.get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

config::PipelineConfig resolve(const CLI::App& app, const CLI::App& sub, const Options& o) {
  config::PipelineConfig c;
  if (!o.config_path.empty()) c = config::load(o.config_path);
  if (given(app, "--seed")) c.seed = o.seed;
  c.run.seed = c.seed;
  if (given(sub, "--input")) c.input_path = o.input;
  if (given(sub, "--output-dir")) c.output_dir = o.output_dir;
  if (given(sub, "--ratio")) c.split_ratio = o.ratio;
  if (given(sub, "--instruction")) c.templates.instruction_text = o.instruction;
  if (given(sub, "--instruction-file")) c.templates.instruction_text = text::trim(text::read_file(o.instruction_file));
  if (given(sub, "--endpoint")) c.run.endpoint = o.endpoint;
  if (given(sub, "--model")) c.run.model_name = o.model;
  if (given(sub, "--mock-scope")) c.mock_scope = o.mock_scope;
  if (given(sub, "--parallelism")) c.run.parallelism = o.parallelism;
  if (given(sub, "--timeout")) c.run.timeout_seconds = o.timeout;
  if (given(sub, "--retries")) c.run.max_retries = o.retries;
  if (given(sub, "--max-hops")) c.run.max_hops = o.max_hops;
  if (given(sub, "--max-tokens")) c.run.max_tokens = o.max_tokens;
  if (given(sub, "--temperature")) c.run.temperature = o.temperature;
  if (given(sub, "--backoff-ms")) c.run.retry_backoff_ms = o.backoff_ms;
  if (given(sub, "--replay-history")) c.run.replay_history = o.replay_history;
  if (given(sub, "--epochs")) c.train.num_train_epochs = o.epochs;
  if (given(sub, "--batch-size")) c.train.per_device_train_batch_size = o.batch_size;
  if (given(sub, "--grad-accum")) c.train.gradient_accumulation_steps = o.grad_accum;
  if (given(sub, "--learning-rate")) c.train.learning_rate = o.learning_rate;
  if (given(sub, "--dataset-path")) c.train.dataset_path = o.dataset_path;
  if (given(sub, "--train-output-dir")) c.train.output_dir = o.train_output_dir;
  return c;
}

void add_backend_flags(CLI::App* sub, Options& o) {
  sub->add_option("--endpoint", o.endpoint, "Chat-completions base URL, or 'mock'");
  sub->add_option("--model", o.model, "Model name sent to the server");
  sub->add_option("--mock-scope", o.mock_scope, "Mock knowledge: hops | direct")->check(CLI::IsMember({"hops", "direct"}));
  sub->add_option("--parallelism", o.parallelism, "Concurrent records")->check(CLI::PositiveNumber);
  sub->add_option("--timeout", o.timeout, "Per-request timeout in seconds")->check(CLI::PositiveNumber);
  sub->add_option("--retries", o.retries, "Retries on transient failures")->check(CLI::NonNegativeNumber);
  sub->add_option("--backoff-ms", o.backoff_ms, "First retry delay; doubles per retry")->check(CLI::NonNegativeNumber);
  sub->add_option("--max-hops", o.max_hops, "Hop cap for decomposed modes")->check(CLI::PositiveNumber);
  sub->add_option("--max-tokens", o.max_tokens, "Completion token limit")->check(CLI::PositiveNumber);
  sub->add_option("--temperature", o.temperature, "Sampling temperature")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-hop QA dataset conversion and evaluation harness"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "TOML-style pipeline config; explicit flags override it")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Seed for splitting (default 42)");
  app.add_flag("--verbose,-v", o.verbose, "Log progress and dropped records");

  auto* convert = app.add_subcommand("convert", "MQuAKE-T file -> single-hop and multi-hop Alpaca datasets");
  convert->add_option("--input,-i", o.input, "Source case file (JSON array)");
  convert->add_option("--output-dir,-o", o.output_dir, "Output directory");
  convert->add_option("--instruction", o.instruction, "Override the instruction text");
  convert->add_option("--instruction-file", o.instruction_file, "Read the instruction text from a file")->check(CLI::ExistingFile);

  auto* split = app.add_subcommand("split", "Synchronized train/test split of both variants");
  split->add_option("--data-dir,-d", o.data_dir, "Directory written by convert")->required();
  split->add_option("--output-dir,-o", o.output_dir, "Output directory (default: data dir)");
  split->add_option("--ratio", o.ratio, "Train fraction (default 0.7)");

  auto* oracle = app.add_subcommand("oracle-check", "Check every case against a knowledge-graph chain walk");
  oracle->add_option("--input,-i", o.input, "Source case file");
  oracle->add_option("--output-dir,-o", o.output_dir, "Directory for oracle_check.csv");

  auto* run = app.add_subcommand("run", "Run a test set through a backend");
  run->add_option("--data-dir,-d", o.data_dir, "Directory written by convert/split")->required();
  run->add_option("--output-dir,-o", o.output_dir, "Output directory (default: data dir)");
  run->add_option("--partition", o.partition, "train | test | all")->check(CLI::IsMember({"train", "test", "all"}));
  run->add_option("--mode", o.mode, "direct | decomposed-scripted | decomposed-model")
      ->check(CLI::IsMember({"direct", "decomposed-scripted", "decomposed-model"}));
  run->add_flag("--replay-history", o.replay_history, "Scripted mode: replay earlier hops as prior turns");
  add_backend_flags(run, o);

  auto* score = app.add_subcommand("score", "Score one or two outcome logs");
  score->add_option("--log", o.logs, "Outcome log (give two to compare)")->required()->check(CLI::ExistingFile);
  score->add_option("--label", o.label, "Row label for the comparison");
  score->add_option("--output-dir,-o", o.output_dir, "Output directory");

  auto* report = app.add_subcommand("report", "Multi-configuration comparison table");
  report->add_option("--row", o.rows, "LABEL SINGLE_LOG MULTI_LOG (repeatable)")->required();
  report->add_option("--output-dir,-o", o.output_dir, "Output directory");

  auto* train = app.add_subcommand("emit-train-config", "Write the LoRA training YAML");
  train->add_option("--output-dir,-o", o.output_dir, "Output directory");
  train->add_option("--epochs", o.epochs, "num_train_epochs (default 2)")->check(CLI::PositiveNumber);
  train->add_option("--batch-size", o.batch_size, "per_device_train_batch_size (default 1)")->check(CLI::PositiveNumber);
  train->add_option("--grad-accum", o.grad_accum, "gradient_accumulation_steps (default 8)")->check(CLI::PositiveNumber);
  train->add_option("--learning-rate", o.learning_rate, "learning_rate (default 1.0e-4)")->check(CLI::PositiveNumber);
  train->add_option("--dataset-path", o.dataset_path, "Training dataset path written into the YAML");
  train->add_option("--train-output-dir", o.train_output_dir, "Trainer output directory written into the YAML");

  CLI11_PARSE(app, argc, argv);
  log::set_level(o.verbose ? log::Level::info : log::Level::warning);

  CLI::App* sub = app.get_subcommands().front();
  try {
    const auto cfg = resolve(app, *sub, o);

    if (sub == convert) {
      if (cfg.input_path.empty()) throw Error(ErrorKind::invalid_config, "--input is required");
      pipeline::ConvertSummary s;
      try {
        s = pipeline::convert(cfg.input_path, cfg.output_dir, cfg.templates);
      } catch (const Error& e) {
        std::cerr << "convert: " << e.what() << '\n';
        return kExitError;
      }
      std::cout << pipeline::render(s);
      if (s.written == 0) {
        std::cerr << "convert: no records survived cleaning\n";
        return kExitEmpty;
      }
      return 0;
    }

    if (sub == split) {
      const fs::path out = given(*sub, "--output-dir") ? fs::path(cfg.output_dir) : fs::path(o.data_dir);
      auto res = pipeline::split(o.data_dir, cfg.split_ratio, cfg.seed, out);
      for (const auto& [name, n] : res.sizes) std::cout << name << ": " << n << '\n';
      std::cout << pipeline::files::manifest << ": seed " << cfg.seed << ", ratio " << text::format_double(cfg.split_ratio) << '\n';
      return 0;
    }

    if (sub == oracle) {
      if (cfg.input_path.empty()) throw Error(ErrorKind::invalid_config, "--input is required");
      auto records = ingest::parse_source(cfg.input_path);
      auto rep = pipeline::oracle_check(records);
      std::cout << pipeline::oracle_lines(rep);
      text::write_file(fs::path(cfg.output_dir) / pipeline::files::oracle_csv, pipeline::oracle_csv(rep));
      return 0;
    }

    if (sub == run) {
      pipeline::RunRequest req;
      req.data_dir = o.data_dir;
      req.output_dir = given(*sub, "--output-dir") ? fs::path(cfg.output_dir) : fs::path(o.data_dir);
      req.partition = o.partition;
      req.mode = parse_eval_mode(o.mode);
      req.config = cfg.run;
      req.mock_scope = backend::parse_mock_scope(cfg.mock_scope);
      try {
        auto res = pipeline::run(req);
        std::cout << "processed " << res.outcomes.size() << " records (" << (res.live ? "live backend" : "mock backend")
                  << ")\n";
        std::vector<scoring::ScoreSummary> summary{res.summary};
        std::cout << report::render_summary_text(summary);
      } catch (const Error& e) {
        std::cerr << "run: " << e.what() << '\n';
        return is_backend_failure(e.kind()) ? kExitBackend : kExitError;
      }
      return 0;
    }

    if (sub == score) {
      std::vector<fs::path> logs(o.logs.begin(), o.logs.end());
      auto files_out = pipeline::score(logs, o.label);
      pipeline::write_report(files_out, cfg.output_dir);
      std::cout << files_out.text;
      return 0;
    }

    if (sub == report) {
      std::vector<pipeline::ReportSpec> specs;
      for (const auto& r : o.rows) specs.push_back({r[0], r[1], r[2]});
      auto files_out = pipeline::report_rows(specs);
      pipeline::write_report(files_out, cfg.output_dir);
      std::cout << files_out.text;
      return 0;
    }

    if (sub == train) {
      const auto path = fs::path(cfg.output_dir) / pipeline::files::train_config;
      datasetgen::emit_train_config(cfg.train, path);
      std::cout << "wrote " << path.string() << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << sub->get_name() << ": " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
