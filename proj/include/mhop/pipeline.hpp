// SPDX-License-Identifier: Apache-2.0
//
// File-to-file pipeline stages behind the `mhop` subcommands. Stages only
// communicate through the files below, all placed in one output directory.
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "mhop/backend.hpp"
#include "mhop/datasetgen.hpp"
#include "mhop/eval_runner.hpp"
#include "mhop/http_backend.hpp"
#include "mhop/ingest.hpp"
#include "mhop/kg_oracle.hpp"
#include "mhop/report.hpp"
#include "mhop/scoring.hpp"

namespace mhop::pipeline {

namespace fs = std::filesystem;

namespace files {
inline constexpr const char* single_hop = "single_hop.json";
inline constexpr const char* multi_hop = "multi_hop.json";
inline constexpr const char* source_clean = "source_clean.json";
inline constexpr const char* conversion_report = "conversion_report.txt";
inline constexpr const char* manifest = "split_manifest.csv";
inline constexpr const char* oracle_csv = "oracle_check.csv";
inline constexpr const char* report_txt = "report.txt";
inline constexpr const char* report_md = "report.md";
inline constexpr const char* plot_csv = "plot_data.csv";
inline constexpr const char* train_config = "train_config.yaml";

inline std::string partition_file(std::string_view variant, datasetgen::Partition p) {
  return std::string(variant) + "_" + datasetgen::to_string(p) + ".json";
}
inline std::string outcomes(EvalMode m) { return "outcomes_" + to_string(m) + ".jsonl"; }
inline std::string transcripts(EvalMode m) { return "transcripts_" + to_string(m) + ".jsonl"; }
}  // namespace files

// ---- convert ----

struct ConvertSummary {
  std::size_t read = 0;
  std::size_t dropped_invalid = 0;
  std::size_t dropped_duplicate = 0;
  std::size_t written = 0;
  std::vector<std::string> notes;  // one line per dropped record
};

inline std::string render(const ConvertSummary& s) {
  std::string out;
  out += "records_in: " + std::to_string(s.read) + "\n";
  out += "dropped_invalid: " + std::to_string(s.dropped_invalid) + "\n";
  out += "dropped_duplicate: " + std::to_string(s.dropped_duplicate) + "\n";
  out += "records_out: " + std::to_string(s.written) + "\n";
  for (const auto& n : s.notes) out += n + "\n";
  return out;
}

/// ingest -> clean -> dedupe -> both Alpaca variants. Writes the variant files,
/// the cleaned source records (same order) and a conversion report.
inline ConvertSummary convert(const fs::path& input, const fs::path& output_dir,
                              const datasetgen::PromptTemplate& tmpl = {}) {
  auto parsed = ingest::parse_source(input);
  ConvertSummary summary;
  summary.read = parsed.size();
  auto cleaned = ingest::clean(std::move(parsed));
  summary.dropped_invalid = cleaned.dropped.size();
  for (const auto& d : cleaned.dropped) {
    std::string line = "invalid " + d.case_id + ":";
    for (const auto& v : d.reasons) line += " [" + describe(v) + "]";
    summary.notes.push_back(line);
  }
  auto deduped = ingest::dedupe(std::move(cleaned.records));
  summary.dropped_duplicate = deduped.dropped_case_ids.size();
  for (const auto& id : deduped.dropped_case_ids) summary.notes.push_back("duplicate " + id);

  std::vector<AlpacaRecord> single;
  std::vector<AlpacaRecord> multi;
  for (const auto& r : deduped.records) {
    single.push_back(datasetgen::to_single_hop(r, tmpl));
    multi.push_back(datasetgen::to_multi_hop(r, tmpl));
  }
  summary.written = deduped.records.size();
  datasetgen::emit_dataset(single, output_dir / files::single_hop);
  datasetgen::emit_dataset(multi, output_dir / files::multi_hop);
  ingest::write_source(deduped.records, output_dir / files::source_clean);
  text::write_file(output_dir / files::conversion_report, render(summary));
  return summary;
}

// ---- split ----

struct SplitOutputs {
  datasetgen::SplitAssignment assignment;
  std::map<std::string, std::size_t> sizes;  // file name -> record count
};

inline std::vector<SourceRecord> load_clean_source(const fs::path& data_dir) {
  const auto path = data_dir / files::source_clean;
  if (!fs::exists(path)) throw Error(ErrorKind::missing_variant_file, path.string());
  return ingest::parse_source(path);
}

inline SplitOutputs split(const fs::path& data_dir, double ratio, std::uint64_t seed, const fs::path& output_dir) {
  auto sources = load_clean_source(data_dir);
  std::map<std::string, std::vector<AlpacaRecord>> variants;
  for (const char* v : {files::single_hop, files::multi_hop}) {
    const auto path = data_dir / v;
    if (!fs::exists(path)) throw Error(ErrorKind::missing_variant_file, path.string());
    auto records = datasetgen::parse_dataset(path);
    if (records.size() != sources.size())
      throw Error(ErrorKind::malformed_syntax, path.string() + " has " + std::to_string(records.size()) +
                                                   " records but " + files::source_clean + " has " +
                                                   std::to_string(sources.size()));
    variants[v] = std::move(records);
  }

  SplitOutputs out;
  out.assignment = datasetgen::split(sources, ratio, seed);
  for (const auto& [file, name] : {std::pair{files::single_hop, "single"}, std::pair{files::multi_hop, "multi"}}) {
    std::vector<AlpacaRecord> train;
    std::vector<AlpacaRecord> test;
    const auto& records = variants[file];
    for (std::size_t i = 0; i < sources.size(); ++i) {
      auto p = out.assignment.partition_of.at(sources[i].case_id);
      (p == datasetgen::Partition::train ? train : test).push_back(records[i]);
    }
    auto train_name = files::partition_file(name, datasetgen::Partition::train);
    auto test_name = files::partition_file(name, datasetgen::Partition::test);
    datasetgen::emit_dataset(train, output_dir / train_name);
    datasetgen::emit_dataset(test, output_dir / test_name);
    out.sizes[train_name] = train.size();
    out.sizes[test_name] = test.size();
  }
  text::write_file(output_dir / files::manifest, datasetgen::manifest_csv(out.assignment));
  return out;
}

// ---- oracle-check ----

struct OracleRow {
  std::string case_id;
  kg::ConsistencyResult result;
};

struct OracleReport {
  std::vector<OracleRow> rows;
  std::size_t pass = 0;
  std::size_t fail = 0;
  std::size_t not_checkable = 0;
};

inline OracleReport oracle_check(std::span<const SourceRecord> records) {
  OracleReport rep;
  const auto store = kg::build_store(records);
  for (const auto& r : records) {
    auto res = kg::check_consistency(r, store);
    switch (res.status) {
      case kg::CheckStatus::pass: ++rep.pass; break;
      case kg::CheckStatus::fail: ++rep.fail; break;
      case kg::CheckStatus::not_checkable: ++rep.not_checkable; break;
    }
    rep.rows.push_back({r.case_id, std::move(res)});
  }
  return rep;
}

inline std::string oracle_lines(const OracleReport& rep) {
  std::string out;
  for (const auto& row : rep.rows) {
    out += row.case_id + "\t" + kg::to_string(row.result.status);
    if (!row.result.diagnostic.empty()) out += "\t" + row.result.diagnostic;
    out += "\n";
  }
  out += "---\n";
  out += "total: " + std::to_string(rep.rows.size()) + "\n";
  out += "PASS: " + std::to_string(rep.pass) + "\n";
  out += "FAIL: " + std::to_string(rep.fail) + "\n";
  out += "NOT-CHECKABLE: " + std::to_string(rep.not_checkable) + "\n";
  return out;
}

inline std::string oracle_csv(const OracleReport& rep) {
  std::string out = "case_id,status,expected,found\n";
  for (const auto& row : rep.rows)
    out += text::csv_escape(row.case_id) + "," + kg::to_string(row.result.status) + "," +
           text::csv_escape(row.result.expected) + "," + text::csv_escape(row.result.found) + "\n";
  return out;
}

// ---- run ----

struct RunRequest {
  fs::path data_dir;
  fs::path output_dir;
  std::string partition = "test";  // train | test | all
  EvalMode mode = EvalMode::direct;
  RunConfig config;
  backend::MockScope mock_scope = backend::MockScope::hops;
};

struct RunResult {
  std::vector<EvalOutcome> outcomes;
  scoring::ScoreSummary summary;
  bool live = false;
};

/// Selects the records of one partition, in the order of the partition files.
inline std::vector<SourceRecord> select_partition(const fs::path& data_dir, const std::string& partition,
                                                  std::vector<SourceRecord> sources) {
  if (partition == "all") return sources;
  datasetgen::Partition wanted;
  if (partition == "train")
    wanted = datasetgen::Partition::train;
  else if (partition == "test")
    wanted = datasetgen::Partition::test;
  else
    throw Error(ErrorKind::invalid_config, "partition must be train, test or all");
  const auto manifest_path = data_dir / files::manifest;
  if (!fs::exists(manifest_path)) throw Error(ErrorKind::missing_variant_file, manifest_path.string());
  auto manifest = datasetgen::parse_manifest_csv(text::read_file(manifest_path));
  const auto& ids = wanted == datasetgen::Partition::train ? manifest.train_ids : manifest.test_ids;
  std::map<std::string, SourceRecord> by_id;
  for (auto& r : sources) by_id.emplace(r.case_id, std::move(r));
  std::vector<SourceRecord> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorKind::malformed_syntax, "manifest case " + id + " missing from source");
    out.push_back(it->second);
  }
  return out;
}

inline std::vector<AlpacaRecord> single_hop_records(const fs::path& data_dir, const std::string& partition) {
  const auto name = partition == "all" ? std::string(files::single_hop)
                                       : files::partition_file("single", partition == "train" ? datasetgen::Partition::train
                                                                                              : datasetgen::Partition::test);
  const auto path = data_dir / name;
  if (!fs::exists(path)) throw Error(ErrorKind::missing_variant_file, path.string());
  return datasetgen::parse_dataset(path);
}

inline RunResult run(const RunRequest& req) {
  validate_run_config(req.config);
  auto all_sources = load_clean_source(req.data_dir);
  auto records = select_partition(req.data_dir, req.partition, all_sources);

  std::unique_ptr<backend::Backend> answerer;
  std::unique_ptr<backend::Backend> planner;
  if (req.config.is_mock()) {
    answerer = std::make_unique<backend::MockBackend>(backend::build_mock_from_records(all_sources, req.mock_scope));
    planner = std::make_unique<backend::ChainPlannerMock>(all_sources);
  } else {
    answerer = std::make_unique<backend::HttpBackend>(req.config.endpoint);
  }
  backend::Backend& plan_backend = planner ? *planner : *answerer;

  RunResult result;
  result.live = answerer->live();
  const auto n = records.size();
  switch (req.mode) {
    case EvalMode::direct: {
      auto alpaca = single_hop_records(req.data_dir, req.partition);
      if (alpaca.size() != n) throw Error(ErrorKind::malformed_syntax, "single-hop file and manifest disagree on size");
      result.outcomes = eval::run_ordered(n, req.config.parallelism, [&](std::size_t i) {
        return eval::run_direct(records[i].case_id, alpaca[i], records[i].final_answer_aliases, *answerer, req.config);
      });
      break;
    }
    case EvalMode::decomposed_scripted:
      result.outcomes = eval::run_ordered(n, req.config.parallelism, [&](std::size_t i) {
        return eval::run_decomposed_scripted(records[i], *answerer, req.config);
      });
      break;
    case EvalMode::decomposed_model: {
      eval::DecompositionProtocol proto;
      proto.max_hops = req.config.max_hops;
      result.outcomes = eval::run_ordered(n, req.config.parallelism, [&](std::size_t i) {
        return eval::run_decomposed_model(eval::task_from(records[i]), plan_backend, *answerer, proto, req.config);
      });
      break;
    }
  }
  result.summary = scoring::accuracy(result.outcomes, to_string(req.mode));

  eval::RunHeader header;
  header.mode = req.mode;
  header.backend = req.config.is_mock() ? "mock" : "http";
  header.endpoint = req.config.endpoint;
  header.model = req.config.model_name;
  header.live = result.live;
  header.seed = req.config.seed;
  header.temperature = req.config.temperature;
  header.max_hops = req.config.max_hops;
  text::write_file(req.output_dir / files::outcomes(req.mode), eval::serialize_outcome_log(header, result.outcomes));
  text::write_file(req.output_dir / files::transcripts(req.mode), eval::serialize_transcripts(result.outcomes));
  return result;
}

// ---- score / report ----

inline scoring::ScoreSummary summarize_log(const eval::OutcomeLog& log) {
  std::string label;
  if (log.header)
    label = to_string(log.header->mode);
  else if (!log.outcomes.empty())
    label = to_string(log.outcomes.front().mode);
  return scoring::accuracy(log.outcomes, label);
}

struct ReportFiles {
  std::string text;
  std::string markdown;
  std::string plot_csv;
};

inline void write_report(const ReportFiles& files_out, const fs::path& output_dir) {
  text::write_file(output_dir / files::report_txt, files_out.text);
  text::write_file(output_dir / files::report_md, files_out.markdown);
  text::write_file(output_dir / files::plot_csv, files_out.plot_csv);
}

inline bool is_single_hop(const scoring::ScoreSummary& s) { return s.label == to_string(EvalMode::direct); }

/// One log: per-mode summary only. Two logs: summary plus a comparison row;
/// the direct-mode log is the single-hop side when modes tell them apart,
/// otherwise the first log is.
inline ReportFiles score(std::span<const fs::path> logs, const std::string& label) {
  if (logs.empty() || logs.size() > 2) throw Error(ErrorKind::invalid_config, "score takes one or two outcome logs");
  std::vector<scoring::ScoreSummary> summaries;
  for (const auto& p : logs) summaries.push_back(summarize_log(eval::read_outcome_log(p)));
  ReportFiles out;
  out.text = report::render_summary_text(summaries);
  out.markdown = report::render_summary_markdown(summaries);
  std::vector<report::ReportRow> rows;
  if (summaries.size() == 2) {
    auto single = summaries[0];
    auto multi = summaries[1];
    if (!is_single_hop(single) && is_single_hop(multi)) std::swap(single, multi);
    rows.push_back(report::compare_report(single, multi, label));
    out.text += "\n" + report::render_text(rows);
    out.markdown += "\n" + report::render_markdown(rows);
  }
  out.plot_csv = report::plot_data_csv(rows);
  return out;
}

struct ReportSpec {
  std::string label;
  fs::path single_log;
  fs::path multi_log;
};

/// Multi-row comparison table, one row per configuration.
inline ReportFiles report_rows(std::span<const ReportSpec> specs) {
  std::vector<report::ReportRow> rows;
  for (const auto& s : specs) {
    auto single = summarize_log(eval::read_outcome_log(s.single_log));
    auto multi = summarize_log(eval::read_outcome_log(s.multi_log));
    rows.push_back(report::compare_report(single, multi, s.label));
  }
  return {report::render_text(rows), report::render_markdown(rows), report::plot_data_csv(rows)};
}

}  // namespace mhop::pipeline
