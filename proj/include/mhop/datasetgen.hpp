// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "mhop/error.hpp"
#include "mhop/model.hpp"
#include "mhop/text.hpp"

namespace mhop::datasetgen {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kDefaultInstruction =
    "Answer the question; reason step by step through the given sub-questions when provided, "
    "and output only the final answer.";

/// Slots: {question} in both framings, {chain} (numbered sub-question list) in the multi-hop one.
/// "{{" and "}}" render as literal braces.
struct PromptTemplate {
  std::string instruction_text = std::string(kDefaultInstruction);
  std::string multi_hop_framing = "Question: {question}\nDecomposition chain:\n{chain}";
  std::string direct_framing = "Question: {question}";
};

/// Substitutes {name} slots in one pass; substituted values are not rescanned.
/// An unbound or unterminated slot is an invalid-template error, so a
/// successful render never leaves placeholder markers behind.
inline std::string render(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& bindings) {
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    char c = tmpl[i];
    if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
      out += '{';
      ++i;
      continue;
    }
    if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
      out += '}';
      ++i;
      continue;
    }
    if (c != '{') {
      out += c;
      continue;
    }
    auto close = tmpl.find('}', i + 1);
    if (close == std::string_view::npos) throw Error(ErrorKind::invalid_template, "unterminated slot in template");
    auto name = tmpl.substr(i + 1, close - i - 1);
    auto it = bindings.find(name);
    if (it == bindings.end()) throw Error(ErrorKind::invalid_template, "unbound slot {" + std::string(name) + "}");
    out += it->second;
    i = close;
  }
  return out;
}

inline std::string numbered_chain(const SourceRecord& record) {
  std::vector<std::string> lines;
  for (std::size_t k = 0; k < record.hop_chain.size(); ++k)
    lines.push_back(std::to_string(k + 1) + ". " + record.hop_chain[k].question);
  return text::join(lines, "\n");
}

inline const std::string& primary_question(const SourceRecord& record) {
  if (record.question_variants.empty())
    throw Error(ErrorKind::precondition_violation, "case " + record.case_id + " has no question");
  return record.question_variants.front();
}

/// Multi-hop variant: the input carries the decomposition chain and the
/// history holds every hop except the last as (question, answer) pairs.
inline AlpacaRecord to_multi_hop(const SourceRecord& record, const PromptTemplate& tmpl = {}) {
  if (record.hop_chain.size() < 2)
    throw Error(ErrorKind::degenerate_chain, "case " + record.case_id + " has fewer than 2 hops");
  AlpacaRecord out;
  out.instruction = render(tmpl.instruction_text, {});
  out.input = render(tmpl.multi_hop_framing, {{"question", primary_question(record)}, {"chain", numbered_chain(record)}});
  out.output = record.final_answer;
  for (std::size_t k = 0; k + 1 < record.hop_chain.size(); ++k)
    out.history.push_back({record.hop_chain[k].question, record.hop_chain[k].answer});
  return out;
}

inline AlpacaRecord to_single_hop(const SourceRecord& record, const PromptTemplate& tmpl = {}) {
  AlpacaRecord out;
  out.instruction = render(tmpl.instruction_text, {});
  out.input = render(tmpl.direct_framing, {{"question", primary_question(record)}});
  out.output = record.final_answer;
  return out;
}

/// Counter-based SplitMix64 stream: value k depends only on (seed, k).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t at(std::uint64_t counter) const { return mix(seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL); }

  std::uint64_t next() { return at(counter_++); }

  /// Unbiased draw in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % bound;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

enum class Partition { train, test };

inline std::string to_string(Partition p) { return p == Partition::train ? "train" : "test"; }

struct SplitAssignment {
  std::map<std::string, Partition> partition_of;
  std::vector<std::string> train_ids;  // in input record order
  std::vector<std::string> test_ids;
  double ratio = 0.7;
  std::uint64_t seed = 0;

  bool operator==(const SplitAssignment&) const = default;
};

inline std::size_t train_size(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
}

/// Shuffles the sorted case ids with a seeded Fisher-Yates pass and puts the
/// first floor(ratio*N + 0.5) in train. Depends only on the id set, ratio and seed.
inline SplitAssignment split(std::span<const SourceRecord> records, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorKind::precondition_violation, "split ratio must be in (0, 1)");
  std::vector<std::string> ids;
  ids.reserve(records.size());
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.case_id).second) throw Error(ErrorKind::duplicate_case_id, r.case_id);
    ids.push_back(r.case_id);
  }
  std::vector<std::string> order(seen.begin(), seen.end());
  CounterRng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  SplitAssignment out;
  out.ratio = ratio;
  out.seed = seed;
  const auto n_train = train_size(ratio, order.size());
  for (std::size_t i = 0; i < order.size(); ++i) out.partition_of[order[i]] = i < n_train ? Partition::train : Partition::test;
  for (const auto& id : ids) (out.partition_of[id] == Partition::train ? out.train_ids : out.test_ids).push_back(id);
  return out;
}

/// Manifest rows follow the record order of the partition files: train rows first, then test.
inline std::string manifest_csv(const SplitAssignment& split) {
  std::string out = "case_id,partition,seed,ratio\n";
  const auto seed = std::to_string(split.seed);
  const auto ratio = text::format_double(split.ratio);
  for (const auto& id : split.train_ids) out += text::csv_escape(id) + ",train," + seed + "," + ratio + "\n";
  for (const auto& id : split.test_ids) out += text::csv_escape(id) + ",test," + seed + "," + ratio + "\n";
  return out;
}

inline SplitAssignment parse_manifest_csv(std::string_view csv) {
  auto rows = text::parse_csv(csv);
  if (rows.empty() || rows.front() != std::vector<std::string>{"case_id", "partition", "seed", "ratio"})
    throw Error(ErrorKind::malformed_syntax, "split manifest header must be case_id,partition,seed,ratio");
  SplitAssignment out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 4) throw Error(ErrorKind::malformed_syntax, "split manifest row " + std::to_string(i) + " needs 4 fields");
    Partition p;
    if (row[1] == "train")
      p = Partition::train;
    else if (row[1] == "test")
      p = Partition::test;
    else
      throw Error(ErrorKind::malformed_syntax, "unknown partition '" + row[1] + "'");
    out.partition_of[row[0]] = p;
    (p == Partition::train ? out.train_ids : out.test_ids).push_back(row[0]);
    try {
      out.seed = std::stoull(row[2]);
      out.ratio = std::stod(row[3]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::malformed_syntax, "split manifest row " + std::to_string(i) + " has a bad seed or ratio");
    }
  }
  return out;
}

inline Json to_json(const AlpacaRecord& r) {
  Json obj = Json::object();
  obj["instruction"] = r.instruction;
  obj["input"] = r.input;
  obj["output"] = r.output;
  Json history = Json::array();
  for (const auto& h : r.history) history.push_back(Json::array({h.question, h.answer}));
  obj["history"] = std::move(history);
  return obj;
}

inline std::string serialize_dataset(std::span<const AlpacaRecord> records) {
  Json arr = Json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return arr.dump(2) + "\n";
}

inline void emit_dataset(std::span<const AlpacaRecord> records, const std::filesystem::path& path) {
  text::write_file(path, serialize_dataset(records));
}

inline std::vector<AlpacaRecord> parse_dataset_text(std::string_view content) {
  Json doc;
  try {
    doc = Json::parse(content.begin(), content.end());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::malformed_syntax, "at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorKind::malformed_syntax, "dataset must be an array of objects");
  std::vector<AlpacaRecord> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    auto field = [&](const char* name) -> std::string {
      if (!obj.is_object() || !obj.contains(name))
        throw Error(ErrorKind::missing_required_field, "record " + std::to_string(i) + ": " + name);
      if (!obj.at(name).is_string()) throw Error(ErrorKind::malformed_syntax, "record " + std::to_string(i) + ": " + name + " must be a string");
      return obj.at(name).get<std::string>();
    };
    AlpacaRecord r;
    r.instruction = field("instruction");
    r.input = field("input");
    r.output = field("output");
    if (obj.contains("history")) {
      const auto& h = obj.at("history");
      if (!h.is_array()) throw Error(ErrorKind::malformed_syntax, "record " + std::to_string(i) + ": history must be an array");
      for (const auto& pair : h) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
          throw Error(ErrorKind::malformed_syntax, "record " + std::to_string(i) + ": history entries must be [question, answer]");
        r.history.push_back({pair[0].get<std::string>(), pair[1].get<std::string>()});
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<AlpacaRecord> parse_dataset(const std::filesystem::path& path) {
  return parse_dataset_text(text::read_file(path));
}

/// YAML float in the "1.0e-4" style: mantissa always has a dot, exponent always has a sign.
inline std::string yaml_float(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  if (ec != std::errc{}) throw Error(ErrorKind::invalid_config, "cannot format float");
  std::string s(buf, ptr);
  auto e = s.find('e');
  std::string mantissa = s.substr(0, e);
  int exponent = std::stoi(s.substr(e + 1));
  if (mantissa.find('.') == std::string::npos) mantissa += ".0";
  return mantissa + "e" + (exponent < 0 ? "-" : "+") + std::to_string(std::abs(exponent));
}

inline std::string yaml_string(std::string_view s) {
  bool plain = !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == '/';
  });
  if (plain) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

inline std::string train_config_yaml(const TrainConfigSpec& spec) {
  validate_train_config(spec);
  std::string out;
  out += "per_device_train_batch_size: " + std::to_string(spec.per_device_train_batch_size) + "\n";
  out += "gradient_accumulation_steps: " + std::to_string(spec.gradient_accumulation_steps) + "\n";
  out += "learning_rate: " + yaml_float(spec.learning_rate) + "\n";
  out += "num_train_epochs: " + std::to_string(spec.num_train_epochs) + "\n";
  out += "dataset_path: " + yaml_string(spec.dataset_path) + "\n";
  out += "output_dir: " + yaml_string(spec.output_dir) + "\n";
  return out;
}

inline void emit_train_config(const TrainConfigSpec& spec, const std::filesystem::path& path) {
  text::write_file(path, train_config_yaml(spec));
}

}  // namespace mhop::datasetgen
