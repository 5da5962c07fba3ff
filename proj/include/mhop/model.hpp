// SPDX-License-Identifier: Apache-2.0
//
// Shared domain types for the multi-hop QA pipeline. All types are plain
// values; once built they are never mutated in place by library code, so
// they can be shared freely between worker threads.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mhop/error.hpp"
#include "mhop/text.hpp"

namespace mhop {

struct FactTriple {
  std::string subject;
  std::string relation;
  std::string object;

  bool operator==(const FactTriple&) const = default;
};

/// A fact rewrite: (subject, relation) now points at new_object instead of old_object.
struct EditSpec {
  std::string subject;
  std::string relation;
  std::string old_object;
  std::string new_object;

  bool operator==(const EditSpec&) const = default;
};

struct HopStep {
  int index = 0;  // 1-based
  std::string question;
  std::string answer;
  std::vector<std::string> answer_aliases;
  std::optional<FactTriple> triple;

  bool operator==(const HopStep&) const = default;
};

/// Unrecognized source fields, kept in source order as (key, compact JSON text).
using Extras = std::vector<std::pair<std::string, std::string>>;

struct SourceRecord {
  std::string case_id;
  std::vector<std::string> question_variants;
  std::string final_answer;
  std::vector<std::string> final_answer_aliases;
  std::vector<HopStep> hop_chain;
  std::vector<EditSpec> edits;
  Extras extras;

  bool operator==(const SourceRecord&) const = default;

  bool all_hops_have_triples() const {
    if (hop_chain.empty()) return false;
    for (const auto& h : hop_chain)
      if (!h.triple) return false;
    return true;
  }
};

struct QaPair {
  std::string question;
  std::string answer;

  bool operator==(const QaPair&) const = default;
};

/// One instruction-tuning instance in Alpaca layout.
struct AlpacaRecord {
  std::string instruction;
  std::string input;
  std::string output;
  std::vector<QaPair> history;

  bool operator==(const AlpacaRecord&) const = default;
};

enum class EvalMode { direct, decomposed_scripted, decomposed_model };

inline std::string to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::direct: return "direct";
    case EvalMode::decomposed_scripted: return "decomposed-scripted";
    case EvalMode::decomposed_model: return "decomposed-model";
  }
  return "direct";
}

inline EvalMode parse_eval_mode(std::string_view s) {
  if (s == "direct") return EvalMode::direct;
  if (s == "decomposed-scripted") return EvalMode::decomposed_scripted;
  if (s == "decomposed-model") return EvalMode::decomposed_model;
  throw Error(ErrorKind::invalid_config, "unknown mode '" + std::string(s) + "'");
}

struct Exchange {
  std::string prompt;  // summary of what was asked
  std::string completion;

  bool operator==(const Exchange&) const = default;
};

struct EvalOutcome {
  std::string case_id;
  EvalMode mode = EvalMode::direct;
  std::string prediction;
  std::string gold;
  std::vector<std::string> gold_aliases;
  bool verdict = false;
  std::vector<Exchange> transcript;
  int hop_count = 0;
  bool truncated = false;
  std::string diagnostic;

  bool operator==(const EvalOutcome&) const = default;
};

inline constexpr std::string_view kMockEndpoint = "mock";

struct RunConfig {
  std::string endpoint = std::string(kMockEndpoint);
  std::string model_name = "mock";
  double temperature = 0.0;
  int max_tokens = 256;
  int max_hops = 4;
  int parallelism = 1;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  int retry_backoff_ms = 500;  // first backoff; doubles per retry
  std::uint64_t seed = 42;
  bool replay_history = false;  // scripted mode: replay earlier hops as prior turns

  bool is_mock() const { return endpoint == kMockEndpoint; }
};

inline void validate_run_config(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::invalid_config, m); };
  if (c.endpoint.empty()) fail("endpoint must not be empty");
  if (!(c.temperature >= 0.0) || !std::isfinite(c.temperature)) fail("temperature must be >= 0");
  if (c.max_tokens < 1) fail("max_tokens must be >= 1");
  if (c.max_hops < 1) fail("max_hops must be >= 1");
  if (c.parallelism < 1) fail("parallelism must be >= 1");
  if (!(c.timeout_seconds > 0.0)) fail("timeout_seconds must be > 0");
  if (c.max_retries < 0) fail("max_retries must be >= 0");
  if (c.retry_backoff_ms < 0) fail("retry_backoff_ms must be >= 0");
}

/// Fine-tuning hyperparameters. Defaults: batch 1, accumulation 8, lr 1e-4, 2 epochs.
struct TrainConfigSpec {
  int per_device_train_batch_size = 1;
  int gradient_accumulation_steps = 8;
  double learning_rate = 1.0e-4;
  int num_train_epochs = 2;
  std::string dataset_path;
  std::string output_dir;

  bool operator==(const TrainConfigSpec&) const = default;
};

inline void validate_train_config(const TrainConfigSpec& s) {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::invalid_config, m); };
  if (s.per_device_train_batch_size < 1) fail("per_device_train_batch_size must be >= 1");
  if (s.gradient_accumulation_steps < 1) fail("gradient_accumulation_steps must be >= 1");
  if (!(s.learning_rate > 0.0) || !std::isfinite(s.learning_rate)) fail("learning_rate must be > 0");
  if (s.num_train_epochs < 1) fail("num_train_epochs must be >= 1");
}

struct Violation {
  std::string field;
  std::string rule;

  bool operator==(const Violation&) const = default;
};

inline std::string describe(const Violation& v) { return v.field + ": " + v.rule; }

namespace detail {

inline void check_triple(const FactTriple& t, const std::string& where, std::vector<Violation>& out) {
  if (text::blank(t.subject)) out.push_back({where + ".subject", "empty field"});
  if (text::blank(t.relation)) out.push_back({where + ".relation", "empty field"});
  if (text::blank(t.object)) out.push_back({where + ".object", "empty field"});
}

}  // namespace detail

/// Reports every broken record invariant. Never throws.
inline std::vector<Violation> validate(const SourceRecord& r) {
  std::vector<Violation> out;
  if (text::blank(r.case_id)) out.push_back({"case_id", "empty field"});

  if (r.question_variants.empty()) out.push_back({"question_variants", "empty list"});
  for (std::size_t i = 0; i < r.question_variants.size(); ++i)
    if (text::blank(r.question_variants[i]))
      out.push_back({"question_variants[" + std::to_string(i) + "]", "empty field"});

  if (text::blank(r.final_answer)) out.push_back({"final_answer", "empty field"});

  if (r.hop_chain.size() < 2) out.push_back({"hop_chain", "chain length < 2"});

  bool contiguous = true;
  for (std::size_t i = 0; i < r.hop_chain.size(); ++i) {
    const auto& h = r.hop_chain[i];
    const auto where = "hop_chain[" + std::to_string(i) + "]";
    if (h.index != static_cast<int>(i) + 1) contiguous = false;
    if (text::blank(h.question)) out.push_back({where + ".question", "empty field"});
    if (text::blank(h.answer)) out.push_back({where + ".answer", "empty field"});
    if (h.triple) detail::check_triple(*h.triple, where + ".triple", out);
  }
  if (!contiguous) out.push_back({"hop_chain", "non-contiguous hop indices"});

  if (!r.hop_chain.empty() && !r.final_answer.empty()) {
    const auto& last = r.hop_chain.back();
    bool matches = last.answer == r.final_answer;
    for (const auto& a : last.answer_aliases) matches = matches || a == r.final_answer;
    if (!matches) out.push_back({"final_answer", "final-answer/chain mismatch"});
  }

  if (r.all_hops_have_triples()) {
    for (std::size_t i = 0; i + 1 < r.hop_chain.size(); ++i) {
      if (r.hop_chain[i].triple->object != r.hop_chain[i + 1].triple->subject) {
        out.push_back({"hop_chain[" + std::to_string(i + 1) + "].triple.subject", "chain connectivity broken"});
      }
    }
  }

  if (r.edits.empty()) out.push_back({"edits", "empty list"});
  for (std::size_t i = 0; i < r.edits.size(); ++i) {
    const auto& e = r.edits[i];
    const auto where = "edits[" + std::to_string(i) + "]";
    if (text::blank(e.subject)) out.push_back({where + ".subject", "empty field"});
    if (text::blank(e.relation)) out.push_back({where + ".relation", "empty field"});
    if (text::blank(e.new_object)) out.push_back({where + ".new_object", "empty field"});
    if (e.new_object == e.old_object) out.push_back({where, "edit does not change fact"});
  }
  return out;
}

}  // namespace mhop
