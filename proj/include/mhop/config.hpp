// SPDX-License-Identifier: Apache-2.0
//
// Pipeline configuration file. The accepted syntax is a TOML subset:
// [section] headers, `key = value` pairs, `#` comments; values are basic
// strings ("..." or multi-line """..."""), literal strings ('...'),
// integers, floats and booleans.
#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>

#include "mhop/datasetgen.hpp"
#include "mhop/error.hpp"
#include "mhop/model.hpp"
#include "mhop/text.hpp"

namespace mhop::config {

using Value = std::variant<std::string, std::int64_t, double, bool>;

/// Keys are "section.key" (or plain "key" before any section header).
using Table = std::map<std::string, Value>;

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Table parse() {
    Table out;
    std::string section;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        auto close = src_.find(']', pos_);
        if (close == std::string_view::npos) fail("unterminated section header");
        section = text::trim(src_.substr(pos_, close - pos_));
        if (section.empty()) fail("empty section name");
        pos_ = close + 1;
        expect_line_end();
        continue;
      }
      auto key = parse_key();
      skip_spaces();
      if (eof() || peek() != '=') fail("expected '=' after key '" + key + "'");
      ++pos_;
      skip_spaces();
      auto full = section.empty() ? key : section + "." + key;
      if (out.contains(full)) fail("duplicate key '" + full + "'");
      out[full] = parse_value();
      expect_line_end();
    }
    return out;
  }

 private:
  bool eof() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }

  [[noreturn]] void fail(const std::string& why) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < src_.size(); ++i)
      if (src_[i] == '\n') ++line;
    throw Error(ErrorKind::invalid_config, "config line " + std::to_string(line) + ": " + why);
  }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (!eof() && peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (!eof() && (peek() == '\n' || peek() == '\r')) {
        ++pos_;
        continue;
      }
      break;
    }
  }

  void expect_line_end() {
    skip_spaces();
    skip_comment();
    if (!eof() && peek() == '\r') ++pos_;
    if (!eof() && peek() != '\n') fail("unexpected text after value");
    if (!eof()) ++pos_;
  }

  std::string parse_key() {
    auto start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (start == pos_) fail("expected a key");
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string parse_escape() {
    if (eof()) fail("unterminated escape");
    char c = src_[pos_++];
    switch (c) {
      case 'n': return "\n";
      case 't': return "\t";
      case 'r': return "\r";
      case '"': return "\"";
      case '\\': return "\\";
      default: fail(std::string("unsupported escape \\") + c);
    }
  }

  Value parse_value() {
    if (eof()) fail("missing value");
    if (src_.substr(pos_, 3) == "\"\"\"") {
      pos_ += 3;
      if (!eof() && peek() == '\n') ++pos_;  // newline right after the opener is trimmed
      std::string out;
      while (true) {
        if (eof()) fail("unterminated multi-line string");
        if (src_.substr(pos_, 3) == "\"\"\"") {
          pos_ += 3;
          return out;
        }
        char c = src_[pos_++];
        if (c == '\\')
          out += parse_escape();
        else
          out += c;
      }
    }
    if (peek() == '"') {
      ++pos_;
      std::string out;
      while (true) {
        if (eof() || peek() == '\n') fail("unterminated string");
        char c = src_[pos_++];
        if (c == '"') return out;
        if (c == '\\')
          out += parse_escape();
        else
          out += c;
      }
    }
    if (peek() == '\'') {
      ++pos_;
      auto close = src_.find('\'', pos_);
      if (close == std::string_view::npos || src_.substr(pos_, close - pos_).find('\n') != std::string_view::npos)
        fail("unterminated literal string");
      std::string out(src_.substr(pos_, close - pos_));
      pos_ = close + 1;
      return out;
    }
    auto start = pos_;
    while (!eof() && peek() != '\n' && peek() != '#' && peek() != '\r') ++pos_;
    auto token = text::trim(src_.substr(start, pos_ - start));
    if (token == "true") return true;
    if (token == "false") return false;
    std::string digits;
    for (char c : token)
      if (c != '_') digits += c;
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), i);
    if (ec == std::errc{} && p == digits.data() + digits.size()) return i;
    double d = 0;
    auto [pd, ecd] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
    if (ecd == std::errc{} && pd == digits.data() + digits.size()) return d;
    fail("cannot parse value '" + token + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Table parse_table(std::string_view src) { return detail::Parser(src).parse(); }

struct PipelineConfig {
  std::string input_path;
  std::string output_dir = "out";
  double split_ratio = 0.7;
  std::uint64_t seed = 42;
  datasetgen::PromptTemplate templates;
  RunConfig run;
  std::string mock_scope = "hops";
  TrainConfigSpec train;
};

namespace detail {

inline std::string as_string(const std::string& key, const Value& v) {
  if (auto s = std::get_if<std::string>(&v)) return *s;
  throw Error(ErrorKind::invalid_config, key + " must be a string");
}

inline std::int64_t as_int(const std::string& key, const Value& v) {
  if (auto i = std::get_if<std::int64_t>(&v)) return *i;
  throw Error(ErrorKind::invalid_config, key + " must be an integer");
}

inline double as_real(const std::string& key, const Value& v) {
  if (auto d = std::get_if<double>(&v)) return *d;
  if (auto i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw Error(ErrorKind::invalid_config, key + " must be a number");
}

inline bool as_bool(const std::string& key, const Value& v) {
  if (auto b = std::get_if<bool>(&v)) return *b;
  throw Error(ErrorKind::invalid_config, key + " must be true or false");
}

}  // namespace detail

/// Applies a parsed table on top of `base`. Unknown keys are rejected.
inline PipelineConfig apply(const Table& table, PipelineConfig base = {}) {
  using namespace detail;
  auto& c = base;
  for (const auto& [key, v] : table) {
    if (key == "input_path") c.input_path = as_string(key, v);
    else if (key == "output_dir") c.output_dir = as_string(key, v);
    else if (key == "seed" || key == "split.seed") c.seed = static_cast<std::uint64_t>(as_int(key, v));
    else if (key == "split.ratio" || key == "ratio") c.split_ratio = as_real(key, v);
    else if (key == "templates.instruction") c.templates.instruction_text = as_string(key, v);
    else if (key == "templates.direct_framing") c.templates.direct_framing = as_string(key, v);
    else if (key == "templates.multi_hop_framing") c.templates.multi_hop_framing = as_string(key, v);
    else if (key == "run.endpoint") c.run.endpoint = as_string(key, v);
    else if (key == "run.model") c.run.model_name = as_string(key, v);
    else if (key == "run.temperature") c.run.temperature = as_real(key, v);
    else if (key == "run.max_tokens") c.run.max_tokens = static_cast<int>(as_int(key, v));
    else if (key == "run.max_hops") c.run.max_hops = static_cast<int>(as_int(key, v));
    else if (key == "run.parallelism") c.run.parallelism = static_cast<int>(as_int(key, v));
    else if (key == "run.timeout") c.run.timeout_seconds = as_real(key, v);
    else if (key == "run.retries") c.run.max_retries = static_cast<int>(as_int(key, v));
    else if (key == "run.backoff_ms") c.run.retry_backoff_ms = static_cast<int>(as_int(key, v));
    else if (key == "run.replay_history") c.run.replay_history = as_bool(key, v);
    else if (key == "run.mock_scope") c.mock_scope = as_string(key, v);
    else if (key == "train.per_device_train_batch_size") c.train.per_device_train_batch_size = static_cast<int>(as_int(key, v));
    else if (key == "train.gradient_accumulation_steps") c.train.gradient_accumulation_steps = static_cast<int>(as_int(key, v));
    else if (key == "train.learning_rate") c.train.learning_rate = as_real(key, v);
    else if (key == "train.num_train_epochs") c.train.num_train_epochs = static_cast<int>(as_int(key, v));
    else if (key == "train.dataset_path") c.train.dataset_path = as_string(key, v);
    else if (key == "train.output_dir") c.train.output_dir = as_string(key, v);
    else throw Error(ErrorKind::invalid_config, "unknown config key '" + key + "'");
  }
  c.run.seed = c.seed;
  return base;
}

inline PipelineConfig load(const std::filesystem::path& path, PipelineConfig base = {}) {
  return config::apply(parse_table(text::read_file(path)), std::move(base));
}

}  // namespace mhop::config
