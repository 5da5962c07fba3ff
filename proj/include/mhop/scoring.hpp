// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "mhop/model.hpp"

namespace mhop::scoring {

namespace detail {

inline bool is_ws(UChar32 c) { return u_isUWhiteSpace(c) || u_isspace(c); }

inline std::u32string fold_and_compose(std::string_view input) {
  auto us = icu::UnicodeString::fromUTF8(icu::StringPiece(input.data(), static_cast<int32_t>(input.size())));
  us.foldCase(U_FOLD_CASE_DEFAULT);
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_SUCCESS(status)) {
    auto composed = nfc->normalize(us, status);
    if (U_SUCCESS(status)) us = composed;
  }
  std::u32string out;
  out.reserve(static_cast<std::size_t>(us.length()));
  for (int32_t i = 0; i < us.length(); i = us.moveIndex32(i, 1)) out.push_back(static_cast<char32_t>(us.char32At(i)));
  return out;
}

inline void collapse_whitespace(std::u32string& s) {
  std::u32string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char32_t c : s) {
    if (is_ws(static_cast<UChar32>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  s = std::move(out);
}

inline void strip_edge_punctuation(std::u32string& s) {
  auto edge = [](char32_t c) { return u_ispunct(static_cast<UChar32>(c)) || is_ws(static_cast<UChar32>(c)); };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && edge(s[b])) ++b;
  while (e > b && edge(s[e - 1])) --e;
  s = s.substr(b, e - b);
}

inline void strip_leading_article(std::u32string& s) {
  for (std::u32string_view article : {U"the ", U"an ", U"a "}) {
    if (s.size() > article.size() && std::u32string_view(s).substr(0, article.size()) == article) {
      s.erase(0, article.size());
      return;
    }
  }
}

inline std::string to_utf8(const std::u32string& s) {
  icu::UnicodeString us;
  for (char32_t c : s) us.append(static_cast<UChar32>(c));
  std::string out;
  us.toUTF8String(out);
  return out;
}

inline std::string normalize_once(std::string_view input) {
  auto s = fold_and_compose(input);
  collapse_whitespace(s);
  strip_edge_punctuation(s);
  strip_leading_article(s);
  strip_edge_punctuation(s);
  return to_utf8(s);
}

}  // namespace detail

/// Canonical matching form: Unicode case fold + NFC, whitespace collapsed,
/// edge punctuation and one leading English article removed. Applied until
/// a fixpoint so that normalize(normalize(x)) == normalize(x).
inline std::string normalize(std::string_view input) {
  std::string current = detail::normalize_once(input);
  for (int guard = 0; guard < 64; ++guard) {
    std::string next = detail::normalize_once(current);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

/// Full-string match of the prediction against the gold label or any alias, after normalization.
inline bool is_correct(std::string_view prediction, std::string_view gold, std::span<const std::string> aliases) {
  const auto p = normalize(prediction);
  if (p == normalize(gold)) return true;
  for (const auto& a : aliases)
    if (p == normalize(a)) return true;
  return false;
}

struct ScoreSummary {
  std::string label;
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;  // in [0, 1]
  bool empty = true;      // total == 0; accuracy is then reported as 0

  bool operator==(const ScoreSummary&) const = default;
};

inline ScoreSummary summarize(std::string label, std::size_t total, std::size_t correct) {
  ScoreSummary s;
  s.label = std::move(label);
  s.total = total;
  s.correct = correct;
  s.empty = total == 0;
  s.accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  return s;
}

inline ScoreSummary accuracy(std::span<const EvalOutcome> outcomes, std::string label = {}) {
  std::size_t correct = 0;
  for (const auto& o : outcomes)
    if (o.verdict) ++correct;
  return summarize(std::move(label), outcomes.size(), correct);
}

}  // namespace mhop::scoring
