// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "mhop/error.hpp"
#include "mhop/text.hpp"

namespace mhop::protocol {

// Line-initial, case-sensitive markers of the decomposition dialogue.
inline constexpr std::string_view kSubquestion = "Subquestion:";
inline constexpr std::string_view kIntermediate = "Intermediate answer:";
inline constexpr std::string_view kFinal = "Final answer:";
inline constexpr std::string_view kAnswer = "Answer:";
inline constexpr std::string_view kQuestion = "Question:";

enum class MarkerKind { subquestion, intermediate, final_answer };

struct Marker {
  MarkerKind kind;
  std::string payload;  // trimmed text after the marker
};

/// First line that starts with one of the three protocol markers.
inline std::optional<Marker> first_marker(std::string_view completion) {
  for (const auto& line : text::lines(completion)) {
    if (text::starts_with(line, kSubquestion)) return Marker{MarkerKind::subquestion, text::trim(line.substr(kSubquestion.size()))};
    if (text::starts_with(line, kIntermediate)) return Marker{MarkerKind::intermediate, text::trim(line.substr(kIntermediate.size()))};
    if (text::starts_with(line, kFinal)) return Marker{MarkerKind::final_answer, text::trim(line.substr(kFinal.size()))};
  }
  return std::nullopt;
}

/// Answer text of a completion: after the last line-initial "Final answer:",
/// else after the last line-initial "Answer:", else the last non-empty line.
inline std::string extract_answer(std::string_view completion) {
  const auto all = text::lines(completion);
  std::optional<std::string> final_answer;
  std::optional<std::string> answer;
  std::optional<std::string> last_line;
  for (const auto& line : all) {
    if (text::starts_with(line, kFinal)) final_answer = text::trim(line.substr(kFinal.size()));
    if (text::starts_with(line, kAnswer)) answer = text::trim(line.substr(kAnswer.size()));
    if (!text::blank(line)) last_line = text::trim(line);
  }
  if (final_answer) return *final_answer;
  if (answer) return *answer;
  if (last_line) return *last_line;
  throw Error(ErrorKind::empty_completion, "completion has no text");
}

}  // namespace mhop::protocol
