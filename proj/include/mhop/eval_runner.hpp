// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "mhop/backend.hpp"
#include "mhop/error.hpp"
#include "mhop/log.hpp"
#include "mhop/model.hpp"
#include "mhop/protocol.hpp"
#include "mhop/scoring.hpp"
#include "mhop/text.hpp"

namespace mhop::eval {

using backend::Backend;
using backend::ChatMessage;
using backend::Role;

inline constexpr std::string_view kHopSystemPrompt = "Answer the question with only the answer entity.";

inline constexpr std::string_view kDecompositionInstructions =
    "Answer the question by breaking it into simpler subquestions, one at a time.\n"
    "Reply with exactly one line per turn:\n"
    "Subquestion: <a question about a single fact>\n"
    "You will receive the reply as a line starting with \"Intermediate answer:\".\n"
    "Once the intermediate answers determine the result, reply with:\n"
    "Final answer: <the answer>";

struct DecompositionProtocol {
  int max_hops = 4;
  std::string instructions = std::string(kDecompositionInstructions);
};

namespace detail {

/// Rethrows a library error with the case id prefixed; kind and status are kept.
[[noreturn]] inline void rethrow_for_case(const Error& e, const std::string& case_id) {
  const std::string msg = "case " + case_id + ": " + e.what();
  if (e.http_status()) throw Error(e.kind(), msg, *e.http_status());
  throw Error(e.kind(), msg);
}

inline std::string ask(Backend& b, std::span<const ChatMessage> messages, const RunConfig& config,
                       const std::string& case_id) {
  try {
    return b.complete(messages, config);
  } catch (const Error& e) {
    rethrow_for_case(e, case_id);
  }
}

inline void finish(EvalOutcome& o) { o.verdict = scoring::is_correct(o.prediction, o.gold, o.gold_aliases); }

}  // namespace detail

/// One exchange: instruction and input sent together as a single user prompt.
inline EvalOutcome run_direct(const std::string& case_id, const AlpacaRecord& record,
                              std::span<const std::string> gold_aliases, Backend& backend, const RunConfig& config) {
  if (!record.history.empty())
    throw Error(ErrorKind::precondition_violation, "case " + case_id + ": direct runs need a single-hop record");
  EvalOutcome o;
  o.case_id = case_id;
  o.mode = EvalMode::direct;
  o.gold = record.output;
  o.gold_aliases.assign(gold_aliases.begin(), gold_aliases.end());
  const std::vector<ChatMessage> messages{{Role::user, record.instruction + "\n\n" + record.input}};
  auto completion = detail::ask(backend, messages, config, case_id);
  o.transcript.push_back({record.input, completion});
  o.hop_count = 1;
  try {
    o.prediction = protocol::extract_answer(completion);
  } catch (const Error& e) {
    o.diagnostic = e.what();
  }
  detail::finish(o);
  return o;
}

/// Asks the gold hop questions in order, one exchange each. From the second
/// hop on, the previous gold answer inside the question is replaced by the
/// answer the backend actually gave.
inline EvalOutcome run_decomposed_scripted(const SourceRecord& record, Backend& backend, const RunConfig& config) {
  const auto hops = record.hop_chain.size();
  if (hops < 2 || hops > static_cast<std::size_t>(config.max_hops))
    throw Error(ErrorKind::precondition_violation, "case " + record.case_id + ": " + std::to_string(hops) +
                                                       " hops is outside [2, max_hops=" + std::to_string(config.max_hops) + "]");
  EvalOutcome o;
  o.case_id = record.case_id;
  o.mode = EvalMode::decomposed_scripted;
  o.gold = record.final_answer;
  o.gold_aliases = record.final_answer_aliases;

  std::vector<ChatMessage> replay;
  std::string previous_answer;
  for (std::size_t k = 0; k < hops; ++k) {
    std::string question = record.hop_chain[k].question;
    if (k > 0) {
      const auto& gold_previous = record.hop_chain[k - 1].answer;
      if (previous_answer != gold_previous) {
        if (question.find(gold_previous) != std::string::npos) {
          question = text::replace_all(question, gold_previous, previous_answer);
        } else {
          log::info("case " + record.case_id + ": hop " + std::to_string(k + 1) + " question does not mention '" +
                    gold_previous + "', asked unchanged");
          o.diagnostic += "substitution-miss at hop " + std::to_string(k + 1) + "; ";
        }
      }
    }
    std::vector<ChatMessage> messages{{Role::system, std::string(kHopSystemPrompt)}};
    if (config.replay_history) messages.insert(messages.end(), replay.begin(), replay.end());
    messages.push_back({Role::user, question});

    auto completion = detail::ask(backend, messages, config, record.case_id);
    o.transcript.push_back({question, completion});
    o.hop_count = static_cast<int>(k) + 1;
    try {
      previous_answer = protocol::extract_answer(completion);
    } catch (const Error& e) {
      o.diagnostic += std::string(e.what()) + " at hop " + std::to_string(k + 1);
      o.prediction.clear();
      detail::finish(o);
      return o;
    }
    replay.push_back({Role::user, question});
    replay.push_back({Role::assistant, previous_answer});
  }
  o.prediction = previous_answer;
  detail::finish(o);
  return o;
}

struct DecomposedTask {
  std::string case_id;
  std::string question;
  std::string gold;
  std::vector<std::string> gold_aliases;
};

inline DecomposedTask task_from(const SourceRecord& r) {
  return {r.case_id, r.question_variants.empty() ? std::string() : r.question_variants.front(), r.final_answer,
          r.final_answer_aliases};
}

/// Model-driven decomposition. Each iteration sends the protocol instructions
/// and the dialogue so far to `planner`; a Subquestion is answered by a
/// separate call to `answerer` and fed back as an Intermediate answer. Stops
/// on Final answer, on a completion without any marker (protocol violation),
/// or after protocol.max_hops iterations (truncated; the last intermediate
/// answer becomes the prediction).
inline EvalOutcome run_decomposed_model(const DecomposedTask& task, Backend& planner, Backend& answerer,
                                        const DecompositionProtocol& proto, const RunConfig& config) {
  if (text::blank(task.question))
    throw Error(ErrorKind::precondition_violation, "case " + task.case_id + ": question must not be empty");
  if (proto.max_hops < 1) throw Error(ErrorKind::invalid_config, "max_hops must be >= 1");
  EvalOutcome o;
  o.case_id = task.case_id;
  o.mode = EvalMode::decomposed_model;
  o.gold = task.gold;
  o.gold_aliases = task.gold_aliases;

  std::string dialogue = std::string(protocol::kQuestion) + " " + task.question;
  std::optional<std::string> last_intermediate;
  bool finished = false;
  for (int iteration = 1; iteration <= proto.max_hops; ++iteration) {
    o.hop_count = iteration;
    const std::vector<ChatMessage> plan_messages{{Role::system, proto.instructions}, {Role::user, dialogue}};
    auto completion = detail::ask(planner, plan_messages, config, task.case_id);
    o.transcript.push_back({dialogue, completion});

    auto marker = protocol::first_marker(completion);
    if (!marker || marker->kind == protocol::MarkerKind::intermediate) {
      o.diagnostic = "protocol-violation: no Subquestion or Final answer line at iteration " + std::to_string(iteration);
      o.prediction.clear();
      finished = true;
      break;
    }
    if (marker->kind == protocol::MarkerKind::final_answer) {
      o.prediction = marker->payload;
      finished = true;
      break;
    }
    const std::vector<ChatMessage> sub_messages{{Role::system, std::string(kHopSystemPrompt)},
                                                {Role::user, marker->payload}};
    auto sub_completion = detail::ask(answerer, sub_messages, config, task.case_id);
    o.transcript.push_back({marker->payload, sub_completion});
    std::string answer;
    try {
      answer = protocol::extract_answer(sub_completion);
    } catch (const Error&) {
      answer.clear();
    }
    last_intermediate = answer;
    dialogue += "\n" + std::string(protocol::kSubquestion) + " " + marker->payload;
    dialogue += "\n" + std::string(protocol::kIntermediate) + " " + answer;
  }
  if (!finished) {
    o.truncated = true;
    o.prediction = last_intermediate.value_or("");
    o.diagnostic = "truncated after " + std::to_string(proto.max_hops) + " iterations";
  }
  detail::finish(o);
  return o;
}

/// Runs fn(0..n-1) on up to `parallelism` threads; results keep index order.
/// If any call throws, the exception from the lowest index is rethrown.
template <class Fn>
auto run_ordered(std::size_t n, int parallelism, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using T = decltype(fn(std::size_t{}));
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(parallelism, 1)), std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---- outcome log files ----

using Json = nlohmann::ordered_json;

struct RunHeader {
  EvalMode mode = EvalMode::direct;
  std::string backend = "mock";
  std::string endpoint;
  std::string model;
  bool live = false;
  std::uint64_t seed = 0;
  double temperature = 0.0;
  int max_hops = 0;
};

inline Json header_json(const RunHeader& h) {
  return Json{{"run_header",
               {{"mode", to_string(h.mode)},
                {"backend", h.backend},
                {"endpoint", h.endpoint},
                {"model", h.model},
                {"live", h.live},
                {"seed", h.seed},
                {"temperature", h.temperature},
                {"max_hops", h.max_hops}}}};
}

inline Json outcome_json(const EvalOutcome& o) {
  return Json{{"case_id", o.case_id},       {"mode", to_string(o.mode)}, {"prediction", o.prediction},
              {"verdict", o.verdict},       {"hop_count", o.hop_count},  {"truncated", o.truncated}};
}

inline Json transcript_json(const EvalOutcome& o) {
  Json exchanges = Json::array();
  for (const auto& e : o.transcript) exchanges.push_back({{"prompt", e.prompt}, {"completion", e.completion}});
  return Json{{"case_id", o.case_id},   {"mode", to_string(o.mode)},        {"gold", o.gold},
              {"gold_aliases", o.gold_aliases}, {"diagnostic", o.diagnostic}, {"transcript", std::move(exchanges)}};
}

/// Line-delimited: a run_header line, then one line per outcome.
inline std::string serialize_outcome_log(const RunHeader& header, std::span<const EvalOutcome> outcomes) {
  std::string out = header_json(header).dump() + "\n";
  for (const auto& o : outcomes) out += outcome_json(o).dump() + "\n";
  return out;
}

inline std::string serialize_transcripts(std::span<const EvalOutcome> outcomes) {
  std::string out;
  for (const auto& o : outcomes) out += transcript_json(o).dump() + "\n";
  return out;
}

struct OutcomeLog {
  std::optional<RunHeader> header;
  std::vector<EvalOutcome> outcomes;  // gold and transcript are not part of the log
};

inline OutcomeLog parse_outcome_log(std::string_view content) {
  OutcomeLog log;
  std::size_t line_no = 0;
  for (const auto& line : text::lines(content)) {
    ++line_no;
    if (text::blank(line)) continue;
    auto fail = [&](const std::string& why) -> Error {
      return Error(ErrorKind::malformed_log, "line " + std::to_string(line_no) + ": " + why);
    };
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw fail(e.what());
    }
    if (!j.is_object()) throw fail("expected an object");
    try {
      if (j.contains("run_header")) {
        const auto& h = j.at("run_header");
        RunHeader rh;
        rh.mode = parse_eval_mode(h.at("mode").get<std::string>());
        rh.backend = h.value("backend", "");
        rh.endpoint = h.value("endpoint", "");
        rh.model = h.value("model", "");
        rh.live = h.value("live", false);
        rh.seed = h.value("seed", std::uint64_t{0});
        rh.temperature = h.value("temperature", 0.0);
        rh.max_hops = h.value("max_hops", 0);
        log.header = rh;
        continue;
      }
      EvalOutcome o;
      o.case_id = j.at("case_id").get<std::string>();
      o.mode = parse_eval_mode(j.at("mode").get<std::string>());
      o.prediction = j.at("prediction").get<std::string>();
      o.verdict = j.at("verdict").get<bool>();
      o.hop_count = j.at("hop_count").get<int>();
      o.truncated = j.at("truncated").get<bool>();
      log.outcomes.push_back(std::move(o));
    } catch (const Json::exception& e) {
      throw fail(e.what());
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  return log;
}

inline OutcomeLog read_outcome_log(const std::filesystem::path& path) {
  try {
    return parse_outcome_log(text::read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::malformed_log) throw Error(ErrorKind::malformed_log, path.string() + ": " + e.what());
    throw;
  }
}

}  // namespace mhop::eval
