// SPDX-License-Identifier: Apache-2.0
//
// Completion backends. A backend turns an ordered list of chat messages into
// one completion string. The deterministic mocks here answer from a lookup
// table built from the dataset itself; http_backend.hpp talks to a live
// chat-completions server.
#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "mhop/error.hpp"
#include "mhop/log.hpp"
#include "mhop/model.hpp"
#include "mhop/protocol.hpp"
#include "mhop/scoring.hpp"
#include "mhop/text.hpp"

namespace mhop::backend {

enum class Role { system, user, assistant };

inline std::string to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

inline void check_messages(std::span<const ChatMessage> messages) {
  if (messages.empty()) throw Error(ErrorKind::precondition_violation, "no messages to complete");
  for (const auto& m : messages)
    if (m.role == Role::user && m.content.empty())
      throw Error(ErrorKind::precondition_violation, "user message content must not be empty");
}

/// Implementations must tolerate concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(std::span<const ChatMessage> messages, const RunConfig& config) = 0;
  /// True when completions come from a real model server.
  virtual bool live() const { return false; }
};

inline const ChatMessage* last_user_message(std::span<const ChatMessage> messages) {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it)
    if (it->role == Role::user) return &*it;
  return nullptr;
}

/// Lookup candidates for a prompt, most specific first: the whole message,
/// then each line from the bottom up, each also with a leading "Label:" removed.
inline std::vector<std::string> query_candidates(std::string_view message) {
  std::vector<std::string> out{std::string(message)};
  auto all = text::lines(message);
  for (auto it = all.rbegin(); it != all.rend(); ++it) {
    if (text::blank(*it)) continue;
    out.push_back(*it);
    auto colon = it->find(':');
    if (colon != std::string::npos && colon > 0 && colon <= 32 && colon + 1 < it->size()) {
      std::string_view label(it->data(), colon);
      bool word_label = std::all_of(label.begin(), label.end(), [](char c) {
        return std::isalpha(static_cast<unsigned char>(c)) || c == ' ';
      });
      if (word_label) out.push_back(text::trim(std::string_view(*it).substr(colon + 1)));
    }
  }
  return out;
}

/// normalized question -> answer, with a fallback so lookup is total.
class MockKnowledge {
 public:
  explicit MockKnowledge(std::string fallback = "UNKNOWN") : fallback_(std::move(fallback)) {}

  /// First mapping for a normalized question wins; returns false on a collision.
  bool add(std::string_view question, std::string answer) {
    return map_.try_emplace(scoring::normalize(question), std::move(answer)).second;
  }

  std::optional<std::string> find(std::string_view question) const {
    auto it = map_.find(scoring::normalize(question));
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& lookup(std::string_view question) const {
    auto it = map_.find(scoring::normalize(question));
    return it == map_.end() ? fallback_ : it->second;
  }

  bool knows(std::string_view question) const { return map_.contains(scoring::normalize(question)); }
  std::size_t size() const { return map_.size(); }
  const std::string& fallback() const { return fallback_; }

 private:
  std::unordered_map<std::string, std::string> map_;
  std::string fallback_;
};

enum class MockScope { hops, direct };

inline MockScope parse_mock_scope(std::string_view s) {
  if (s == "hops") return MockScope::hops;
  if (s == "direct") return MockScope::direct;
  throw Error(ErrorKind::invalid_config, "mock scope must be 'hops' or 'direct', got '" + std::string(s) + "'");
}

/// hops: every hop question -> its hop answer. direct: every question variant -> final answer.
inline MockKnowledge build_mock_from_records(std::span<const SourceRecord> records, MockScope scope) {
  MockKnowledge k;
  for (const auto& r : records) {
    if (scope == MockScope::hops) {
      for (const auto& h : r.hop_chain) k.add(h.question, h.answer);
    } else {
      for (const auto& q : r.question_variants) k.add(q, r.final_answer);
    }
  }
  return k;
}

/// Answers from the last user message only; system text is ignored.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockKnowledge knowledge) : knowledge_(std::move(knowledge)) {}

  std::string complete(std::span<const ChatMessage> messages, const RunConfig&) override {
    check_messages(messages);
    const auto* user = last_user_message(messages);
    if (!user) return knowledge_.fallback();
    for (const auto& candidate : query_candidates(user->content))
      if (auto hit = knowledge_.find(candidate)) return *hit;
    return knowledge_.fallback();
  }

  const MockKnowledge& knowledge() const { return knowledge_; }

 private:
  MockKnowledge knowledge_;
};

/// Plays the decomposing model in the Subquestion / Intermediate answer /
/// Final answer dialogue using each record's gold hop questions. The prior
/// gold hop answer inside the next hop question is replaced by whatever
/// intermediate answer the dialogue actually received.
class ChainPlannerMock final : public Backend {
 public:
  explicit ChainPlannerMock(std::span<const SourceRecord> records) {
    for (const auto& r : records)
      for (const auto& q : r.question_variants) chains_.try_emplace(scoring::normalize(q), r.hop_chain);
  }

  std::string complete(std::span<const ChatMessage> messages, const RunConfig&) override {
    check_messages(messages);
    const auto* user = last_user_message(messages);
    if (!user) return kNoPlan;
    const std::vector<HopStep>* chain = nullptr;
    std::vector<std::string> received;
    for (const auto& line : text::lines(user->content)) {
      if (text::starts_with(line, protocol::kQuestion) && !chain) {
        auto it = chains_.find(scoring::normalize(line.substr(protocol::kQuestion.size())));
        if (it != chains_.end()) chain = &it->second;
      } else if (text::starts_with(line, protocol::kIntermediate)) {
        received.push_back(text::trim(line.substr(protocol::kIntermediate.size())));
      }
    }
    if (!chain) return kNoPlan;
    const auto k = received.size();
    if (k >= chain->size()) return std::string(protocol::kFinal) + " " + received.back();
    std::string next = (*chain)[k].question;
    if (k > 0) next = text::replace_all(next, (*chain)[k - 1].answer, received.back());
    return std::string(protocol::kSubquestion) + " " + next;
  }

 private:
  static constexpr const char* kNoPlan = "I cannot decompose this question.";
  std::unordered_map<std::string, std::vector<HopStep>> chains_;
};

inline bool is_transient(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::endpoint_unreachable:
    case ErrorKind::timeout:
      return true;
    case ErrorKind::http_error: {
      auto status = e.http_status().value_or(0);
      return status >= 500 || status == 429 || status == 408;
    }
    default:
      return false;
  }
}

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

/// Runs `attempt` up to 1 + max_retries times, sleeping backoff, 2*backoff,
/// 4*backoff, ... between transient failures. Non-transient errors escape
/// immediately.
template <class Attempt>
std::string call_with_retries(Attempt&& attempt, const RunConfig& config, const Sleeper& sleep = real_sleep) {
  const int max_attempts = 1 + config.max_retries;
  std::chrono::milliseconds delay(config.retry_backoff_ms);
  for (int n = 1;; ++n) {
    try {
      return attempt();
    } catch (const Error& e) {
      if (!is_transient(e)) throw;
      if (n >= max_attempts) {
        if (config.max_retries == 0) throw;
        if (e.http_status())
          throw Error(ErrorKind::retries_exhausted, std::to_string(n) + " attempts, last: " + e.what(), *e.http_status());
        throw Error(ErrorKind::retries_exhausted, std::to_string(n) + " attempts, last: " + e.what());
      }
      log::warning("backend attempt " + std::to_string(n) + " failed (" + e.what() + "), retrying in " +
                   std::to_string(delay.count()) + " ms");
      if (delay.count() > 0) sleep(delay);
      delay *= 2;
    }
  }
}

}  // namespace mhop::backend
