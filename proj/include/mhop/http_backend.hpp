// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "mhop/backend.hpp"

namespace mhop::backend {

struct Endpoint {
  std::string origin;     // scheme://host[:port]
  std::string base_path;  // without trailing slash, may be empty
};

inline Endpoint parse_endpoint(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos || (url.substr(0, scheme_end) != "http" && url.substr(0, scheme_end) != "https"))
    throw Error(ErrorKind::invalid_config, "endpoint must be an http(s) URL or 'mock': " + std::string(url));
  auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = std::string(url.substr(0, path_start));
  if (path_start != std::string_view::npos) ep.base_path = std::string(url.substr(path_start));
  while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  if (ep.origin.size() <= scheme_end + 3) throw Error(ErrorKind::invalid_config, "endpoint has no host: " + std::string(url));
  return ep;
}

/// Chat-completions request body; a pure function of (messages, config).
inline nlohmann::ordered_json request_body(std::span<const ChatMessage> messages, const RunConfig& config) {
  nlohmann::ordered_json body;
  body["model"] = config.model_name;
  auto msgs = nlohmann::ordered_json::array();
  for (const auto& m : messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  body["messages"] = std::move(msgs);
  body["temperature"] = config.temperature;
  body["max_tokens"] = config.max_tokens;
  return body;
}

/// Content of the first choice's message.
inline std::string parse_completion_response(std::string_view body) {
  try {
    auto doc = nlohmann::json::parse(body.begin(), body.end());
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_syntax, std::string("unexpected chat-completions response: ") + e.what());
  }
}

/// POST <endpoint>/chat/completions with bearer auth from MHOP_API_KEY.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(std::string endpoint, Sleeper sleep = real_sleep)
      : endpoint_(parse_endpoint(endpoint)), sleep_(std::move(sleep)) {
    if (const char* key = std::getenv("MHOP_API_KEY")) api_key_ = key;
  }

  std::string complete(std::span<const ChatMessage> messages, const RunConfig& config) override {
    check_messages(messages);
    const auto payload = request_body(messages, config).dump();
    return call_with_retries([&] { return attempt(payload, config); }, config, sleep_);
  }

  bool live() const override { return true; }

  /// Total HTTP requests issued so far, across all calls.
  int attempts() const { return attempts_.load(); }

 private:
  std::string attempt(const std::string& payload, const RunConfig& config) {
    ++attempts_;
    httplib::Client client(endpoint_.origin);
    const auto timeout = std::chrono::milliseconds(static_cast<long long>(config.timeout_seconds * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(endpoint_.base_path + "/chat/completions", headers, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      const auto what = httplib::to_string(err) + " (" + endpoint_.origin + ")";
      if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout)
        throw Error(ErrorKind::timeout, what);
      throw Error(ErrorKind::endpoint_unreachable, what);
    }
    if (res->status != 200)
      throw Error(ErrorKind::http_error, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200), res->status);
    return parse_completion_response(res->body);
  }

  Endpoint endpoint_;
  Sleeper sleep_;
  std::string api_key_;
  std::atomic<int> attempts_{0};
};

}  // namespace mhop::backend
