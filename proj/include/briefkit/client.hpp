#pragma once

// chat-completions client: request building, response and SSE stream
// parsing, retry with exponential backoff, and a bounded-concurrency batch
// runner. the api key is read from a named environment variable at request
// time and is never stored in results or error messages.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "briefkit/errors.hpp"
#include "briefkit/prompts.hpp"

namespace briefkit::client {

class AuthMissing : public Error {
 public:
  explicit AuthMissing(const std::string& env_name)
      : Error("environment variable " + env_name +
              " is not set or is empty") {}
};

class EmptyMessages : public Error {
 public:
  EmptyMessages() : Error("a request needs at least one message") {}
};

class UnknownRole : public Error {
 public:
  explicit UnknownRole(const std::string& role)
      : Error("unknown chat role: " + role) {}
};

class BadUrl : public Error {
 public:
  explicit BadUrl(const std::string& url) : Error("cannot parse url: " + url) {}
};

class BadResponse : public Error {
 public:
  explicit BadResponse(const std::string& detail)
      : Error("malformed endpoint response: " + detail) {}
};

class HttpError : public Error {
 public:
  explicit HttpError(int status)
      : Error("endpoint returned status " + std::to_string(status)),
        status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

class Timeout : public Error {
 public:
  explicit Timeout(const std::string& detail)
      : Error("request timed out: " + detail) {}
};

class ExhaustedRetries : public Error {
 public:
  ExhaustedRetries(int attempts, const std::string& last)
      : Error("gave up after " + std::to_string(attempts) +
              " attempts; last failure: " + last) {}
};

struct EndpointConfig {
  std::string base_url;      // api root including any path prefix, e.g.
                             // "http://127.0.0.1:8000/v1"
  std::string model;
  std::string api_key_env;   // name of the variable holding the key;
                             // empty means no auth header
  double temperature = 0.0;
  int max_output_tokens = 1024;
  double timeout_s = 60.0;
  int max_retries = 3;
  double backoff_base_s = 0.5;
  int max_parallel_requests = 4;
  bool stream = false;
};

// reads the key from the configured variable; empty config means no key.
inline std::optional<std::string> resolve_api_key(
    const EndpointConfig& cfg) {
  if (cfg.api_key_env.empty()) return std::nullopt;
  const char* v = std::getenv(cfg.api_key_env.c_str());
  if (v == nullptr || *v == '\0') throw AuthMissing(cfg.api_key_env);
  return std::string(v);
}

inline nlohmann::ordered_json build_request(
    const EndpointConfig& cfg,
    const std::vector<prompts::ChatMessage>& messages) {
  if (messages.empty()) throw EmptyMessages();
  nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
  for (const auto& m : messages) {
    if (m.role != "system" && m.role != "user" && m.role != "assistant")
      throw UnknownRole(m.role);
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  }
  return nlohmann::ordered_json{
      {"model", cfg.model},
      {"messages", std::move(msgs)},
      {"temperature", cfg.temperature},
      {"max_tokens", cfg.max_output_tokens},
      {"stream", cfg.stream},
  };
}

// pulls the assistant text out of a non-streaming response body.
inline std::string parse_response(const std::string& body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw BadResponse("body is not json");
  if (!j.contains("choices") || !j["choices"].is_array() ||
      j["choices"].empty())
    throw BadResponse("no choices");
  const auto& c = j["choices"][0];
  if (!c.contains("message") || !c["message"].contains("content") ||
      !c["message"]["content"].is_string())
    throw BadResponse("choice has no message content");
  return c["message"]["content"].get<std::string>();
}

// concatenates delta content from an SSE stream until [DONE].
inline std::string parse_sse(const std::string& body) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t end = body.find('\n', pos);
    std::string line = end == std::string::npos
                           ? body.substr(pos)
                           : body.substr(pos, end - pos);
    pos = end == std::string::npos ? body.size() + 1 : end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == ':') continue;  // keep-alives, comments
    if (line.rfind("data:", 0) != 0) continue;
    std::string payload = line.substr(5);
    if (!payload.empty() && payload.front() == ' ') payload.erase(0, 1);
    if (payload == "[DONE]") break;
    auto j = nlohmann::json::parse(payload, nullptr, false);
    if (j.is_discarded()) throw BadResponse("unparseable stream event");
    if (!j.contains("choices") || j["choices"].empty()) continue;
    const auto& d = j["choices"][0];
    if (d.contains("delta") && d["delta"].contains("content") &&
        d["delta"]["content"].is_string())
      out += d["delta"]["content"].get<std::string>();
  }
  return out;
}

namespace detail {

struct SplitUrl {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // possibly empty, no trailing slash
};

inline SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw BadUrl(url);
  auto path_start = url.find('/', scheme_end + 3);
  SplitUrl s;
  if (path_start == std::string::npos) {
    s.origin = url;
  } else {
    s.origin = url.substr(0, path_start);
    s.path_prefix = url.substr(path_start);
  }
  while (!s.path_prefix.empty() && s.path_prefix.back() == '/')
    s.path_prefix.pop_back();
  if (s.origin == "http://" || s.origin == "https://") throw BadUrl(url);
  return s;
}

inline bool retriable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

// full backoff with jitter: base * 2^(attempt-1) * uniform(0.5, 1.0)
inline double backoff_delay_s(double base, int attempt) {
  thread_local std::mt19937_64 rng(
      std::random_device{}() ^
      static_cast<std::uint64_t>(
          std::hash<std::thread::id>{}(std::this_thread::get_id())));
  std::uniform_real_distribution<double> jitter(0.5, 1.0);
  double d = base * std::pow(2.0, attempt - 1) * jitter(rng);
  return std::min(d, 30.0);
}

}  // namespace detail

struct CallResult {
  std::string text;
  int attempts = 0;
  double latency_ms = 0.0;
};

// one chat completion with retry. transport failures, 429 and 5xx are
// retried with exponential backoff; other statuses fail immediately.
// total attempts never exceed 1 + max_retries.
inline CallResult chat_complete(
    const EndpointConfig& cfg,
    const std::vector<prompts::ChatMessage>& messages) {
  const auto key = resolve_api_key(cfg);
  const auto req = build_request(cfg, messages).dump();
  const auto url = detail::split_url(cfg.base_url);
  const std::string path = url.path_prefix + "/chat/completions";

  httplib::Client cli(url.origin);
  const auto sec = static_cast<time_t>(cfg.timeout_s);
  const auto usec = static_cast<time_t>(
      (cfg.timeout_s - static_cast<double>(sec)) * 1e6);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);

  httplib::Headers headers;
  if (key.has_value()) headers.emplace("Authorization", "Bearer " + *key);

  const int max_attempts = 1 + std::max(0, cfg.max_retries);
  std::string last_failure = "never attempted";
  bool last_was_transport = false;
  const auto start = std::chrono::steady_clock::now();

  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    auto res = cli.Post(path, headers, req, "application/json");
    if (res && res->status >= 200 && res->status < 300) {
      CallResult out;
      out.text = cfg.stream ? parse_sse(res->body)
                            : parse_response(res->body);
      out.attempts = attempt;
      out.latency_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
      return out;
    }
    if (res) {
      if (!detail::retriable_status(res->status))
        throw HttpError(res->status);
      last_failure = "status " + std::to_string(res->status);
      last_was_transport = false;
    } else {
      last_failure = httplib::to_string(res.error());
      last_was_transport = true;
    }
    if (attempt < max_attempts) {
      std::this_thread::sleep_for(std::chrono::duration<double>(
          detail::backoff_delay_s(cfg.backoff_base_s, attempt)));
    }
  }
  if (last_was_transport) throw Timeout(last_failure);
  throw ExhaustedRetries(max_attempts, last_failure);
}

// ---- batch running ----

struct BatchItem {
  std::string record_id;
  std::vector<prompts::ChatMessage> messages;
};

struct Transcript {
  std::string record_id;
  std::vector<prompts::ChatMessage> request_messages;
  std::string response_text;
  int attempts = 0;
  double latency_ms = 0.0;
  bool ok = false;
  std::string error;  // empty on success
};

// runs every item through chat_complete on a bounded worker pool. results
// come back in input order; one item failing does not stop the others.
inline std::vector<Transcript> run_batch(const EndpointConfig& cfg,
                                         const std::vector<BatchItem>& items) {
  std::vector<Transcript> results(items.size());
  if (items.empty()) return results;
  const int workers = std::max(
      1, std::min(cfg.max_parallel_requests,
                  static_cast<int>(items.size())));
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= items.size()) return;
      Transcript& t = results[i];
      t.record_id = items[i].record_id;
      t.request_messages = items[i].messages;
      try {
        auto r = chat_complete(cfg, items[i].messages);
        t.response_text = r.text;
        t.attempts = r.attempts;
        t.latency_ms = r.latency_ms;
        t.ok = true;
      } catch (const std::exception& e) {
        t.ok = false;
        t.error = e.what();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  return results;
}

inline nlohmann::ordered_json transcript_json(const Transcript& t) {
  nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
  for (const auto& m : t.request_messages)
    msgs.push_back({{"role", m.role}, {"content", m.content}});
  return nlohmann::ordered_json{
      {"record_id", t.record_id},
      {"request_messages", std::move(msgs)},
      {"response_text", t.response_text},
      {"attempts", t.attempts},
      {"latency_ms", t.latency_ms},
      {"ok", t.ok},
      {"error", t.error},
  };
}

inline Transcript transcript_from_json(const nlohmann::json& j) {
  Transcript t;
  t.record_id = j.at("record_id").get<std::string>();
  for (const auto& m : j.at("request_messages")) {
    t.request_messages.push_back({m.at("role").get<std::string>(),
                                  m.at("content").get<std::string>()});
  }
  t.response_text = j.at("response_text").get<std::string>();
  t.attempts = j.at("attempts").get<int>();
  t.latency_ms = j.at("latency_ms").get<double>();
  t.ok = j.at("ok").get<bool>();
  t.error = j.at("error").get<std::string>();
  return t;
}

}  // namespace briefkit::client
