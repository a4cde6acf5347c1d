#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "keyinst/error.hpp"
#include "keyinst/prompt.hpp"

namespace keyinst {

inline constexpr const char* kBaseUrlEnvVar = "KEYINST_BASE_URL";

/// Request parameters for one chat-completions endpoint.
struct GenerationConfig {
  std::string model;
  double temperature = 0.0;  // greedy decoding keeps runs reproducible
  int max_tokens = 512;
  double timeout_seconds = 60.0;
  int retries = 3;
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "KEYINST_API_KEY";
  double backoff_base_seconds = 1.0;
  int in_flight_limit = 4;
};

inline void validate(const GenerationConfig& config) {
  if (config.temperature < 0) throw ConfigError("temperature must be >= 0");
  if (config.retries < 0) throw ConfigError("retries must be >= 0");
  if (config.timeout_seconds <= 0) throw ConfigError("timeout must be > 0");
}

/// Stable 64-bit content hash used to key scripted responses and run-log
/// entries (FNV-1a).
inline std::string fnv1a64_hex(std::string_view data) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[hash & 0xF];
    hash >>= 4;
  }
  return out;
}

inline std::string prompt_hash(const Prompt& prompt) { return fnv1a64_hex(prompt.render()); }

/// Text-generation provider interface.
class Provider {
public:
  virtual ~Provider() = default;
  virtual std::string generate(const Prompt& prompt) = 0;
};

namespace detail {

struct ParsedUrl {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // may be empty
};

inline ParsedUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base_url missing scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

}  // namespace detail

/// Chat-completions client with exponential backoff on 429/5xx/transport
/// failures. The API key is read from the configured environment variable
/// and never logged.
class HttpProvider : public Provider {
public:
  explicit HttpProvider(GenerationConfig config) : config_(std::move(config)) {
    keyinst::validate(config_);
    if (config_.model.empty()) throw ConfigError("model must be set for the HTTP provider");
  }

  std::string generate(const Prompt& prompt) override {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw AuthError("API key not present in environment variable " + config_.api_key_env);
    }

    std::string base_url = config_.base_url;
    if (const char* override_url = std::getenv(kBaseUrlEnvVar);
        override_url != nullptr && *override_url != '\0') {
      base_url = override_url;
    }
    detail::ParsedUrl url = detail::split_url(base_url);

    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_tokens;
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& segment : prompt.segments) {
      messages.push_back({{"role", segment.role == Role::System ? "system" : "user"},
                          {"content", segment.content}});
    }
    body["messages"] = std::move(messages);
    std::string payload = body.dump();

    InFlightGuard guard(*this);
    int attempts = config_.retries + 1;
    std::string last_failure = "no attempt made";
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) backoff_sleep(attempt);

      httplib::Client client(url.origin);
      client.set_connection_timeout(timeout_sec(), timeout_usec());
      client.set_read_timeout(timeout_sec(), timeout_usec());
      client.set_write_timeout(timeout_sec(), timeout_usec());
      httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

      auto result = client.Post(url.path_prefix + "/chat/completions", headers, payload,
                                "application/json");
      if (!result) {
        last_failure = "transport failure: " + httplib::to_string(result.error());
        continue;
      }
      int status = result->status;
      if (status == 401 || status == 403) {
        throw AuthError("authentication rejected (HTTP " + std::to_string(status) + ")");
      }
      if (status == 429) {
        last_failure = "rate limited (HTTP 429)";
        continue;
      }
      if (status >= 500) {
        last_failure = "server error (HTTP " + std::to_string(status) + ")";
        continue;
      }
      if (status != 200) {
        throw BadResponse("unexpected HTTP status " + std::to_string(status));
      }
      try {
        nlohmann::json reply = nlohmann::json::parse(result->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw BadResponse(std::string("unparseable completion body: ") + e.what());
      }
    }
    if (last_failure.find("rate limited") != std::string::npos) {
      throw RateLimited(last_failure + " after " + std::to_string(attempts) + " attempts");
    }
    throw TransportError(last_failure + " after " + std::to_string(attempts) + " attempts");
  }

private:
  class InFlightGuard {
  public:
    explicit InFlightGuard(HttpProvider& provider) : provider_(provider) {
      std::unique_lock<std::mutex> lock(provider_.mutex_);
      provider_.slot_free_.wait(lock, [&] {
        return provider_.in_flight_ < std::max(1, provider_.config_.in_flight_limit);
      });
      ++provider_.in_flight_;
    }
    ~InFlightGuard() {
      std::lock_guard<std::mutex> lock(provider_.mutex_);
      --provider_.in_flight_;
      provider_.slot_free_.notify_one();
    }

  private:
    HttpProvider& provider_;
  };

  time_t timeout_sec() const { return static_cast<time_t>(config_.timeout_seconds); }
  time_t timeout_usec() const {
    double frac = config_.timeout_seconds - static_cast<double>(timeout_sec());
    return static_cast<time_t>(frac * 1e6);
  }

  void backoff_sleep(int attempt) const {
    if (config_.backoff_base_seconds <= 0) return;
    double delay = config_.backoff_base_seconds * static_cast<double>(1 << (attempt - 1));
    thread_local std::mt19937 rng{std::random_device{}()};
    std::uniform_real_distribution<double> jitter(0.8, 1.2);
    delay *= jitter(rng);
    std::this_thread::sleep_for(std::chrono::duration<double>(delay));
  }

  GenerationConfig config_;
  std::mutex mutex_;
  std::condition_variable slot_free_;
  int in_flight_ = 0;
};

/// Deterministic scripted provider for tests and offline runs. Map mode
/// answers by prompt hash; list mode answers by call order and throws
/// ScriptExhausted past the end. Every prompt is recorded in a transcript.
class MockProvider : public Provider {
public:
  static std::shared_ptr<MockProvider> with_map(std::map<std::string, std::string> by_hash) {
    if (by_hash.empty()) throw ConfigError("mock script is empty");
    auto provider = std::make_shared<MockProvider>();
    provider->by_hash_ = std::move(by_hash);
    return provider;
  }

  static std::shared_ptr<MockProvider> with_list(std::vector<std::string> responses) {
    if (responses.empty()) throw ConfigError("mock script is empty");
    auto provider = std::make_shared<MockProvider>();
    provider->responses_ = std::move(responses);
    return provider;
  }

  std::string generate(const Prompt& prompt) override {
    std::lock_guard<std::mutex> lock(mutex_);
    transcript_.push_back(prompt.render());
    if (!by_hash_.empty()) {
      auto found = by_hash_.find(prompt_hash(prompt));
      if (found == by_hash_.end()) {
        throw ScriptExhausted("no scripted response for prompt hash " + prompt_hash(prompt));
      }
      return found->second;
    }
    if (next_ >= responses_.size()) {
      throw ScriptExhausted("mock script exhausted after " + std::to_string(responses_.size()) +
                            " responses");
    }
    return responses_[next_++];
  }

  std::vector<std::string> transcript() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return transcript_;
  }

  std::size_t call_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return transcript_.size();
  }

private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> by_hash_;
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
  std::vector<std::string> transcript_;
};

/// Adapter for arbitrary generation functions (echo mocks, fine-tuned
/// KeyInst providers, local engines).
class CallbackProvider : public Provider {
public:
  explicit CallbackProvider(std::function<std::string(const Prompt&)> fn) : fn_(std::move(fn)) {}

  std::string generate(const Prompt& prompt) override { return fn_(prompt); }

private:
  std::function<std::string(const Prompt&)> fn_;
};

}  // namespace keyinst
