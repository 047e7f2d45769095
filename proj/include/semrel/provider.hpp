#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "semrel/errors.hpp"

namespace semrel {

struct ProviderConfig {
  std::string model_name = "gemini-2.5-flash";
  std::string endpoint = "https://generativelanguage.googleapis.com";
  std::string api_key_env = "GEMINI_API_KEY";
  double input_price_per_1M_tokens = 0.075;  // USD
  int max_retries = 3;
  std::chrono::milliseconds request_timeout{120000};
  int max_concurrent_requests = 4;
  std::chrono::milliseconds backoff_initial{1000};
  std::chrono::milliseconds backoff_max{60000};
  double token_inflation = 1.5;
  std::uint64_t mock_seed = 42;
  nlohmann::json options = nlohmann::json::object();  // decoding options, passed through

  void validate() const;  // throws ConfigError
};

struct ProviderRequest {
  int cluster_id = 0;
  std::string prompt;
  std::vector<std::string> members;
};

/// Retryable: network errors, rate limits, server errors.
class TransientProviderError : public Error {
 public:
  using Error::Error;
};

/// Not retryable, but only this request fails (e.g. a rejected payload).
class RequestRejectedError : public Error {
 public:
  using Error::Error;
};

/// Fatal for the whole batch.
class AuthenticationError : public Error {
 public:
  using Error::Error;
};

class Provider {
 public:
  virtual ~Provider() = default;
  /// Returns the raw model text. Must be safe to call from several threads.
  virtual std::string complete(const ProviderRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Seeded, rule-based stand-in for the LLM. The reply depends only on the
/// seed and the cluster members, so results are reproducible regardless of
/// scheduling. Relation choice per unordered pair is a pure function of
/// (seed, pair), which keeps replies mutually consistent across clusters.
class MockProvider : public Provider {
 public:
  explicit MockProvider(std::uint64_t seed = 42) : seed_(seed) {}
  std::string complete(const ProviderRequest& request) override;
  std::string name() const override { return "mock"; }

  std::uint64_t requests() const noexcept { return requests_.load(); }

 private:
  std::uint64_t seed_;
  std::atomic<std::uint64_t> requests_{0};
};

/// Gemini `generateContent` over HTTPS (or plain HTTP for local endpoints).
class HttpProvider : public Provider {
 public:
  HttpProvider(ProviderConfig config, std::string api_key);
  std::string complete(const ProviderRequest& request) override;
  std::string name() const override { return "http:" + config_.model_name; }

  /// Reads the key from the configured environment variable; throws
  /// ConfigError when unset.
  static HttpProvider from_environment(const ProviderConfig& config);

 private:
  ProviderConfig config_;
  std::string api_key_;
};

}  // namespace semrel
