#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "valuemap/error.hpp"

namespace valuemap {

inline constexpr double kDefaultTemperature = 0.0;
inline constexpr int kDefaultMaxTokens = 2048;

struct CompletionRequest {
  std::string system;
  std::string user;
  double temperature = kDefaultTemperature;
  int max_tokens = kDefaultMaxTokens;
  std::string model_name;
  std::string request_id;
};

enum class CompletionStatus { Ok, TransportError, ProviderRefusedEmpty };
std::string_view status_name(CompletionStatus s);
CompletionStatus parse_status(std::string_view s);

struct CompletionResult {
  std::string request_id;
  std::string raw_text;
  CompletionStatus status = CompletionStatus::Ok;
  int attempts = 0;
  std::string error;  // empty unless status is TransportError

  friend bool operator==(const CompletionResult&, const CompletionResult&) = default;
};

/// Thrown by providers for failures worth retrying (timeouts, 429, 5xx).
class TransientFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by Client::complete once retries are exhausted.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(Errc::TransportError, what + " after " + std::to_string(attempts) + " attempt(s)"),
        attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class Provider {
 public:
  virtual ~Provider() = default;
  /// Returns the completion text verbatim. Must be safe to call concurrently.
  virtual std::string send(const CompletionRequest& request) = 0;
  /// Stable description used to content-address run logs.
  virtual std::string describe() const = 0;
};

/// Deterministic in-process provider. The responder maps a request to text;
/// faults can be injected per request id.
class MockProvider : public Provider {
 public:
  using Responder = std::function<std::string(const CompletionRequest&)>;

  explicit MockProvider(Responder responder, std::string label = "mock");
  static std::shared_ptr<MockProvider> scripted(std::map<std::string, std::string> script,
                                                std::string fallback = "");

  /// The next `times` calls for `request_id` throw TransientFailure.
  void fail_transiently(const std::string& request_id, int times);
  /// Every call for `request_id` throws TransientFailure.
  void fail_always(const std::string& request_id);
  /// Every call throws AuthError.
  void reject_credentials(bool on = true) { reject_auth_ = on; }

  std::string send(const CompletionRequest& request) override;
  std::string describe() const override { return label_; }
  int calls() const { return calls_.load(); }
  int calls_for(const std::string& request_id) const;

 private:
  Responder responder_;
  std::string label_;
  mutable std::mutex mu_;
  std::map<std::string, int> pending_faults_;
  std::set<std::string> always_fail_;
  std::map<std::string, int> per_id_calls_;
  std::atomic<int> calls_{0};
  std::atomic<bool> reject_auth_{false};
};

/// OpenAI-compatible chat completions over HTTP(S).
class OpenAIProvider : public Provider {
 public:
  struct Settings {
    std::string base_url;  // e.g. https://api.openai.com/v1
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    bool require_key = true;  // local servers often need no key
    double timeout_seconds = 120.0;
  };

  /// Throws ConfigError for a bad URL and AuthError when the key is required
  /// but the environment variable is unset or empty.
  explicit OpenAIProvider(Settings settings);

  std::string send(const CompletionRequest& request) override;
  std::string describe() const override;

 private:
  Settings settings_;
  std::string api_key_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;    // path prefix + /chat/completions
};

/// Serves stored run-log text; unknown request ids fail without retry.
class ReplayProvider : public Provider {
 public:
  ReplayProvider(std::map<std::string, CompletionResult> stored, std::string label);
  std::string send(const CompletionRequest& request) override;
  std::string describe() const override { return label_; }

 private:
  std::map<std::string, CompletionResult> stored_;
  std::string label_;
};

struct RetryPolicy {
  int max_retries = 3;
  double initial_backoff_seconds = 1.0;
  double multiplier = 2.0;
  double max_backoff_seconds = 30.0;

  double backoff(int retry_index) const;  // 0-based
};

using Sleeper = std::function<void(double seconds)>;
Sleeper real_sleeper();

/// Token bucket refilled at rpm/60 tokens per second. rpm <= 0 disables it.
class RateLimiter {
 public:
  using Clock = std::function<double()>;  // seconds, monotonic

  explicit RateLimiter(double requests_per_minute, double burst = 1.0, Clock clock = {}, Sleeper sleeper = {});
  void acquire();
  double requests_per_minute() const { return rpm_; }

 private:
  double rpm_;
  double capacity_;
  double tokens_;
  double last_;
  Clock clock_;
  Sleeper sleeper_;
  std::mutex mu_;
};

class Client {
 public:
  explicit Client(std::shared_ptr<Provider> provider, RetryPolicy policy = {}, Sleeper sleeper = real_sleeper(),
                  std::shared_ptr<RateLimiter> limiter = nullptr);

  /// Retries TransientFailure with exponential backoff; throws TransportError
  /// once retries are spent. AuthError and other errors pass through untouched.
  CompletionResult complete(const CompletionRequest& request);
  const Provider& provider() const { return *provider_; }

 private:
  std::shared_ptr<Provider> provider_;
  RetryPolicy policy_;
  Sleeper sleeper_;
  std::shared_ptr<RateLimiter> limiter_;
};

using ResultCallback = std::function<void(const CompletionResult&)>;

/// At most `max_in_flight` concurrent requests. Output order follows input
/// order; failures become TransportError entries. Duplicate request ids throw
/// DuplicateRequestId before anything is sent.
std::vector<CompletionResult> run_batch(Client& client, const std::vector<CompletionRequest>& requests,
                                        int max_in_flight, const ResultCallback& on_result = {});

/// Append-only JSONL log: {request_id, model, status, attempts, raw_text, error}.
class RunLog {
 public:
  explicit RunLog(std::filesystem::path path);
  const std::filesystem::path& path() const { return path_; }

  void append(const CompletionResult& result, const std::string& model);
  /// Latest entry per request id; missing file yields an empty map.
  std::map<std::string, CompletionResult> load() const;
  bool exists() const;

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

/// "log-<16 hex>.jsonl" for a provider description plus manifest content.
std::string run_log_name(const std::string& provider_description, const std::string& manifest_fingerprint);

}  // namespace valuemap
