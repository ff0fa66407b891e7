#include "valuemap/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "valuemap/io.hpp"

namespace valuemap {

using nlohmann::json;

std::string_view status_name(CompletionStatus s) {
  switch (s) {
    case CompletionStatus::Ok: return "ok";
    case CompletionStatus::TransportError: return "transport_error";
    case CompletionStatus::ProviderRefusedEmpty: return "provider_refused_empty";
  }
  return "?";
}

CompletionStatus parse_status(std::string_view s) {
  if (s == "ok") return CompletionStatus::Ok;
  if (s == "transport_error") return CompletionStatus::TransportError;
  if (s == "provider_refused_empty") return CompletionStatus::ProviderRefusedEmpty;
  throw Error(Errc::MalformedRow, "unknown completion status '" + std::string(s) + "'");
}

// ---- mock

MockProvider::MockProvider(Responder responder, std::string label)
    : responder_(std::move(responder)), label_(std::move(label)) {}

std::shared_ptr<MockProvider> MockProvider::scripted(std::map<std::string, std::string> script,
                                                     std::string fallback) {
  auto table = std::make_shared<const std::map<std::string, std::string>>(std::move(script));
  return std::make_shared<MockProvider>(
      [table, fallback](const CompletionRequest& r) {
        auto it = table->find(r.request_id);
        return it == table->end() ? fallback : it->second;
      },
      "mock-scripted");
}

void MockProvider::fail_transiently(const std::string& request_id, int times) {
  std::lock_guard lock(mu_);
  pending_faults_[request_id] += times;
}

void MockProvider::fail_always(const std::string& request_id) {
  std::lock_guard lock(mu_);
  always_fail_.insert(request_id);
}

int MockProvider::calls_for(const std::string& request_id) const {
  std::lock_guard lock(mu_);
  auto it = per_id_calls_.find(request_id);
  return it == per_id_calls_.end() ? 0 : it->second;
}

std::string MockProvider::send(const CompletionRequest& request) {
  ++calls_;
  {
    std::lock_guard lock(mu_);
    ++per_id_calls_[request.request_id];
    if (always_fail_.count(request.request_id)) throw TransientFailure("injected fault (unreachable)");
    auto it = pending_faults_.find(request.request_id);
    if (it != pending_faults_.end() && it->second > 0) {
      --it->second;
      throw TransientFailure("injected transient fault");
    }
  }
  if (reject_auth_) throw Error(Errc::AuthError, "mock provider rejected credentials");
  return responder_(request);
}

// ---- openai-compatible

OpenAIProvider::OpenAIProvider(Settings settings) : settings_(std::move(settings)) {
  const std::string& url = settings_.base_url;
  auto scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos)
    throw Error(Errc::ConfigError, "base_url must look like http(s)://host[:port][/path], got '" + url + "'");
  std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw Error(Errc::ConfigError, "unsupported scheme '" + scheme + "'");
  auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
  if (settings_.model.empty()) throw Error(Errc::ConfigError, "model name is required");

  const char* key = settings_.api_key_env.empty() ? nullptr : std::getenv(settings_.api_key_env.c_str());
  if (key && *key) api_key_ = key;
  if (settings_.require_key && api_key_.empty())
    throw Error(Errc::AuthError, "environment variable " + settings_.api_key_env + " is not set");
}

std::string OpenAIProvider::describe() const {
  return "openai|" + settings_.base_url + "|" + settings_.model;
}

std::string OpenAIProvider::send(const CompletionRequest& request) {
  json body;
  body["model"] = request.model_name.empty() ? settings_.model : request.model_name;
  json messages = json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  body["messages"] = std::move(messages);
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;

  httplib::Client cli(origin_);
  auto secs = static_cast<time_t>(settings_.timeout_seconds);
  auto usecs = static_cast<time_t>((settings_.timeout_seconds - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw TransientFailure("connection failed: " + httplib::to_string(res.error()));
  if (res->status == 401 || res->status == 403)
    throw Error(Errc::AuthError, "endpoint returned HTTP " + std::to_string(res->status));
  if (res->status == 408 || res->status == 429 || res->status >= 500)
    throw TransientFailure("HTTP " + std::to_string(res->status));
  if (res->status < 200 || res->status >= 300)
    throw Error(Errc::TransportError, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  try {
    auto j = json::parse(res->body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::TransportError, std::string("unexpected response body: ") + e.what());
  }
}

// ---- replay

ReplayProvider::ReplayProvider(std::map<std::string, CompletionResult> stored, std::string label)
    : stored_(std::move(stored)), label_(std::move(label)) {}

std::string ReplayProvider::send(const CompletionRequest& request) {
  auto it = stored_.find(request.request_id);
  if (it == stored_.end())
    throw Error(Errc::TransportError, "no stored response for " + request.request_id);
  if (it->second.status == CompletionStatus::TransportError)
    throw Error(Errc::TransportError, "stored failure: " + it->second.error);
  return it->second.raw_text;
}

// ---- retry, rate limiting

double RetryPolicy::backoff(int retry_index) const {
  double d = initial_backoff_seconds * std::pow(multiplier, retry_index);
  return std::min(d, max_backoff_seconds);
}

Sleeper real_sleeper() {
  return [](double s) {
    if (s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(s));
  };
}

namespace {
double steady_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}
}  // namespace

RateLimiter::RateLimiter(double requests_per_minute, double burst, Clock clock, Sleeper sleeper)
    : rpm_(requests_per_minute),
      capacity_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      clock_(clock ? std::move(clock) : Clock(steady_seconds)),
      sleeper_(sleeper ? std::move(sleeper) : real_sleeper()) {
  last_ = clock_();
}

void RateLimiter::acquire() {
  if (rpm_ <= 0) return;
  const double rate = rpm_ / 60.0;
  std::unique_lock lock(mu_);
  for (;;) {
    double now = clock_();
    tokens_ = std::min(capacity_, tokens_ + (now - last_) * rate);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    // holding the lock while waiting keeps callers in FIFO-ish order
    sleeper_((1.0 - tokens_) / rate);
  }
}

Client::Client(std::shared_ptr<Provider> provider, RetryPolicy policy, Sleeper sleeper,
               std::shared_ptr<RateLimiter> limiter)
    : provider_(std::move(provider)),
      policy_(policy),
      sleeper_(sleeper ? std::move(sleeper) : real_sleeper()),
      limiter_(std::move(limiter)) {
  if (!provider_) throw Error(Errc::ConfigError, "no provider configured");
  if (policy_.max_retries < 0) throw Error(Errc::ConfigError, "max_retries must be >= 0");
}

CompletionResult Client::complete(const CompletionRequest& request) {
  if (request.temperature < 0) throw Error(Errc::ConfigError, "temperature must be >= 0");
  int attempts = 0;
  std::string last_error;
  for (;;) {
    if (limiter_) limiter_->acquire();
    ++attempts;
    try {
      CompletionResult r;
      r.request_id = request.request_id;
      r.raw_text = provider_->send(request);
      r.attempts = attempts;
      r.status = r.raw_text.empty() ? CompletionStatus::ProviderRefusedEmpty : CompletionStatus::Ok;
      return r;
    } catch (const TransientFailure& e) {
      last_error = e.what();
    }
    if (attempts > policy_.max_retries) throw TransportError(last_error, attempts);
    sleeper_(policy_.backoff(attempts - 1));
  }
}

std::vector<CompletionResult> run_batch(Client& client, const std::vector<CompletionRequest>& requests,
                                        int max_in_flight, const ResultCallback& on_result) {
  if (max_in_flight < 1) throw Error(Errc::ConfigError, "max_in_flight must be >= 1");
  {
    std::set<std::string_view> seen;
    for (const auto& r : requests)
      if (!seen.insert(r.request_id).second) throw Error(Errc::DuplicateRequestId, r.request_id);
  }
  std::vector<CompletionResult> out(requests.size());
  std::atomic<std::size_t> next{0};
  std::mutex cb_mu;

  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= requests.size()) return;
      const auto& req = requests[i];
      CompletionResult r;
      try {
        r = client.complete(req);
      } catch (const TransportError& e) {
        r = {req.request_id, "", CompletionStatus::TransportError, e.attempts(), e.what()};
      } catch (const std::exception& e) {
        r = {req.request_id, "", CompletionStatus::TransportError, 1, e.what()};
      }
      out[i] = r;
      if (on_result) {
        std::lock_guard lock(cb_mu);
        on_result(r);
      }
    }
  };

  std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), requests.size());
  if (n_threads <= 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

// ---- run log

RunLog::RunLog(std::filesystem::path path) : path_(std::move(path)) {}

bool RunLog::exists() const { return std::filesystem::exists(path_); }

void RunLog::append(const CompletionResult& result, const std::string& model) {
  json j;
  j["request_id"] = result.request_id;
  j["model"] = model;
  j["status"] = status_name(result.status);
  j["attempts"] = result.attempts;
  j["raw_text"] = result.raw_text;
  j["error"] = result.error;
  std::lock_guard lock(mu_);
  io::append_line(path_, j.dump());
}

std::map<std::string, CompletionResult> RunLog::load() const {
  std::map<std::string, CompletionResult> out;
  std::ifstream in(path_, std::ios::binary);
  if (!in) return out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      CompletionResult r;
      r.request_id = j.at("request_id").get<std::string>();
      r.status = parse_status(j.at("status").get<std::string>());
      r.attempts = j.value("attempts", 0);
      r.raw_text = j.value("raw_text", "");
      r.error = j.value("error", "");
      out[r.request_id] = std::move(r);
    } catch (const json::exception& e) {
      throw Error(Errc::MalformedRow, path_.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string run_log_name(const std::string& provider_description, const std::string& manifest_fingerprint) {
  auto h = io::fnv1a64(manifest_fingerprint, io::fnv1a64(provider_description));
  return "log-" + io::hex64(h) + ".jsonl";
}

}  // namespace valuemap
