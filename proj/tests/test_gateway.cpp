#include <doctest.h>

#include <cstdlib>
#include <thread>

#include "fixtures.hpp"
#include "httplib.h"
#include "json.hpp"
#include "oracles.hpp"
#include "valuemap/gateway.hpp"

using namespace valuemap;
using fixture::code_of;

namespace {

CompletionRequest request(const std::string& id) {
  CompletionRequest r;
  r.request_id = id;
  r.system = "sys";
  r.user = "question " + id;
  r.model_name = "m";
  return r;
}

struct SleepLog {
  std::vector<double> waits;
  Sleeper sleeper() {
    return [this](double s) { waits.push_back(s); };
  }
};

}  // namespace

TEST_CASE("scripted mock echoes text") {
  auto mock = MockProvider::scripted({{"id1", "Answer: 3"}});
  Client client(mock, {}, [](double) {});
  auto r = client.complete(request("id1"));
  CHECK(r.raw_text == "Answer: 3");
  CHECK(r.status == CompletionStatus::Ok);
  CHECK(r.attempts == 1);
  auto empty = client.complete(request("other"));
  CHECK(empty.status == CompletionStatus::ProviderRefusedEmpty);
}

TEST_CASE("retries then transport error") {
  auto mock = MockProvider::scripted({{"x", "Answer: 1"}});
  mock->fail_always("x");
  SleepLog log;
  Client client(mock, RetryPolicy{}, log.sleeper());
  try {
    client.complete(request("x"));
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(e.attempts() == 4);
    CHECK(e.code() == Errc::TransportError);
  }
  CHECK(mock->calls_for("x") == 4);
  CHECK(log.waits == std::vector<double>{1.0, 2.0, 4.0});
}

TEST_CASE("transient faults recover") {
  auto mock = MockProvider::scripted({{"x", "Answer: 1"}});
  mock->fail_transiently("x", 2);
  Client client(mock, RetryPolicy{}, [](double) {});
  auto r = client.complete(request("x"));
  CHECK(r.attempts == 3);
  CHECK(r.raw_text == "Answer: 1");
}

TEST_CASE("backoff is capped") {
  RetryPolicy p;
  p.max_backoff_seconds = 5;
  CHECK(p.backoff(0) == 1.0);
  CHECK(p.backoff(2) == 4.0);
  CHECK(p.backoff(3) == 5.0);
}

TEST_CASE("credentials") {
  auto mock = MockProvider::scripted({});
  mock->reject_credentials();
  Client client(mock, {}, [](double) {});
  CHECK(code_of([&] { client.complete(request("a")); }) == Errc::AuthError);
  CHECK(mock->calls() == 1);

  OpenAIProvider::Settings s;
  s.base_url = "https://api.example.invalid/v1";
  s.model = "gpt";
  s.api_key_env = "VALUEMAP_TEST_KEY_THAT_IS_NOT_SET";
  CHECK(code_of([&] { OpenAIProvider p(s); }) == Errc::AuthError);
  s.require_key = false;
  s.base_url = "ftp://nope";
  CHECK(code_of([&] { OpenAIProvider p(s); }) == Errc::ConfigError);
}

TEST_CASE("negative temperature is rejected") {
  Client client(MockProvider::scripted({}), {}, [](double) {});
  auto r = request("a");
  r.temperature = -0.5;
  CHECK(code_of([&] { client.complete(r); }) == Errc::ConfigError);
}

TEST_CASE("batch keeps input order") {
  auto mock = std::make_shared<MockProvider>([](const CompletionRequest& r) {
    std::this_thread::sleep_for(std::chrono::milliseconds(r.request_id == "r0" ? 20 : 1));
    return "Answer: " + r.request_id.substr(1);
  });
  Client client(mock, {}, [](double) {});
  std::vector<CompletionRequest> reqs;
  for (int i = 0; i < 5; ++i) reqs.push_back(request("r" + std::to_string(i)));
  std::atomic<int> seen{0};
  auto out = run_batch(client, reqs, 2, [&](const CompletionResult&) { ++seen; });
  REQUIRE(out.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(out[i].request_id == "r" + std::to_string(i));
  CHECK(out[3].raw_text == "Answer: 3");
  CHECK(seen == 5);
  CHECK(run_batch(client, {}, 2).empty());
  CHECK(code_of([&] { run_batch(client, reqs, 0); }) == Errc::ConfigError);
  reqs.push_back(request("r1"));
  CHECK(code_of([&] { run_batch(client, reqs, 2); }) == Errc::DuplicateRequestId);
}

TEST_CASE("batch reports failures per request") {
  auto mock = MockProvider::scripted({{"a", "1"}, {"b", "2"}, {"c", "3"}, {"d", "4"}, {"e", "5"}});
  mock->fail_always("c");
  Client client(mock, {}, [](double) {});
  std::vector<CompletionRequest> reqs;
  for (auto id : {"a", "b", "c", "d", "e"}) reqs.push_back(request(id));
  auto out = run_batch(client, reqs, 3);
  int ok = 0, failed = 0;
  for (const auto& r : out) {
    if (r.status == CompletionStatus::Ok) ++ok;
    if (r.status == CompletionStatus::TransportError) ++failed;
  }
  CHECK(ok == 4);
  CHECK(failed == 1);
  CHECK(out[2].attempts == 4);
  CHECK_FALSE(out[2].error.empty());
}

TEST_CASE("rate limiter spaces requests") {
  double now = 0.0;
  std::vector<double> waits;
  RateLimiter limiter(
      60.0, 1.0, [&] { return now; },
      [&](double s) {
        waits.push_back(s);
        now += s;
      });
  for (int i = 0; i < 4; ++i) limiter.acquire();
  CHECK(waits.size() == 3);
  for (double w : waits) CHECK(w == doctest::Approx(1.0));
  CHECK(now == doctest::Approx(3.0));

  RateLimiter off(0.0);
  for (int i = 0; i < 100; ++i) off.acquire();
}

TEST_CASE("run log keeps the latest entry") {
  auto dir = oracle::temp_dir("runlog");
  RunLog log(dir / "sub" / "log.jsonl");
  CHECK_FALSE(log.exists());
  CHECK(log.load().empty());
  log.append({"a", "first", CompletionStatus::TransportError, 4, "down"}, "m");
  log.append({"b", "Answer: 2", CompletionStatus::Ok, 1, ""}, "m");
  log.append({"a", "Answer: 1\nwith \"quotes\"", CompletionStatus::Ok, 2, ""}, "m");
  auto loaded = log.load();
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.at("a").raw_text == "Answer: 1\nwith \"quotes\"");
  CHECK(loaded.at("a").attempts == 2);
  CHECK(loaded.at("b").status == CompletionStatus::Ok);
  CHECK(run_log_name("p", "x") == run_log_name("p", "x"));
  CHECK(run_log_name("p", "x") != run_log_name("p", "y"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("replay provider serves stored text only") {
  std::map<std::string, CompletionResult> stored{{"a", {"a", "Answer: 4", CompletionStatus::Ok, 1, ""}},
                                                 {"b", {"b", "", CompletionStatus::TransportError, 4, "x"}}};
  auto replay = std::make_shared<ReplayProvider>(stored, "replay");
  Client client(replay, RetryPolicy{0}, [](double) {});
  CHECK(client.complete(request("a")).raw_text == "Answer: 4");
  CHECK(code_of([&] { client.complete(request("b")); }) == Errc::TransportError);
  CHECK(code_of([&] { client.complete(request("zzz")); }) == Errc::TransportError);
}

TEST_CASE("openai-compatible provider against a local server") {
  httplib::Server server;
  std::atomic<int> hits{0};
  nlohmann::json last_body;
  std::mutex mu;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    int n = ++hits;
    {
      std::lock_guard lock(mu);
      last_body = nlohmann::json::parse(req.body);
    }
    auto auth = req.get_header_value("Authorization");
    if (auth != "Bearer secret") {
      res.status = 401;
      return;
    }
    const auto user = nlohmann::json::parse(req.body)["messages"][1]["content"].get<std::string>();
    if (user == "flaky" && n % 2 == 1) {
      res.status = 503;
      return;
    }
    if (user == "bad") {
      res.status = 400;
      res.set_content("{\"error\":\"bad request\"}", "application/json");
      return;
    }
    nlohmann::json out{{"choices", {{{"message", {{"role", "assistant"}, {"content", "Answer: 5"}}}}}}};
    if (user == "null") out["choices"][0]["message"]["content"] = nullptr;
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("VALUEMAP_TEST_OPENAI_KEY", "secret", 1);
  OpenAIProvider::Settings s;
  s.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  s.model = "local-model";
  s.api_key_env = "VALUEMAP_TEST_OPENAI_KEY";
  s.timeout_seconds = 5;
  auto provider = std::make_shared<OpenAIProvider>(s);
  Client client(provider, RetryPolicy{}, [](double) {});

  auto r = client.complete(request("ok"));
  CHECK(r.raw_text == "Answer: 5");
  {
    std::lock_guard lock(mu);
    CHECK(last_body["model"] == "m");
    CHECK(last_body["temperature"] == 0.0);
    CHECK(last_body["max_tokens"] == 2048);
    CHECK(last_body["messages"][0]["role"] == "system");
    CHECK(last_body["messages"][0]["content"] == "sys");
  }

  auto unnamed = request("u");
  unnamed.model_name.clear();
  client.complete(unnamed);
  {
    std::lock_guard lock(mu);
    CHECK(last_body["model"] == "local-model");
  }

  auto flaky = request("f");
  flaky.user = "flaky";
  hits = 0;
  auto fr = client.complete(flaky);
  CHECK(fr.attempts == 2);

  auto bad = request("b");
  bad.user = "bad";
  CHECK(code_of([&] { client.complete(bad); }) == Errc::TransportError);

  auto null_content = request("n");
  null_content.user = "null";
  CHECK(client.complete(null_content).status == CompletionStatus::ProviderRefusedEmpty);

  ::setenv("VALUEMAP_TEST_OPENAI_KEY", "wrong", 1);
  OpenAIProvider wrong(s);
  CHECK(code_of([&] { wrong.send(request("ok")); }) == Errc::AuthError);

  server.stop();
  th.join();

  // nothing listens any more: every attempt fails and is retried
  Client dead(provider, RetryPolicy{3, 0.0, 2.0, 0.0}, [](double) {});
  try {
    dead.complete(request("ok"));
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(e.attempts() == 4);
  }
}
