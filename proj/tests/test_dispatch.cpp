#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "semrel/dispatch.hpp"
#include "semrel/enrichment.hpp"
#include "semrel/errors.hpp"

using namespace semrel;
namespace fs = std::filesystem;

namespace {

std::vector<Cluster> make_clusters(int n) {
  std::vector<Cluster> out;
  for (int i = 0; i < n; ++i)
    out.push_back({i, {"k" + std::to_string(i) + "a", "k" + std::to_string(i) + "b", "ortak"}});
  return out;
}

ProviderConfig fast_config(int concurrency = 4) {
  ProviderConfig cfg;
  cfg.max_concurrent_requests = concurrency;
  return cfg;
}

DispatchOptions no_sleep() {
  DispatchOptions o;
  o.sleep = [](std::chrono::milliseconds) {};
  return o;
}

fs::path temp_file(const std::string& name) {
  auto dir = fs::temp_directory_path() / "semrel_dispatch_tests";
  fs::create_directories(dir);
  auto p = dir / name;
  fs::remove(p);
  return p;
}

// Fails each cluster a fixed number of times before answering.
class FlakyProvider : public Provider {
 public:
  FlakyProvider(int failures, bool transient) : failures_(failures), transient_(transient) {}
  std::string complete(const ProviderRequest& r) override {
    std::lock_guard lock(mu_);
    ++calls_;
    if (seen_[r.cluster_id]++ < failures_) {
      if (transient_) throw TransientProviderError("rate limited");
      throw RequestRejectedError("bad payload");
    }
    return "{}";
  }
  std::string name() const override { return "flaky"; }
  int calls() const { return calls_; }

 private:
  int failures_;
  bool transient_;
  std::mutex mu_;
  std::map<int, int> seen_;
  int calls_ = 0;
};

// Mock that dies (as a process kill would) after a number of completions.
class DyingProvider : public Provider {
 public:
  explicit DyingProvider(std::uint64_t after) : after_(after) {}
  std::string complete(const ProviderRequest& r) override {
    if (completed_.load() >= after_) throw std::runtime_error("killed");
    auto out = inner_.complete(r);
    ++completed_;
    return out;
  }
  std::string name() const override { return "mock"; }

 private:
  MockProvider inner_{42};
  std::uint64_t after_;
  std::atomic<std::uint64_t> completed_{0};
};

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

}  // namespace

TEST_CASE("one outcome per cluster, ordered by id") {
  MockProvider mock(42);
  auto clusters = make_clusters(3);
  std::swap(clusters[0], clusters[2]);
  auto out = dispatch_batch(clusters, mock, fast_config());
  REQUIRE(out.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(out[i].cluster_id == i);
    CHECK(out[i].ok);
    CHECK_NOTHROW(parse_response(out[i].raw));
  }
  CHECK(mock.requests() == 3);
}

TEST_CASE("results do not depend on the worker count") {
  auto clusters = make_clusters(25);
  MockProvider m1(42), m8(42);
  auto a = dispatch_batch(clusters, m1, fast_config(1));
  auto b = dispatch_batch(clusters, m8, fast_config(8));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].raw == b[i].raw);
}

TEST_CASE("transient failures are retried with backoff") {
  FlakyProvider flaky(2, true);
  std::vector<std::chrono::milliseconds> sleeps;
  DispatchOptions opt;
  opt.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
  auto cfg = fast_config(1);
  cfg.max_retries = 3;
  auto out = dispatch_batch(make_clusters(1), flaky, cfg, opt);
  CHECK(out[0].ok);
  CHECK(out[0].attempts == 3);
  CHECK(sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(1000),
                                                        std::chrono::milliseconds(2000)});
}

TEST_CASE("backoff is capped") {
  FlakyProvider flaky(100, true);
  std::vector<std::chrono::milliseconds> sleeps;
  DispatchOptions opt;
  opt.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
  auto cfg = fast_config(1);
  cfg.max_retries = 8;
  cfg.backoff_max = std::chrono::milliseconds(5000);
  auto out = dispatch_batch(make_clusters(1), flaky, cfg, opt);
  CHECK_FALSE(out[0].ok);
  CHECK(out[0].attempts == 9);
  REQUIRE(sleeps.size() == 8);
  CHECK(sleeps[3] == std::chrono::milliseconds(5000));
  CHECK(sleeps.back() == std::chrono::milliseconds(5000));
}

TEST_CASE("exhausted retries become failure records") {
  FlakyProvider flaky(10, true);
  auto cfg = fast_config();
  cfg.max_retries = 2;
  auto out = dispatch_batch(make_clusters(4), flaky, cfg, no_sleep());
  for (const auto& o : out) {
    CHECK_FALSE(o.ok);
    CHECK(o.attempts == 3);
    CHECK(o.error.find("rate limited") != std::string::npos);
  }
  CHECK(flaky.calls() == 12);
}

TEST_CASE("rejected requests are not retried") {
  FlakyProvider flaky(1, false);
  auto out = dispatch_batch(make_clusters(2), flaky, fast_config(), no_sleep());
  CHECK_FALSE(out[0].ok);
  CHECK(out[0].attempts == 1);
  CHECK(flaky.calls() == 2);
}

TEST_CASE("authentication failure aborts the batch") {
  class Denied : public Provider {
   public:
    std::string complete(const ProviderRequest&) override { throw AuthenticationError("401"); }
    std::string name() const override { return "denied"; }
  } denied;
  CHECK_THROWS_AS(dispatch_batch(make_clusters(5), denied, fast_config(), no_sleep()),
                  AuthenticationError);
}

TEST_CASE("input validation") {
  MockProvider mock;
  CHECK_THROWS_AS(dispatch_batch({}, mock, fast_config()), ArgumentError);
  auto dup = make_clusters(2);
  dup[1].id = 0;
  CHECK_THROWS_AS(dispatch_batch(dup, mock, fast_config()), ArgumentError);
}

TEST_CASE("resume after a kill re-sends only incomplete clusters") {
  const auto ckpt = temp_file("resume.jsonl");
  auto clusters = make_clusters(10);
  DispatchOptions opt = no_sleep();
  opt.checkpoint = ckpt;

  DyingProvider dying(6);
  CHECK_THROWS_WITH(dispatch_batch(clusters, dying, fast_config(1), opt), "killed");
  CHECK(line_count(ckpt) == 6);

  MockProvider counting(42);
  auto out = dispatch_batch(clusters, counting, fast_config(), opt);
  CHECK(counting.requests() == 4);
  std::size_t restored = 0;
  for (const auto& o : out) {
    CHECK(o.ok);
    restored += o.from_checkpoint;
  }
  CHECK(restored == 6);

  MockProvider fresh(42);
  auto reference = dispatch_batch(clusters, fresh, fast_config());
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].raw == reference[i].raw);

  MockProvider idle(42);
  dispatch_batch(clusters, idle, fast_config(), opt);
  CHECK(idle.requests() == 0);
}

TEST_CASE("resume with concurrent workers counts against the checkpoint") {
  const auto ckpt = temp_file("resume_concurrent.jsonl");
  auto clusters = make_clusters(30);
  DispatchOptions opt = no_sleep();
  opt.checkpoint = ckpt;
  DyingProvider dying(11);
  CHECK_THROWS(dispatch_batch(clusters, dying, fast_config(4), opt));
  const auto done = line_count(ckpt);
  CHECK(done >= 11);
  MockProvider counting(42);
  dispatch_batch(clusters, counting, fast_config(4), opt);
  CHECK(counting.requests() == 30 - done);
}

TEST_CASE("checkpoint ignores torn lines and changed prompts") {
  const auto ckpt = temp_file("torn.jsonl");
  auto clusters = make_clusters(3);
  DispatchOptions opt = no_sleep();
  opt.checkpoint = ckpt;
  MockProvider first(42);
  dispatch_batch(clusters, first, fast_config(), opt);
  {
    std::ofstream out(ckpt, std::ios::app);
    out << "{\"cluster_id\": 1, \"prompt_dig";  // interrupted write
  }
  clusters[2].members.push_back("yeni");
  MockProvider second(42);
  auto out = dispatch_batch(clusters, second, fast_config(), opt);
  CHECK(second.requests() == 1);
  CHECK(out[2].ok);
  CHECK_FALSE(out[2].from_checkpoint);
  MockProvider third(42);
  dispatch_batch(clusters, third, fast_config(), opt);
  CHECK(third.requests() == 0);
}

TEST_CASE("http provider against a local server") {
  httplib::Server server;
  std::atomic<int> unavailable{1};
  std::string seen_key, seen_path;
  nlohmann::json seen_body;
  std::mutex mu;
  server.Post(R"(/v1beta/models/([^/]+):generateContent)", [&](const httplib::Request& req,
                                                              httplib::Response& res) {
    {
      std::lock_guard lock(mu);
      seen_key = req.get_header_value("x-goog-api-key");
      seen_path = req.path;
      seen_body = nlohmann::json::parse(req.body);
    }
    if (seen_key != "secret") {
      res.status = 403;
      return;
    }
    if (unavailable-- > 0) {
      res.status = 503;
      return;
    }
    nlohmann::json reply = {
        {"candidates",
         {{{"content", {{"parts", {{{"text", "{\"a\": "}}, {{"text", "{\"synonyms\": [\"b\"]}}"}}}}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ProviderConfig cfg = fast_config(1);
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  cfg.model_name = "test-model";
  cfg.options = {{"generationConfig", {{"temperature", 0.2}}}};
  cfg.request_timeout = std::chrono::milliseconds(5000);

  HttpProvider good(cfg, "secret");
  auto out = dispatch_batch(make_clusters(1), good, cfg, no_sleep());
  CHECK(out[0].ok);
  CHECK(out[0].attempts == 2);
  CHECK(parse_response(out[0].raw).terms["a"].synonyms == std::vector<std::string>{"b"});
  CHECK(seen_path == "/v1beta/models/test-model:generateContent");
  CHECK(seen_body["generationConfig"]["temperature"] == 0.2);
  CHECK(seen_body["contents"][0]["parts"][0]["text"].get<std::string>().find("Input cluster:") !=
        std::string::npos);

  HttpProvider bad(cfg, "wrong");
  CHECK_THROWS_AS(dispatch_batch(make_clusters(2), bad, cfg, no_sleep()), AuthenticationError);

  server.stop();
  th.join();

  HttpProvider unreachable(cfg, "secret");
  CHECK_THROWS_AS(unreachable.complete({0, "x", {}}), TransientProviderError);
}

TEST_CASE("http provider reads its key from the environment") {
  ProviderConfig cfg;
  cfg.api_key_env = "SEMREL_TEST_UNSET_KEY";
  ::unsetenv("SEMREL_TEST_UNSET_KEY");
  CHECK_THROWS_AS(HttpProvider::from_environment(cfg), ConfigError);
  ::setenv("SEMREL_TEST_UNSET_KEY", "abc", 1);
  CHECK_NOTHROW(HttpProvider::from_environment(cfg));
  ::unsetenv("SEMREL_TEST_UNSET_KEY");
}
