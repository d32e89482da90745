#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "w2s/errors.hpp"
#include "w2s/http_backend.hpp"
#include "w2s/model_json.hpp"

using namespace w2s;

namespace {

constexpr const char* kTokenVar = "W2S_TEST_TOKEN";

// In-process HTTP server on a random loopback port. Register routes on
// raw() before calling start(); the destructor stops and joins.
class TestServer {
 public:
  TestServer() = default;
  TestServer(const TestServer&) = delete;
  TestServer& operator=(const TestServer&) = delete;

  ~TestServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  httplib::Server& raw() { return server_; }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

HttpBackendConfig config_for(const TestServer& server) {
  setenv(kTokenVar, "sesame", 1);
  HttpBackendConfig config;
  config.generation_url = server.url();
  config.embedding_url = server.url();
  config.finetune_url = server.url();
  config.auth_token_env = kTokenVar;
  config.retry_attempts = 3;
  config.backoff_base_ms = 1;  // keep retry tests fast
  return config;
}

SamplingParams sampling(int n) {
  SamplingParams params;
  params.n_samples = n;
  params.temperature = 0.7;
  params.max_length = 64;
  params.seed = 99;
  return params;
}

const ModelRef kTeacher{"units-7b", Role::Teacher, {}};

}  // namespace

TEST_CASE("generate round-trips the request body and bearer token") {
  TestServer server;
  nlohmann::json seen_body;
  std::string seen_auth;
  server.raw().Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = nlohmann::json::parse(req.body);
    seen_auth = req.get_header_value("Authorization");
    res.set_content(R"({"completions": ["first", "second"]})", "application/json");
  });
  server.start();

  HttpBackend backend(config_for(server));
  const auto completions = backend.generate(kTeacher, "What is 2+2?", sampling(2));
  CHECK(completions == std::vector<std::string>{"first", "second"});

  CHECK(seen_auth == "Bearer sesame");
  CHECK(seen_body.at("model") == "units-7b");
  CHECK(seen_body.at("prompt") == "What is 2+2?");
  CHECK(seen_body.at("n_samples") == 2);
  CHECK(seen_body.at("temperature") == doctest::Approx(0.7));
  CHECK(seen_body.at("max_length") == 64);
  CHECK(seen_body.at("seed") == 99);
}

TEST_CASE("transient 5xx responses are retried until the server recovers") {
  TestServer server;
  std::atomic<int> hits{0};
  server.raw().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 503;
      res.set_content("overloaded", "text/plain");
    } else {
      res.set_content(R"({"completions": ["recovered"]})", "application/json");
    }
  });
  server.start();

  HttpBackend backend(config_for(server));
  CHECK(backend.generate(kTeacher, "q", sampling(1)) == std::vector<std::string>{"recovered"});
  CHECK(hits == 3);
}

TEST_CASE("a persistent 5xx exhausts the retry budget") {
  TestServer server;
  std::atomic<int> hits{0};
  server.raw().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
    res.set_content("boom", "text/plain");
  });
  server.start();

  HttpBackend backend(config_for(server));
  try {
    backend.generate(kTeacher, "q", sampling(1));
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(e.attempts() == 3);
    CHECK(std::string(e.what()).find("HTTP 500") != std::string::npos);
  }
  CHECK(hits == 3);
}

TEST_CASE("4xx responses surface the server's complaint without retrying") {
  TestServer server;
  std::atomic<int> hits{0};
  server.raw().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 422;
    res.set_content("prompt too long", "text/plain");
  });
  server.start();

  HttpBackend backend(config_for(server));
  CHECK_THROWS_WITH_AS(backend.generate(kTeacher, "q", sampling(1)),
                       doctest::Contains("prompt too long"), UsageError);
  CHECK(hits == 1);
}

TEST_CASE("resolve maps 404 to ResolutionError and 200 to a model ref") {
  TestServer server;
  server.raw().Get("/models/units-7b", [](const httplib::Request&, httplib::Response& res) {
    const nlohmann::json record = to_json(kTeacher);
    res.set_content(record.dump(), "application/json");
  });
  server.raw().Get("/models/ghost", [](const httplib::Request&, httplib::Response& res) {
    res.status = 404;
    res.set_content("no such model", "text/plain");
  });
  server.start();

  HttpBackend backend(config_for(server));
  CHECK(backend.can_resolve("units-7b"));
  CHECK(backend.resolve("units-7b") == kTeacher);
  CHECK_FALSE(backend.can_resolve("ghost"));
  CHECK_THROWS_AS(backend.resolve("ghost"), ResolutionError);
}

TEST_CASE("a body that is not JSON counts as a transport failure") {
  TestServer server;
  std::atomic<int> hits{0};
  server.raw().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content("<html>proxy error</html>", "text/html");
  });
  server.start();

  auto config = config_for(server);
  config.retry_attempts = 2;
  HttpBackend backend(config);
  CHECK_THROWS_WITH_AS(backend.generate(kTeacher, "q", sampling(1)),
                       doctest::Contains("malformed response body"), TransportError);
  CHECK(hits == 2);  // malformed bodies are retried like dropped connections
}

TEST_CASE("a completion count mismatch is rejected") {
  TestServer server;
  server.raw().Post("/generate", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"completions": ["only one"]})", "application/json");
  });
  server.start();

  HttpBackend backend(config_for(server));
  CHECK_THROWS_WITH_AS(backend.generate(kTeacher, "q", sampling(3)),
                       doctest::Contains("expected 3 completions"), TransportError);
}

TEST_CASE("embed round-trips vectors and checks the count") {
  TestServer server;
  nlohmann::json seen_body;
  server.raw().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = nlohmann::json::parse(req.body);
    if (seen_body.at("texts").size() == 2) {
      res.set_content(R"({"vectors": [[1.0, 0.0], [0.0, 1.0]]})", "application/json");
    } else {
      res.set_content(R"({"vectors": [[1.0, 0.0]]})", "application/json");  // short
    }
  });
  server.start();

  HttpBackend backend(config_for(server));
  const auto vectors = backend.embed({"alpha", "beta"});
  REQUIRE(vectors.size() == 2);
  CHECK(vectors[0].values() == std::vector<double>{1.0, 0.0});
  CHECK(seen_body.at("texts") == nlohmann::json({"alpha", "beta"}));

  CHECK_THROWS_WITH_AS(backend.embed({"alpha", "beta", "gamma"}),
                       doctest::Contains("expected 3 vectors"), TransportError);
}

TEST_CASE("finetune returns the new ref or raises the job's error") {
  TestServer server;
  nlohmann::json seen_body;
  server.raw().Post("/finetune", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = nlohmann::json::parse(req.body);
    if (seen_body.at("tag") == "doomed") {
      res.set_content(R"({"error": "quota exhausted"})", "application/json");
      return;
    }
    ModelRef tuned = kTeacher;
    tuned.id = "units-7b+teacher";
    tuned.lineage.push_back({"teacher", "units-7b"});
    res.set_content(nlohmann::json({{"model", to_json(tuned)}}).dump(), "application/json");
  });
  server.start();

  HttpBackend backend(config_for(server));
  const std::vector<TrainingPair> corpus{{"2+2?", "4"}};

  const ModelRef tuned = backend.finetune(kTeacher, corpus, "teacher");
  CHECK(tuned.id == "units-7b+teacher");
  REQUIRE(tuned.lineage.size() == 1);
  CHECK(tuned.lineage[0].parent_id == "units-7b");
  CHECK(seen_body.at("base").at("id") == "units-7b");
  CHECK(seen_body.at("corpus") ==
        nlohmann::json::array({{{"prompt", "2+2?"}, {"target", "4"}}}));

  CHECK_THROWS_WITH_AS(backend.finetune(kTeacher, corpus, "doomed"),
                       doctest::Contains("quota exhausted"), JobError);
}

TEST_CASE("a missing token variable is refused up front") {
  TestServer server;
  server.start();
  auto config = config_for(server);
  unsetenv(kTokenVar);
  CHECK_THROWS_WITH_AS(HttpBackend{config}, doctest::Contains(kTokenVar), UsageError);
}

TEST_CASE("an unreachable host is a transport failure with full attempts") {
  HttpBackendConfig config;
  config.generation_url = "http://127.0.0.1:9";  // discard port; nothing listens
  config.retry_attempts = 2;
  config.backoff_base_ms = 1;
  HttpBackend backend(config);
  try {
    backend.generate(kTeacher, "q", sampling(1));
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(e.attempts() == 2);
  }
}
