#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <chrono>
#include <map>
#include <thread>

#include "doctest.h"
#include "hcc/errors.hpp"
#include "hcc/remote.hpp"
#include "json.hpp"

using namespace hcc;

namespace {

// Local endpoint with one route per failure mode.
class FakeBackend {
 public:
  FakeBackend() {
    server_.Post("/ok/v1/complete", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = nlohmann::json::parse(req.body);
      res.set_content(R"({"completion": "return a + b"})", "application/json");
    });
    server_.Post("/fail/v1/complete", [](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
      res.set_content("boom", "text/plain");
    });
    server_.Post("/nofield/v1/complete", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"text": "x"})", "application/json");
    });
    server_.Post("/slow/v1/complete", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(600));
      res.set_content(R"({"completion": "late"})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeBackend() {
    server_.stop();
    thread_.join();
  }

  RemoteBackend backend(const std::string& route, int timeout_ms = 2000) const {
    RemoteBackend b;
    b.base_url = "http://127.0.0.1:" + std::to_string(port_) + route;
    b.timeout_ms = timeout_ms;
    b.mode = BackendMode::live;
    b.bearer_token = "secret";
    return b;
  }

  std::string last_auth_;
  nlohmann::json last_body_;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](std::string_view name) -> std::optional<std::string> {
    auto it = vars.find(std::string(name));
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

}  // namespace

TEST_CASE("remote success sends prompt, limits and token") {
  FakeBackend fake;
  CHECK(remote_complete("def add(a, b):", 8, 0.5, fake.backend("/ok")) == "return a + b");
  CHECK(fake.last_auth_ == "Bearer secret");
  CHECK(fake.last_body_["prompt"] == "def add(a, b):");
  CHECK(fake.last_body_["max_tokens"] == 8);
  CHECK(fake.last_body_["temperature"] == 0.5);
}

TEST_CASE("remote failure modes") {
  FakeBackend fake;
  try {
    remote_complete("x", 4, 1.0, fake.backend("/fail"));
    FAIL("expected status error");
  } catch (const BackendStatusError& e) {
    CHECK(e.status() == 500);
  }
  CHECK_THROWS_AS(remote_complete("x", 4, 1.0, fake.backend("/nofield")), ProtocolError);
  CHECK_THROWS_AS(remote_complete("x", 4, 1.0, fake.backend("/slow", 200)), BackendTimeoutError);
}

TEST_CASE("unreachable or malformed endpoints") {
  RemoteBackend b;
  b.mode = BackendMode::live;
  b.base_url = "ftp://nowhere";
  CHECK_THROWS_AS(remote_complete("x", 4, 1.0, b), BackendError);
  b.base_url = "http://127.0.0.1:1";
  b.timeout_ms = 500;
  CHECK_THROWS_AS(remote_complete("x", 4, 1.0, b), BackendError);
}

TEST_CASE("backend selection from the environment") {
  const auto stub = backend_from_environment(env_of({}));
  CHECK(stub.mode == BackendMode::stub);
  const auto cfg = backend_from_environment(env_of({}), "http://cfg:1", 50);
  CHECK(cfg.mode == BackendMode::live);
  CHECK(cfg.base_url == "http://cfg:1");
  CHECK(cfg.timeout_ms == 50);
  const auto env = backend_from_environment(
      env_of({{"CC_REMOTE_URL", "http://env:2"}, {"CC_REMOTE_API_KEY", "k"}}), "http://cfg:1");
  CHECK(env.base_url == "http://env:2");
  CHECK(env.bearer_token == "k");
}

TEST_CASE("stub mode is offline and deterministic") {
  RemoteBackend b;
  const std::string a = remote_complete("def f():", 16, 1.0, b);
  CHECK_FALSE(a.empty());
  CHECK(remote_complete("def f():", 16, 1.0, b) == a);
  CHECK(remote_complete("def f():", 1, 1.0, b).find(' ') == std::string::npos);
}
