#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "hcc/remote.hpp"

#include <array>
#include <cstdlib>
#include <regex>

#include "hcc/digest.hpp"
#include "hcc/errors.hpp"
#include "hcc/lexer.hpp"
#include "json.hpp"

namespace hcc {

std::optional<std::string> process_env(std::string_view name) {
  const char* v = std::getenv(std::string(name).c_str());
  if (v == nullptr) return std::nullopt;
  return std::string(v);
}

RemoteBackend backend_from_environment(const EnvLookup& env, std::string_view config_url,
                                       int timeout_ms) {
  RemoteBackend b;
  b.timeout_ms = timeout_ms;
  if (auto url = env("CC_REMOTE_URL"); url && !url->empty()) {
    b.base_url = *url;
  } else {
    b.base_url = std::string(config_url);
  }
  if (auto key = env("CC_REMOTE_API_KEY")) b.bearer_token = *key;
  b.mode = b.base_url.empty() ? BackendMode::stub : BackendMode::live;
  return b;
}

namespace {

constexpr std::array<std::string_view, 8> kCannedCompletions = {
    "return a + b",
    "return None",
    "pass",
    "self . value = value",
    "for item in items : yield item",
    "if x is None : return 0",
    "return len ( items )",
    "raise ValueError ( message )",
};

std::string stub_completion(std::string_view prompt, int max_tokens) {
  const std::string digest = sha256_hex(prompt);
  const auto pick = std::stoul(digest.substr(0, 8), nullptr, 16) % kCannedCompletions.size();
  const auto tokens = tokenize_code(kCannedCompletions[pick]);
  std::string out;
  for (std::size_t i = 0; i < tokens.size() && static_cast<int>(i) < max_tokens; ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // request path
};

Endpoint split_url(const std::string& base) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(base, m, re)) throw BackendError("invalid remote URL '" + base + "'");
  std::string prefix = m[2].matched ? m[2].str() : std::string();
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix + "/v1/complete"};
}

}  // namespace

std::string remote_complete(std::string_view prompt, int max_tokens, double temperature,
                            const RemoteBackend& backend) {
  if (backend.mode == BackendMode::stub) return stub_completion(prompt, max_tokens);

  const Endpoint ep = split_url(backend.base_url);
  httplib::Client client(ep.origin);
  const auto sec = backend.timeout_ms / 1000;
  const auto usec = (backend.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  httplib::Headers headers;
  if (!backend.bearer_token.empty()) {
    headers.emplace("Authorization", "Bearer " + backend.bearer_token);
  }
  const nlohmann::json body = {
      {"prompt", std::string(prompt)}, {"max_tokens", max_tokens}, {"temperature", temperature}};

  auto res = client.Post(ep.path, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      throw BackendTimeoutError("remote backend timed out after " +
                                std::to_string(backend.timeout_ms) + " ms");
    }
    throw BackendError("remote backend request failed: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) throw BackendStatusError(res->status);

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("remote backend reply is not JSON");
  }
  if (!reply.is_object() || !reply.contains("completion") || !reply["completion"].is_string()) {
    throw ProtocolError("remote backend reply lacks a string \"completion\" field");
  }
  return reply["completion"].get<std::string>();
}

}  // namespace hcc
