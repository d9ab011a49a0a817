#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace hcc {

enum class BackendMode { live, stub };

// Client settings for an external completion endpoint.
struct RemoteBackend {
  std::string base_url;      // e.g. "http://127.0.0.1:8080" or "https://host/prefix"
  std::string bearer_token;  // sent as "Authorization: Bearer <token>" when non-empty
  int timeout_ms = 10000;
  BackendMode mode = BackendMode::stub;
};

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;

// Reads the process environment.
std::optional<std::string> process_env(std::string_view name);

// Live when CC_REMOTE_URL (or, failing that, `config_url`) is non-empty;
// the token comes from CC_REMOTE_API_KEY.
RemoteBackend backend_from_environment(const EnvLookup& env, std::string_view config_url = {},
                                       int timeout_ms = 10000);

// POST {base}/v1/complete with {"prompt", "max_tokens", "temperature"} and
// return the "completion" string of the reply. Stub mode never touches the
// network and answers with a canned completion chosen by a hash of the
// prompt. Errors: BackendTimeoutError, BackendStatusError (non-2xx),
// ProtocolError (reply without a string "completion"), BackendError
// (connection failures).
std::string remote_complete(std::string_view prompt, int max_tokens, double temperature,
                            const RemoteBackend& backend);

}  // namespace hcc
