#pragma once

#include "rubriq/gateway.hpp"

#include <string>

namespace rubriq {

struct RemoteBackendConfig {
    std::string id = "remote";
    std::string endpoint; // e.g. https://api.example.com/v1/chat/completions
    std::string model;    // default when the request leaves model empty
    std::string auth_env = "RUBRIQ_API_KEY";
    std::string auth_header = "Authorization";
    std::string auth_prefix = "Bearer ";
    // Provider field carrying the thinking budget; empty = not transmitted
    // (the budget still participates in the cache key).
    std::string thinking_field;
    int connect_timeout_s = 10;
    int read_timeout_s = 120;
};

// Chat-completion HTTP backend. Sends {model, messages, temperature,
// max_tokens} and reads choices[0].message.content. Transport failures,
// 429, and 5xx raise TransientBackendError so the gateway retries them;
// other non-2xx statuses are permanent.
class RemoteBackend : public Backend {
  public:
    explicit RemoteBackend(RemoteBackendConfig config);

    std::string id() const override;
    Completion call(const CompletionRequest& request) override;

  private:
    RemoteBackendConfig config_;
};

} // namespace rubriq
