#include "rubriq/remote_backend.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>

namespace rubriq {

using nlohmann::json;

RemoteBackend::RemoteBackend(RemoteBackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw Error("remote backend requires an endpoint URL");
}

std::string RemoteBackend::id() const { return config_.id; }

namespace {

// Splits "scheme://host[:port]/path" into the client base and the path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    std::size_t scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw Error("endpoint must include a scheme: " + endpoint);
    }
    std::size_t path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

} // namespace

Completion RemoteBackend::call(const CompletionRequest& request) {
    const char* key = std::getenv(config_.auth_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw AuthMissingError("environment variable " + config_.auth_env +
                               " is not set (required by backend " + config_.id + ")");
    }

    json body{{"model", request.model.empty() ? config_.model : request.model},
              {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})},
              {"temperature", request.temperature},
              {"max_tokens", request.max_output}};
    if (!config_.thinking_field.empty()) {
        body[config_.thinking_field] = thinking_budget_to_string(request.thinking_budget);
    }

    auto [base, path] = split_endpoint(config_.endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(config_.connect_timeout_s, 0);
    client.set_read_timeout(config_.read_timeout_s, 0);
    httplib::Headers headers{{config_.auth_header, config_.auth_prefix + key}};

    auto result = client.Post(path, headers, body.dump(), "application/json");
    if (!result) {
        throw TransientBackendError("transport error calling " + config_.endpoint + ": " +
                                    httplib::to_string(result.error()));
    }
    if (result->status == 429 || result->status >= 500) {
        throw TransientBackendError("backend " + config_.id + " returned status " +
                                    std::to_string(result->status));
    }
    if (result->status < 200 || result->status >= 300) {
        throw BackendError("backend " + config_.id + " returned status " +
                           std::to_string(result->status) + ": " + result->body);
    }

    json payload = json::parse(result->body);
    const auto& choices = payload.at("choices");
    if (!choices.is_array() || choices.empty()) {
        throw BackendError("backend response has no choices: " + result->body);
    }
    Completion completion;
    completion.text = choices.at(0).at("message").at("content").get<std::string>();
    completion.backend_meta["status"] = std::to_string(result->status);
    if (payload.contains("model") && payload.at("model").is_string()) {
        completion.backend_meta["model"] = payload.at("model").get<std::string>();
    }
    return completion;
}

} // namespace rubriq
