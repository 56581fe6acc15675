#pragma once

#include "rubriq/errors.hpp"

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace rubriq {

enum class ThinkingBudget { Medium, High };

std::string_view thinking_budget_to_string(ThinkingBudget b);
ThinkingBudget thinking_budget_from_string(std::string_view s);

struct CompletionRequest {
    std::string backend_id;
    std::string model;
    std::string prompt;
    ThinkingBudget thinking_budget = ThinkingBudget::Medium;
    int max_output = 1024;
    double temperature = 0.0;
};

struct Completion {
    std::string text;
    bool cached = false;
    std::map<std::string, std::string> backend_meta;
};

struct BackendError : Error {
    using Error::Error;
};

// Retryable: transport failures and provider rate limits.
struct TransientBackendError : BackendError {
    using BackendError::BackendError;
};

struct BackendUnavailableError : BackendError {
    using BackendError::BackendError;
};

struct AuthMissingError : BackendError {
    using BackendError::BackendError;
};

struct BudgetExceededError : Error {
    using Error::Error;
};

struct UnknownBackendError : Error {
    using Error::Error;
};

class Backend {
  public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    // Throws TransientBackendError for failures worth retrying.
    virtual Completion call(const CompletionRequest& request) = 0;
};

struct GatewayConfig {
    std::filesystem::path cache_dir; // empty disables the cache
    bool use_cache = true;
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{1000}; // doubled per retry: 1s, 2s, 4s
    int parallelism = 4;
    std::optional<long> max_calls; // budget over physical backend calls
};

// Completion front end: content-addressed response cache, transient-error
// retries with exponential backoff, bounded in-flight concurrency, and a
// total-call budget. Cache hits consume no budget and no backend calls.
class Gateway {
  public:
    explicit Gateway(GatewayConfig config);

    void register_backend(std::shared_ptr<Backend> backend);

    Completion complete(const CompletionRequest& request);

    // Stable across processes: digest of the canonical request JSON.
    static std::string cache_key(const CompletionRequest& request);

    long backend_calls() const;

    const GatewayConfig& config() const { return config_; }

  private:
    std::optional<Completion> cache_lookup(const std::string& key) const;
    void cache_store(const std::string& key, const CompletionRequest& request,
                     const Completion& completion) const;
    Completion call_with_retries(Backend& backend, const CompletionRequest& request);

    GatewayConfig config_;
    std::map<std::string, std::shared_ptr<Backend>> backends_;
    mutable std::mutex mutex_;
    std::condition_variable slots_cv_;
    int in_flight_ = 0;
    long calls_ = 0;
};

} // namespace rubriq
