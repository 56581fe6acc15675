#include "rubriq/gateway.hpp"

#include "rubriq/digest.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <ctime>
#include <fstream>
#include <thread>

namespace rubriq {

using nlohmann::json;

std::string_view thinking_budget_to_string(ThinkingBudget b) {
    return b == ThinkingBudget::Medium ? "medium" : "high";
}

ThinkingBudget thinking_budget_from_string(std::string_view s) {
    if (s == "medium" || s == "Medium") return ThinkingBudget::Medium;
    if (s == "high" || s == "High") return ThinkingBudget::High;
    throw Error("unknown thinking budget: " + std::string(s));
}

namespace {

json request_to_json(const CompletionRequest& r) {
    // json object keys serialize sorted, so this is already canonical.
    return json{{"backend_id", r.backend_id},
                {"model", r.model},
                {"prompt", r.prompt},
                {"thinking_budget", thinking_budget_to_string(r.thinking_budget)},
                {"max_output", r.max_output},
                {"temperature", r.temperature}};
}

std::string iso8601_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

Gateway::Gateway(GatewayConfig config) : config_(std::move(config)) {
    if (config_.use_cache && !config_.cache_dir.empty()) {
        std::filesystem::create_directories(config_.cache_dir);
    }
}

void Gateway::register_backend(std::shared_ptr<Backend> backend) {
    std::lock_guard lock(mutex_);
    backends_[backend->id()] = std::move(backend);
}

std::string Gateway::cache_key(const CompletionRequest& request) {
    return sha256_hex(request_to_json(request).dump());
}

long Gateway::backend_calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::optional<Completion> Gateway::cache_lookup(const std::string& key) const {
    if (!config_.use_cache || config_.cache_dir.empty()) return std::nullopt;
    std::filesystem::path path = config_.cache_dir / key;
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    json entry = json::parse(in);
    Completion c;
    c.text = entry.at("response").at("text").get<std::string>();
    if (auto meta = entry.at("response").find("backend_meta");
        meta != entry.at("response").end()) {
        c.backend_meta = meta->get<std::map<std::string, std::string>>();
    }
    c.cached = true;
    return c;
}

void Gateway::cache_store(const std::string& key, const CompletionRequest& request,
                          const Completion& completion) const {
    if (!config_.use_cache || config_.cache_dir.empty()) return;
    std::filesystem::path path = config_.cache_dir / key;
    if (std::filesystem::exists(path)) return; // entries are append-only
    json entry{{"key", key},
               {"request", request_to_json(request)},
               {"response", json{{"text", completion.text},
                                 {"backend_meta", completion.backend_meta}}},
               {"created_at", iso8601_now()}};
    static std::atomic<unsigned> counter{0};
    std::filesystem::path tmp =
        path;
    tmp += ".tmp" + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << entry.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path); // atomic publish
}

Completion Gateway::call_with_retries(Backend& backend, const CompletionRequest& request) {
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            auto delay = config_.backoff_base * (1 << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        {
            std::unique_lock lock(mutex_);
            if (config_.max_calls && calls_ >= *config_.max_calls) {
                throw BudgetExceededError("call budget of " +
                                          std::to_string(*config_.max_calls) + " reached");
            }
            ++calls_;
            slots_cv_.wait(lock, [&] { return in_flight_ < config_.parallelism; });
            ++in_flight_;
        }
        try {
            Completion result = backend.call(request);
            {
                std::lock_guard lock(mutex_);
                --in_flight_;
            }
            slots_cv_.notify_one();
            return result;
        } catch (const TransientBackendError& e) {
            {
                std::lock_guard lock(mutex_);
                --in_flight_;
            }
            slots_cv_.notify_one();
            last_error = e.what();
        } catch (...) {
            {
                std::lock_guard lock(mutex_);
                --in_flight_;
            }
            slots_cv_.notify_one();
            throw;
        }
    }
    throw BackendUnavailableError("backend " + backend.id() + " failed after " +
                                  std::to_string(config_.max_retries) +
                                  " retries: " + last_error);
}

Completion Gateway::complete(const CompletionRequest& request) {
    if (request.prompt.empty()) throw Error("completion request with empty prompt");
    std::string key = cache_key(request);
    if (auto cached = cache_lookup(key)) return *cached;

    std::shared_ptr<Backend> backend;
    {
        std::lock_guard lock(mutex_);
        auto it = backends_.find(request.backend_id);
        if (it == backends_.end()) {
            throw UnknownBackendError("no backend registered with id: " + request.backend_id);
        }
        backend = it->second;
    }
    Completion result = call_with_retries(*backend, request);
    result.cached = false;
    cache_store(key, request, result);
    return result;
}

} // namespace rubriq
