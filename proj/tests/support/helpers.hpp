#pragma once

#include "rubriq/corpus.hpp"
#include "rubriq/gateway.hpp"
#include "rubriq/mock_backend.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace testing {

// Fresh directory under the system temp root, removed on destruction.
class TempDir {
  public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        auto base = std::filesystem::temp_directory_path();
        path_ = base / ("rubriq-test-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline rubriq::AnswerRecord
make_record(std::string id, std::string question, std::string answer,
            std::optional<rubriq::Label> gold = std::nullopt,
            rubriq::Split split = rubriq::Split::Train,
            std::string rubric_correct = "Names the expected fact.",
            std::string rubric_incorrect = "States something else.") {
    rubriq::AnswerRecord r;
    r.id = std::move(id);
    r.question = std::move(question);
    r.answer = std::move(answer);
    r.gold = gold;
    r.split = split;
    r.rubric.correct = std::move(rubric_correct);
    r.rubric.incorrect = std::move(rubric_incorrect);
    return r;
}

inline rubriq::Corpus make_corpus(std::vector<rubriq::AnswerRecord> records,
                                  rubriq::LabelMode mode = rubriq::LabelMode::TwoWay) {
    rubriq::Corpus c;
    c.records = std::move(records);
    c.label_mode = mode;
    return c;
}

// Deterministic label vectors; mt19937_64 is fully specified, and the
// modulo projection keeps draws platform-independent.
class LabelGen {
  public:
    explicit LabelGen(std::uint64_t seed) : rng_(seed) {}

    rubriq::Label label(int k) {
        const auto r = static_cast<int>(rng_() % static_cast<std::uint64_t>(k));
        return rubriq::label_at(r, k);
    }
    std::vector<rubriq::Label> labels(std::size_t n, int k) {
        std::vector<rubriq::Label> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(label(k));
        return out;
    }
    std::uint64_t raw() { return rng_(); }

  private:
    std::mt19937_64 rng_;
};

// Gateway over a fresh mock backend; keeps both visible to the test.
struct MockRig {
    std::shared_ptr<rubriq::MockBackend> backend = std::make_shared<rubriq::MockBackend>();
    std::unique_ptr<rubriq::Gateway> gateway;

    explicit MockRig(rubriq::GatewayConfig config = {}) {
        if (config.cache_dir.empty()) config.use_cache = false;
        gateway = std::make_unique<rubriq::Gateway>(std::move(config));
        gateway->register_backend(backend);
    }
};

} // namespace testing
