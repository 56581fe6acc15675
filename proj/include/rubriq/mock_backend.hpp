#pragma once

#include "rubriq/gateway.hpp"

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

namespace rubriq {

struct UnscriptedPromptError : BackendError {
    using BackendError::BackendError;
};

// Deterministic local backend for desk-scale runs and tests. Rules are
// evaluated in a fixed order per call:
//   1. substring handlers, in registration order (each owns a response
//      sequence that advances per match and sticks on its last entry),
//   2. the exact prompt table,
//   3. the rule grader, when keywords are set: "Correct" iff the
//      <StudentAnswer>...</StudentAnswer> segment (whole prompt when the tags
//      are absent) contains any keyword, else "Incorrect",
//   4. the default response, else UnscriptedPrompt.
// Sequenced handlers make responses call-order dependent; keep gateway
// parallelism at 1 when a test relies on them.
class MockBackend : public Backend {
  public:
    explicit MockBackend(std::string id = "mock");

    std::string id() const override;
    Completion call(const CompletionRequest& request) override;

    void script_exact(std::string prompt, std::string response);
    void add_handler(std::string contains, std::vector<std::string> responses);
    void set_grader_keywords(std::vector<std::string> keywords);
    void set_default_response(std::string response);

    long calls() const;
    std::vector<std::string> prompts() const;
    void reset();

    // Script file: JSON object with optional keys "id", "exact" (object),
    // "handlers" (array of {"contains", "responses"}), "grader_keywords"
    // (array), "default" (string).
    static std::shared_ptr<MockBackend> from_script_file(const std::filesystem::path& path);

  private:
    struct Handler {
        std::string contains;
        std::vector<std::string> responses;
        std::size_t next = 0;
    };

    std::string id_;
    mutable std::mutex mutex_;
    std::vector<Handler> handlers_;
    std::map<std::string, std::string> exact_;
    std::vector<std::string> grader_keywords_;
    std::optional<std::string> default_response_;
    long calls_ = 0;
    std::vector<std::string> prompts_;
};

} // namespace rubriq
