#include "rubriq/mock_backend.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace rubriq {

using nlohmann::json;

MockBackend::MockBackend(std::string id) : id_(std::move(id)) {}

std::string MockBackend::id() const { return id_; }

void MockBackend::script_exact(std::string prompt, std::string response) {
    std::lock_guard lock(mutex_);
    exact_[std::move(prompt)] = std::move(response);
}

void MockBackend::add_handler(std::string contains, std::vector<std::string> responses) {
    std::lock_guard lock(mutex_);
    handlers_.push_back({std::move(contains), std::move(responses), 0});
}

void MockBackend::set_grader_keywords(std::vector<std::string> keywords) {
    std::lock_guard lock(mutex_);
    grader_keywords_ = std::move(keywords);
}

void MockBackend::set_default_response(std::string response) {
    std::lock_guard lock(mutex_);
    default_response_ = std::move(response);
}

long MockBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::vector<std::string> MockBackend::prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_;
}

void MockBackend::reset() {
    std::lock_guard lock(mutex_);
    calls_ = 0;
    prompts_.clear();
    for (auto& h : handlers_) h.next = 0;
}

namespace {

// Grading prompts wrap the answer in <StudentAnswer> tags; the grader scans
// only that segment so rubric text cannot trigger a keyword.
std::string_view answer_segment(std::string_view prompt) {
    constexpr std::string_view open = "<StudentAnswer>";
    constexpr std::string_view close = "</StudentAnswer>";
    std::size_t begin = prompt.find(open);
    if (begin == std::string_view::npos) return prompt;
    begin += open.size();
    std::size_t end = prompt.find(close, begin);
    if (end == std::string_view::npos) return prompt;
    return prompt.substr(begin, end - begin);
}

} // namespace

Completion MockBackend::call(const CompletionRequest& request) {
    std::lock_guard lock(mutex_);
    ++calls_;
    prompts_.push_back(request.prompt);

    for (auto& h : handlers_) {
        if (request.prompt.find(h.contains) == std::string::npos) continue;
        if (h.responses.empty()) break;
        std::size_t i = std::min(h.next, h.responses.size() - 1);
        ++h.next;
        return Completion{h.responses[i], false, {{"mock_rule", "handler"}}};
    }

    if (auto it = exact_.find(request.prompt); it != exact_.end()) {
        return Completion{it->second, false, {{"mock_rule", "exact"}}};
    }

    if (!grader_keywords_.empty()) {
        std::string_view segment = answer_segment(request.prompt);
        for (const auto& kw : grader_keywords_) {
            if (segment.find(kw) != std::string_view::npos) {
                return Completion{"Correct", false, {{"mock_rule", "grader"}}};
            }
        }
        return Completion{"Incorrect", false, {{"mock_rule", "grader"}}};
    }

    if (default_response_) {
        return Completion{*default_response_, false, {{"mock_rule", "default"}}};
    }

    throw UnscriptedPromptError("mock backend has no rule for prompt: " +
                                request.prompt.substr(0, 120));
}

std::shared_ptr<MockBackend> MockBackend::from_script_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read mock script: " + path.string());
    json script = json::parse(in);
    auto backend = std::make_shared<MockBackend>(script.value("id", std::string("mock")));
    if (script.contains("handlers")) {
        for (const auto& h : script.at("handlers")) {
            backend->add_handler(h.at("contains").get<std::string>(),
                                 h.at("responses").get<std::vector<std::string>>());
        }
    }
    if (script.contains("exact")) {
        for (const auto& [prompt, response] : script.at("exact").items()) {
            backend->script_exact(prompt, response.get<std::string>());
        }
    }
    if (script.contains("grader_keywords")) {
        backend->set_grader_keywords(script.at("grader_keywords").get<std::vector<std::string>>());
    }
    if (script.contains("default")) {
        backend->set_default_response(script.at("default").get<std::string>());
    }
    return backend;
}

} // namespace rubriq
