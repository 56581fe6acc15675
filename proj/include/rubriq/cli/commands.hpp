#pragma once

#include "rubriq/corpus.hpp"
#include "rubriq/gateway.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

// Command implementations, callable in-process so the pipeline can run under
// an injected mock backend in tests. The thin argv layer lives in the binary.
namespace rubriq::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPipeline = 2;

struct BackendOptions {
    std::string kind = "mock"; // "mock" | "remote"
    std::string mock_script;   // optional JSON script path for the mock
    std::string endpoint;
    std::string model;
    std::string thinking_field;
    std::string auth_env = "RUBRIQ_API_KEY";
};

struct GlobalOptions {
    LabelMode label_mode = LabelMode::TwoWay;
    std::filesystem::path cache_dir;
    bool no_cache = false;
    std::optional<long> max_calls;
    int parallelism = 4;
    long seed = 0;
    BackendOptions backend;
    std::chrono::milliseconds backoff_base{1000};
    // Test hook: overrides backend construction when set.
    std::shared_ptr<Backend> injected_backend;
};

std::shared_ptr<Backend> make_backend(const BackendOptions& options);

// Gateway with the selected backend registered, plus the names commands need
// to build requests. Prefers the injected test backend when present.
struct GatewayBundle {
    std::unique_ptr<Gateway> gateway;
    std::string backend_id;
    std::string model;
};
GatewayBundle make_gateway(const GlobalOptions& options);

struct IngestOptions {
    std::filesystem::path corpus;
    std::filesystem::path out;
};
int cmd_ingest(const IngestOptions& options, const GlobalOptions& global);

struct GroupsOptions {
    std::filesystem::path corpus;
    std::filesystem::path out; // optional
    bool json = false;
};
int cmd_groups(const GroupsOptions& options, const GlobalOptions& global);

struct SynthOptions {
    std::filesystem::path corpus;
    std::filesystem::path out;
    int top_k = 25;
    int r_syn = 3;
    int max_discards = 3;
    double temperature = 0.7;
};
int cmd_synth(const SynthOptions& options, const GlobalOptions& global);

struct MetaGenOptions {
    std::filesystem::path corpus;
    std::filesystem::path out;
    std::vector<std::string> variants; // empty = the four standard variants
};
int cmd_meta_gen(const MetaGenOptions& options, const GlobalOptions& global);

struct ScoreOptions {
    std::filesystem::path corpus;
    std::filesystem::path out;
    std::string scorer = "baseline"; // baseline|meta|roleplay|svm|plan
    Split split = Split::Trial;
    std::string variant;                // required for meta
    std::filesystem::path prompts;      // variant store root (default <out>/prompts)
    std::filesystem::path selection;    // required for plan
    std::filesystem::path svm_model;    // optional: load if present, else train + save
    std::string thinking_budget = "medium"; // baseline/roleplay calls
};
int cmd_score(const ScoreOptions& options, const GlobalOptions& global);

struct SelectOptions {
    std::filesystem::path corpus;
    std::filesystem::path out;
    std::vector<std::filesystem::path> predictions; // Trial-split TSVs
};
int cmd_select(const SelectOptions& options, const GlobalOptions& global);

struct EvalOptions {
    std::filesystem::path corpus;
    std::filesystem::path predictions;
    Split split = Split::Trial;
    std::filesystem::path out; // optional
    bool json = false;
};
int cmd_eval(const EvalOptions& options, const GlobalOptions& global);

struct ReportOptions {
    std::filesystem::path corpus;
    std::vector<std::filesystem::path> predictions; // Trial-split TSVs
    std::filesystem::path selection;                // optional selection.json
    std::filesystem::path out;                      // optional
    bool json = false;
};
int cmd_report(const ReportOptions& options, const GlobalOptions& global);

// Maps exceptions to the binary's exit codes: bad arguments and missing
// inputs exit 1, pipeline failures exit 2.
template <typename F>
int run_command(F&& fn) {
    try {
        return std::forward<F>(fn)();
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPipeline;
    }
}

} // namespace rubriq::cli
