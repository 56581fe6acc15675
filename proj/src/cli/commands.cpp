#include "rubriq/cli/commands.hpp"

#include "rubriq/cli/output_dir.hpp"
#include "rubriq/corpus.hpp"
#include "rubriq/errors.hpp"
#include "rubriq/metaprompt.hpp"
#include "rubriq/metrics.hpp"
#include "rubriq/mock_backend.hpp"
#include "rubriq/remote_backend.hpp"
#include "rubriq/scorers.hpp"
#include "rubriq/svm.hpp"
#include "rubriq/synthgen.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <utility>

namespace fs = std::filesystem;
using nlohmann::json;

namespace rubriq::cli {

namespace {

void require_input_file(const fs::path& path, const std::string& what) {
    if (path.empty()) {
        throw UsageError("missing required path: " + what);
    }
    if (!fs::exists(path)) {
        throw UsageError(what + " not found: " + path.string());
    }
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<AnswerRecord> records_for_split(const Corpus& corpus, Split split) {
    std::vector<AnswerRecord> out;
    for (const auto& record : corpus.records) {
        if (record.split == split) {
            out.push_back(record);
        }
    }
    return out;
}

std::string short_id(const GroupId& id, std::size_t chars = 12) {
    return id.hex.substr(0, std::min(chars, id.hex.size()));
}

// Single-line preview, truncated on a UTF-8 boundary.
std::string preview(const std::string& text, std::size_t max_bytes = 40) {
    std::string flat;
    flat.reserve(text.size());
    for (char c : text) {
        flat.push_back(c == '\n' || c == '\t' || c == '\r' ? ' ' : c);
    }
    if (flat.size() <= max_bytes) {
        return flat;
    }
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(flat[cut]) & 0xC0) == 0x80) {
        --cut;
    }
    return flat.substr(0, cut) + "...";
}

std::string fmt3(double value) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(3) << value;
    return out.str();
}

std::string fmt_qwk(const std::optional<double>& value) {
    return value ? fmt3(*value) : std::string("undef");
}

ThinkingBudget parse_thinking(const std::string& text) {
    try {
        return thinking_budget_from_string(text);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

struct NamedPredictions {
    std::string key; // "scorer" or "scorer/variant"
    std::string scorer_id;
    std::string variant_id;
    std::vector<Prediction> predictions;
};

// Candidate rows are uniform per file; the first row names the approach.
std::vector<NamedPredictions> load_prediction_files(const std::vector<fs::path>& paths) {
    std::vector<NamedPredictions> out;
    std::set<std::string> seen;
    for (const auto& path : paths) {
        require_input_file(path, "predictions file");
        auto predictions = predictions_from_tsv(read_text_file(path));
        if (predictions.empty()) {
            std::cerr << "warning: " << path.string() << " holds no predictions; skipped\n";
            continue;
        }
        NamedPredictions entry;
        entry.scorer_id = predictions.front().scorer_id;
        entry.variant_id = predictions.front().variant_id;
        entry.key = entry.variant_id.empty() ? entry.scorer_id
                                             : entry.scorer_id + "/" + entry.variant_id;
        entry.predictions = std::move(predictions);
        if (!seen.insert(entry.key).second) {
            throw UsageError("two prediction files describe the same approach: " + entry.key);
        }
        out.push_back(std::move(entry));
    }
    return out;
}

json group_counts_json(const RubricGroup& group) {
    std::size_t synthetic = 0;
    for (const auto& member : group.members) {
        if (member.synthetic) {
            ++synthetic;
        }
    }
    return json{{"id", group.id.hex},
                {"question", group.question},
                {"train", group.split_members(Split::Train).size()},
                {"trial", group.split_members(Split::Trial).size()},
                {"test", group.split_members(Split::Test).size()},
                {"synthetic", synthetic},
                {"total", group.members.size()}};
}

SvmTextModel obtain_svm_model(const Corpus& corpus, const fs::path& model_path) {
    if (!model_path.empty() && fs::exists(model_path)) {
        return load_svm_text_model(model_path);
    }
    std::vector<std::string> texts;
    std::vector<Label> labels;
    for (const auto& record : corpus.records) {
        if (record.split == Split::Train && record.gold) {
            texts.push_back(record.answer);
            labels.push_back(*record.gold);
        }
    }
    if (texts.empty()) {
        throw Error("no labeled train records to fit the text classifier");
    }
    auto model = train_text_classifier(texts, labels);
    if (!model_path.empty()) {
        save_svm_text_model(model, model_path);
    }
    return model;
}

} // namespace

std::shared_ptr<Backend> make_backend(const BackendOptions& options) {
    if (options.kind == "mock") {
        if (options.mock_script.empty()) {
            return std::make_shared<MockBackend>();
        }
        require_input_file(options.mock_script, "mock script");
        return MockBackend::from_script_file(options.mock_script);
    }
    if (options.kind == "remote") {
        if (options.endpoint.empty()) {
            throw UsageError("the remote backend requires --endpoint");
        }
        if (options.model.empty()) {
            throw UsageError("the remote backend requires --model");
        }
        RemoteBackendConfig config;
        config.endpoint = options.endpoint;
        config.model = options.model;
        config.thinking_field = options.thinking_field;
        config.auth_env = options.auth_env;
        return std::make_shared<RemoteBackend>(config);
    }
    throw UsageError("unknown backend kind: " + options.kind);
}

GatewayBundle make_gateway(const GlobalOptions& options) {
    auto backend =
        options.injected_backend ? options.injected_backend : make_backend(options.backend);
    GatewayConfig config;
    config.cache_dir = options.cache_dir;
    config.use_cache = !options.no_cache && !options.cache_dir.empty();
    config.backoff_base = options.backoff_base;
    config.parallelism = options.parallelism;
    config.max_calls = options.max_calls;

    GatewayBundle bundle;
    bundle.backend_id = backend->id();
    bundle.model = options.backend.model.empty() ? "mock-model" : options.backend.model;
    bundle.gateway = std::make_unique<Gateway>(std::move(config));
    bundle.gateway->register_backend(std::move(backend));
    return bundle;
}

int cmd_ingest(const IngestOptions& options, const GlobalOptions& global) {
    require_input_file(options.corpus, "corpus");
    Corpus corpus = load_corpus(options.corpus, global.label_mode);
    auto groups = group_by_rubric(corpus);

    OutputDir out(options.out, global.label_mode, global.seed, global.cache_dir);
    out.write_file("corpus.jsonl", corpus_to_jsonl(corpus));
    out.finalize();

    std::cout << "ingested " << corpus.records.size() << " records in " << groups.size()
              << " groups -> " << (out.root() / "corpus.jsonl").string() << "\n";
    return kExitOk;
}

int cmd_groups(const GroupsOptions& options, const GlobalOptions& global) {
    require_input_file(options.corpus, "corpus");
    Corpus corpus = load_corpus(options.corpus, global.label_mode);
    auto groups = group_by_rubric(corpus);

    json doc{{"count", groups.size()}, {"groups", json::array()}};
    for (const auto& group : groups) {
        doc["groups"].push_back(group_counts_json(group));
    }

    if (options.json) {
        std::cout << doc.dump(2) << "\n";
    } else {
        std::ostringstream table;
        table << std::left << std::setw(14) << "group" << std::setw(44) << "question"
              << std::right << std::setw(7) << "train" << std::setw(7) << "trial"
              << std::setw(7) << "test" << std::setw(7) << "total" << "\n";
        for (const auto& group : groups) {
            table << std::left << std::setw(14) << short_id(group.id) << std::setw(44)
                  << preview(group.question) << std::right << std::setw(7)
                  << group.split_members(Split::Train).size() << std::setw(7)
                  << group.split_members(Split::Trial).size() << std::setw(7)
                  << group.split_members(Split::Test).size() << std::setw(7)
                  << group.members.size() << "\n";
        }
        table << groups.size() << " groups\n";
        std::cout << table.str();
    }

    if (!options.out.empty()) {
        OutputDir out(options.out, global.label_mode, global.seed, global.cache_dir);
        out.write_file("groups.json", doc.dump(2) + "\n");
        out.finalize();
    }
    return kExitOk;
}

int cmd_synth(const SynthOptions& options, const GlobalOptions& global) {
    require_input_file(options.corpus, "corpus");
    Corpus corpus = load_corpus(options.corpus, global.label_mode);
    OutputDir out(options.out, global.label_mode, global.seed, global.cache_dir);
    auto bundle = make_gateway(global);

    SynthConfig config;
    config.backend_id = bundle.backend_id;
    config.model = bundle.model;
    config.label_mode = global.label_mode;
    config.r_syn = options.r_syn;
    config.top_k = options.top_k;
    config.max_discards_per_group = options.max_discards;
    config.gen_temperature = options.temperature;

    SynthResult result;
    bool aborted = false;
    std::string abort_reason;
    try {
        result = generate_for_corpus(*bundle.gateway, corpus, config);
    } catch (SynthAbortedError& e) {
        result = std::move(e.partial);
        aborted = true;
        abort_reason = e.what();
    }

    json report{{"format", "synth-report/1"},
                {"groups", json::array()},
                {"samples", json::array()}};
    std::int64_t accepted = 0;
    std::int64_t discarded = 0;
    for (const auto& group : result.reports) {
        accepted += group.accepted;
        discarded += group.discarded;
        report["groups"].push_back(json{{"group_id", group.group_id.hex},
                                        {"quota", group.quota},
                                        {"accepted", group.accepted},
                                        {"discarded", group.discarded},
                                        {"attempts", group.attempts}});
    }
    for (const auto& sample : result.samples) {
        report["samples"].push_back(json{{"id", sample.id},
                                         {"group_id", sample.group_id.hex},
                                         {"target", std::string(label_to_string(sample.target))},
                                         {"attempts", sample.attempts},
                                         {"accepted", sample.accepted},
                                         {"lineage", sample.lineage}});
    }

    out.write_file("corpus_synth.jsonl", corpus_to_jsonl(result.corpus));
    out.write_file("synth_report.json", report.dump(2) + "\n");
    out.finalize();

    std::cerr << "backend calls: " << bundle.gateway->backend_calls() << "\n";
    if (aborted) {
        std::cerr << "aborted: " << abort_reason << " (partial results persisted)\n";
        return kExitPipeline;
    }
    std::cout << "accepted " << accepted << " synthetic answers (" << discarded
              << " discarded) -> " << (out.root() / "corpus_synth.jsonl").string() << "\n";
    return kExitOk;
}

int cmd_meta_gen(const MetaGenOptions& options, const GlobalOptions& global) {
    require_input_file(options.corpus, "corpus");
    Corpus corpus = load_corpus(options.corpus, global.label_mode);
    auto groups = group_by_rubric(corpus);

    std::vector<VariantConfig> configs;
    if (options.variants.empty()) {
        configs = standard_variants();
    } else {
        for (const auto& id : options.variants) {
            try {
                configs.push_back(variant_config_from_id(id));
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
        }
    }

    OutputDir out(options.out, global.label_mode, global.seed, global.cache_dir);
    auto bundle = make_gateway(global);
    VariantStore store(out.root() / "prompts");
    InductionSettings settings;
    settings.backend_id = bundle.backend_id;
    settings.model = bundle.model;

    int induced = 0;
    int skipped = 0;
    int failed = 0;
    bool out_of_budget = false;
    std::string budget_reason;
    for (const auto& group : groups) {
        for (const auto& config : configs) {
            const std::string vid = variant_id(config);
            if (group.train_members(config.use_synthetic).empty()) {
                std::cerr << "warning: group " << short_id(group.id)
                          << " has no train answers for " << vid << "; skipped\n";
                ++skipped;
                continue;
            }
            try {
                store.put(induce_group_prompt(*bundle.gateway, group, config,
                                              global.label_mode, settings));
                ++induced;
            } catch (const InductionFailedError& e) {
                std::cerr << "warning: group " << short_id(group.id) << " variant " << vid
                          << ": " << e.what() << "\n";
                ++failed;
            } catch (const BudgetExceededError& e) {
                out_of_budget = true;
                budget_reason = e.what();
                break;
            }
        }
        if (out_of_budget) {
            break;
        }
    }
    out.finalize();

    std::cerr << "backend calls: " << bundle.gateway->backend_calls() << "\n";
    if (out_of_budget) {
        std::cerr << "aborted: " << budget_reason << " (induced templates persisted)\n";
        return kExitPipeline;
    }
    std::cout << "induced " << induced << " templates across " << groups.size() << " groups ("
              << failed << " failed, " << skipped << " skipped) -> " << store.root().string()
              << "\n";
    return failed == 0 ? kExitOk : kExitPipeline;
}

int cmd_score(const ScoreOptions& options, const GlobalOptions& global) {
    require_input_file(options.corpus, "corpus");
    Corpus corpus = load_corpus(options.corpus, global.label_mode);
    auto groups = group_by_rubric(corpus);
    auto records = records_for_split(corpus, options.split);
    if (records.empty()) {
        throw Error(std::string("no records in split ") + std::string(split_to_string(options.split)));
    }

    OutputDir out(options.out, global.label_mode, global.seed, global.cache_dir);
    const fs::path prompts_root =
        options.prompts.empty() ? out.root() / "prompts" : options.prompts;

    ScorerConfig config;
    config.scorer_id = options.scorer;
    config.label_mode = global.label_mode;
    config.thinking_budget = parse_thinking(options.thinking_budget);

    // Keep every collaborator a scorer may point at alive for the batch.
    GatewayBundle bundle;
    std::optional<VariantStore> store;
    std::unique_ptr<SvmScorer> svm_scorer;
    std::unique_ptr<Scorer> scorer;
    std::optional<SelectionPlan> plan;

    if (options.scorer != "svm") {
        bundle = make_gateway(global);
        config.backend_id = bundle.backend_id;
        config.model = bundle.model;
    }

    if (options.scorer == "baseline") {
        scorer = std::make_unique<BaselineScorer>(*bundle.gateway, config);
    } else if (options.scorer == "roleplay") {
        if (global.label_mode != LabelMode::TwoWay) {
            throw UsageError("role-play scoring supports two-way labels only");
        }
        scorer = std::make_unique<RoleplayScorer>(*bundle.gateway, config);
    } else if (options.scorer == "meta") {
        if (options.variant.empty()) {
            throw UsageError("meta scoring requires --variant");
        }
        try {
            variant_config_from_id(options.variant);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        if (!fs::exists(prompts_root)) {
            throw UsageError("prompt store not found: " + prompts_root.string());
        }
        config.scorer_id = "meta";
        store.emplace(prompts_root);
        scorer = std::make_unique<GroupPromptScorer>(*bundle.gateway, *store, groups,
                                                     options.variant, config);
    } else if (options.scorer == "svm") {
        if (global.label_mode != LabelMode::TwoWay) {
            throw UsageError("svm scoring supports two-way labels only");
        }
        svm_scorer = std::make_unique<SvmScorer>(obtain_svm_model(corpus, options.svm_model));
        scorer = std::move(svm_scorer);
    } else if (options.scorer == "plan") {
        require_input_file(options.selection, "selection plan");
        plan = selection_plan_from_json(json::parse(read_text_file(options.selection)));
        config.scorer_id = "plan";
        store.emplace(prompts_root);
        std::map<std::string, Scorer*> extra;
        const bool needs_svm =
            std::any_of(plan->per_group.begin(), plan->per_group.end(),
                        [](const auto& kv) { return kv.second.scorer_id == "svm"; });
        if (needs_svm) {
            svm_scorer = std::make_unique<SvmScorer>(obtain_svm_model(corpus, options.svm_model));
            extra["svm"] = svm_scorer.get();
        }
        scorer = std::make_unique<PlanScorer>(*bundle.gateway, *store, groups, *plan, config,
                                              std::move(extra));
    } else {
        throw UsageError("unknown scorer: " + options.scorer);
    }

    std::vector<Prediction> predictions;
    bool aborted = false;
    std::string abort_reason;
    try {
        predictions = score_batch(*scorer, records, global.parallelism);
    } catch (BatchAbortedError& e) {
        predictions = std::move(e.partial);
        aborted = true;
        abort_reason = e.what();
    }

    std::string name = "predictions_" + options.scorer;
    if (options.scorer == "meta") {
        name += "_" + options.variant;
    }
    name += "_" + std::string(split_to_string(options.split)) + ".tsv";
    out.write_file(name, predictions_to_tsv(predictions));
    out.finalize();

    const auto abstained = static_cast<std::size_t>(std::count_if(
        predictions.begin(), predictions.end(), [](const Prediction& p) { return p.abstained; }));
    std::cerr << "scored " << predictions.size() << "/" << records.size() << " records, "
              << abstained << " abstentions";
    if (bundle.gateway) {
        std::cerr << ", " << bundle.gateway->backend_calls() << " backend calls";
    }
    std::cerr << "\n";
    if (aborted) {
        std::cerr << "aborted: " << abort_reason << " (partial predictions persisted)\n";
        return kExitPipeline;
    }
    std::cout << "wrote " << predictions.size() << " predictions -> "
              << (out.root() / name).string() << "\n";
    return kExitOk;
}

int cmd_select(const SelectOptions& options, const GlobalOptions& global) {
    require_input_file(options.corpus, "corpus");
    Corpus corpus = load_corpus(options.corpus, global.label_mode);
    auto groups = group_by_rubric(corpus);

    auto files = load_prediction_files(options.predictions);
    if (files.empty()) {
        throw UsageError("no usable prediction files were given");
    }
    std::vector<TrialCandidate> candidates;
    candidates.reserve(files.size());
    for (auto& file : files) {
        candidates.push_back(
            TrialCandidate{file.scorer_id, file.variant_id, std::move(file.predictions)});
    }

    SelectionPlan plan = select_best_method(groups, candidates, global.label_mode);
    for (const auto& warning : plan.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }

    OutputDir out(options.out, global.label_mode, global.seed, global.cache_dir);
    out.write_file("selection.json", selection_plan_to_json(plan).dump(2) + "\n");
    out.finalize();

    std::cout << "selected a scoring method for " << plan.per_group.size() << " groups -> "
              << (out.root() / "selection.json").string() << "\n";
    return kExitOk;
}

int cmd_eval(const EvalOptions& options, const GlobalOptions& global) {
    require_input_file(options.corpus, "corpus");
    require_input_file(options.predictions, "predictions file");
    Corpus corpus = load_corpus(options.corpus, global.label_mode);
    auto records = records_for_split(corpus, options.split);
    auto predictions = predictions_from_tsv(read_text_file(options.predictions));

    EvalReport report = evaluate(records, predictions, class_count(global.label_mode));
    if (options.json) {
        std::cout << eval_report_to_json(report).dump(2) << "\n";
    } else {
        std::cout << eval_report_to_table(report);
    }

    if (!options.out.empty()) {
        OutputDir out(options.out, global.label_mode, global.seed, global.cache_dir);
        out.write_file("eval_" + options.predictions.stem().string() + ".json",
                       eval_report_to_json(report).dump(2) + "\n");
        out.finalize();
    }
    return kExitOk;
}

namespace {

struct ReportRow {
    std::string approach;
    std::string scorer_id;
    std::string variant_id;
    EvalReport report;
};

// Fixed presentation order: baseline, induced variants in their canonical
// order, role-play, svm, anything else by name; the composite row is
// appended last by the caller.
std::tuple<int, int, std::string> report_rank(const ReportRow& row) {
    if (row.scorer_id == "baseline" && row.variant_id.empty()) {
        return {0, 0, ""};
    }
    if (row.scorer_id == "meta") {
        auto rank = standard_variant_rank(row.variant_id);
        return {1, rank ? *rank : 99, row.variant_id};
    }
    if (row.scorer_id == "roleplay") {
        return {2, 0, ""};
    }
    if (row.scorer_id == "svm") {
        return {3, 0, ""};
    }
    return {4, 0, row.approach};
}

} // namespace

int cmd_report(const ReportOptions& options, const GlobalOptions& global) {
    require_input_file(options.corpus, "corpus");
    Corpus corpus = load_corpus(options.corpus, global.label_mode);
    auto trial = records_for_split(corpus, Split::Trial);
    auto groups = group_by_rubric(corpus);
    const int k = class_count(global.label_mode);

    auto files = load_prediction_files(options.predictions);
    if (files.empty()) {
        throw UsageError("no usable prediction files were given");
    }

    std::vector<ReportRow> rows;
    std::map<std::string, std::map<std::string, const Prediction*>> by_key;
    for (const auto& file : files) {
        rows.push_back(
            ReportRow{file.key, file.scorer_id, file.variant_id, evaluate(trial, file.predictions, k)});
        auto& index = by_key[file.key];
        for (const auto& prediction : file.predictions) {
            index[prediction.record_id] = &prediction;
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return report_rank(a) < report_rank(b);
    });

    if (!options.selection.empty()) {
        require_input_file(options.selection, "selection plan");
        SelectionPlan plan = selection_plan_from_json(json::parse(read_text_file(options.selection)));
        GroupIndex index(groups);
        std::vector<Prediction> composed;
        composed.reserve(trial.size());
        for (const auto& record : trial) {
            std::string key = "baseline";
            if (auto gid = index.try_route(record)) {
                if (auto hit = plan.per_group.find(*gid); hit != plan.per_group.end()) {
                    const GroupChoice& choice = hit->second;
                    key = choice.variant_id.empty()
                              ? choice.scorer_id
                              : choice.scorer_id + "/" + choice.variant_id;
                }
            }
            auto approach = by_key.find(key);
            if (approach == by_key.end()) {
                throw Error("the selection plan chose " + key +
                            " but no predictions file provides it");
            }
            auto found = approach->second.find(record.id);
            if (found == approach->second.end()) {
                throw Error("approach " + key + " has no prediction for record " + record.id);
            }
            composed.push_back(*found->second);
        }
        rows.push_back(ReportRow{"selection", "selection", "", evaluate(trial, composed, k)});
    }

    json doc{{"format", "report/1"},
             {"label_mode", std::string(label_mode_to_string(global.label_mode))},
             {"rows", json::array()}};
    std::size_t width = 8;
    for (const auto& row : rows) {
        width = std::max(width, row.approach.size());
        const GroupMetrics& m = row.report.overall;
        doc["rows"].push_back(json{{"approach", row.approach},
                                   {"scorer", row.scorer_id},
                                   {"variant", row.variant_id},
                                   {"n", m.n},
                                   {"accuracy", m.accuracy},
                                   {"weighted_f1", m.weighted_f1},
                                   {"qwk", m.qwk ? json(*m.qwk) : json(nullptr)},
                                   {"abstained", row.report.abstained}});
    }

    std::ostringstream table;
    table << std::left << std::setw(static_cast<int>(width) + 2) << "approach" << std::right
          << std::setw(12) << "weighted_f1" << std::setw(8) << "qwk" << "\n";
    for (const auto& row : rows) {
        table << std::left << std::setw(static_cast<int>(width) + 2) << row.approach
              << std::right << std::setw(12) << fmt3(row.report.overall.weighted_f1)
              << std::setw(8) << fmt_qwk(row.report.overall.qwk) << "\n";
    }

    std::cout << (options.json ? doc.dump(2) + "\n" : table.str());

    if (!options.out.empty()) {
        OutputDir out(options.out, global.label_mode, global.seed, global.cache_dir);
        out.write_file("report.json", doc.dump(2) + "\n");
        out.write_file("report.txt", table.str());
        out.finalize();
    }
    return kExitOk;
}

} // namespace rubriq::cli
