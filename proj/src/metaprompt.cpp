#include "rubriq/metaprompt.hpp"

#include "rubriq/strings.hpp"
#include "rubriq/templates.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace rubriq {

using nlohmann::json;

std::string variant_id(const VariantConfig& config) {
    std::string id = config.formulation == Formulation::Base ? "base" : "ext";
    id += config.thinking_budget == ThinkingBudget::Medium ? "-medium" : "-high";
    if (config.use_synthetic) id += "-syn";
    return id;
}

VariantConfig variant_config_from_id(const std::string& id) {
    VariantConfig config;
    std::string rest = id;
    if (rest.rfind("base-", 0) == 0) {
        config.formulation = Formulation::Base;
        rest = rest.substr(5);
    } else if (rest.rfind("ext-", 0) == 0) {
        config.formulation = Formulation::Extended;
        rest = rest.substr(4);
    } else {
        throw Error("unknown variant id: " + id);
    }
    if (rest.rfind("-syn") != std::string::npos && rest.size() >= 4 &&
        rest.compare(rest.size() - 4, 4, "-syn") == 0) {
        config.use_synthetic = true;
        rest = rest.substr(0, rest.size() - 4);
    }
    config.thinking_budget = thinking_budget_from_string(rest);
    return config;
}

const std::vector<VariantConfig>& standard_variants() {
    static const std::vector<VariantConfig> variants = {
        {Formulation::Base, ThinkingBudget::Medium, false},
        {Formulation::Base, ThinkingBudget::High, false},
        {Formulation::Base, ThinkingBudget::High, true},
        {Formulation::Extended, ThinkingBudget::High, false},
    };
    return variants;
}

std::optional<int> standard_variant_rank(const std::string& id) {
    const auto& variants = standard_variants();
    for (std::size_t i = 0; i < variants.size(); ++i) {
        if (variant_id(variants[i]) == id) return static_cast<int>(i);
    }
    return std::nullopt;
}

InductionFailedError::InductionFailedError(const GroupId& group,
                                           const std::vector<Violation>& vs)
    : Error("prompt induction failed for group " + group.hex), violations(vs) {}

std::string training_examples_json(const RubricGroup& group, LabelMode mode,
                                   bool include_synthetic) {
    std::vector<const AnswerRecord*> members = group.train_members(include_synthetic);
    std::sort(members.begin(), members.end(),
              [](const AnswerRecord* a, const AnswerRecord* b) { return a->id < b->id; });
    json examples = json::array();
    for (const AnswerRecord* record : members) {
        if (!record->gold) throw MissingGoldError(record->id);
        examples.push_back(json{{"answer", record->answer},
                                {"label", label_to_string(label_in_mode(*record->gold, mode))}});
    }
    return examples.dump(2);
}

std::string build_meta_prompt(const RubricGroup& group, const VariantConfig& config,
                              LabelMode mode) {
    std::vector<const AnswerRecord*> members = group.train_members(config.use_synthetic);
    if (members.empty()) {
        throw EmptyGroupError("group " + group.id.hex + " has no training answers");
    }
    std::string prompt =
        templates::meta_prompt_instructions(mode, config.formulation == Formulation::Extended);
    prompt += render(templates::meta_prompt_input(),
                     {{"question", group.question},
                      {"rubric_incorrect", group.rubric.incorrect},
                      {"rubric_partially_correct", group.rubric.partially_correct},
                      {"rubric_correct", group.rubric.correct},
                      {"training_examples",
                       training_examples_json(group, mode, config.use_synthetic)}});
    return prompt;
}

namespace {

std::string corrective_suffix(int attempt, const std::vector<Violation>& violations) {
    std::string out = "\n\nAttempt " + std::to_string(attempt) +
                      ": your previous template was rejected for these reasons:\n";
    for (const auto& v : violations) out += "- " + violation_to_string(v) + "\n";
    out += "Generate the prompt template again and fix every issue. It must contain exactly "
           "the placeholders {question} and {answer_to_classify} and no others.";
    return out;
}

} // namespace

PromptVariant induce_group_prompt(Gateway& gateway, const RubricGroup& group,
                                  const VariantConfig& config, LabelMode mode,
                                  const InductionSettings& settings) {
    const std::string base_prompt = build_meta_prompt(group, config, mode);
    std::vector<Violation> violations;
    for (int attempt = 1; attempt <= 1 + settings.max_regenerations; ++attempt) {
        CompletionRequest request;
        request.backend_id = settings.backend_id;
        request.model = settings.model;
        request.prompt =
            attempt == 1 ? base_prompt : base_prompt + corrective_suffix(attempt, violations);
        request.thinking_budget = config.thinking_budget;
        Completion completion = gateway.complete(request);
        std::string text = trim(completion.text);
        violations = validate_template(text, templates::induced_required());
        if (violations.empty()) {
            PromptVariant variant;
            variant.variant_id = variant_id(config);
            variant.group_id = group.id;
            variant.config = config;
            variant.tpl = PromptTemplate{text, templates::induced_required(),
                                         TemplateSource::Induced};
            variant.provenance = Gateway::cache_key(request);
            return variant;
        }
    }
    throw InductionFailedError(group.id, violations);
}

VariantStore::VariantStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

namespace {

json variant_meta(const PromptVariant& v) {
    return json{{"group_id", v.group_id.hex},
                {"formulation", v.config.formulation == Formulation::Base ? "base" : "extended"},
                {"thinking_budget", thinking_budget_to_string(v.config.thinking_budget)},
                {"use_synthetic", v.config.use_synthetic},
                {"provenance", v.provenance},
                {"template_version", templates::kVersion}};
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

void VariantStore::put(const PromptVariant& variant) {
    std::lock_guard lock(mutex_);
    std::filesystem::path dir = root_ / variant.group_id.hex;
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / (variant.variant_id + ".txt"), variant.tpl.text);

    std::filesystem::path meta_path = dir / "meta.json";
    json meta = json::object();
    if (std::filesystem::exists(meta_path)) meta = json::parse(read_file(meta_path));
    if (!meta.contains("variants")) meta["variants"] = json::object();
    meta["variants"][variant.variant_id] = variant_meta(variant);
    write_file_atomic(meta_path, meta.dump(2) + "\n");
}

PromptVariant VariantStore::get(const GroupId& group, const std::string& vid) const {
    std::lock_guard lock(mutex_);
    std::filesystem::path dir = root_ / group.hex;
    std::filesystem::path text_path = dir / (vid + ".txt");
    if (!std::filesystem::exists(text_path)) {
        throw Error("no stored prompt for group " + group.hex + " variant " + vid);
    }
    PromptVariant variant;
    variant.variant_id = vid;
    variant.group_id = group;
    variant.tpl = PromptTemplate{read_file(text_path), templates::induced_required(),
                                 TemplateSource::Induced};
    json meta = json::parse(read_file(dir / "meta.json"));
    const json& entry = meta.at("variants").at(vid);
    variant.config.formulation =
        entry.at("formulation").get<std::string>() == "base" ? Formulation::Base
                                                             : Formulation::Extended;
    variant.config.thinking_budget =
        thinking_budget_from_string(entry.at("thinking_budget").get<std::string>());
    variant.config.use_synthetic = entry.at("use_synthetic").get<bool>();
    variant.provenance = entry.at("provenance").get<std::string>();
    return variant;
}

bool VariantStore::contains(const GroupId& group, const std::string& vid) const {
    std::lock_guard lock(mutex_);
    return std::filesystem::exists(root_ / group.hex / (vid + ".txt"));
}

std::vector<std::string> VariantStore::variant_ids(const GroupId& group) const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    std::filesystem::path dir = root_ / group.hex;
    if (!std::filesystem::exists(dir)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".txt") out.push_back(entry.path().stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<GroupId> VariantStore::group_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<GroupId> out;
    if (!std::filesystem::exists(root_)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(root_)) {
        if (entry.is_directory()) out.push_back(GroupId{entry.path().filename().string()});
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string TrialCandidate::key() const {
    return variant_id.empty() ? scorer_id : scorer_id + "/" + variant_id;
}

namespace {

struct RankedCandidate {
    const TrialCandidate* candidate = nullptr;
    GroupMetrics metrics;
};

// Computes a candidate's metrics over the group's Trial members; nullopt when
// the candidate lacks a prediction for any of them.
std::optional<GroupMetrics> candidate_metrics(const RubricGroup& group,
                                              const TrialCandidate& candidate, LabelMode mode) {
    std::map<std::string, Label> by_id;
    for (const auto& p : candidate.predictions) by_id[p.record_id] = p.label;
    std::vector<Label> gold;
    std::vector<Label> pred;
    for (const AnswerRecord* member : group.split_members(Split::Trial)) {
        auto it = by_id.find(member->id);
        if (it == by_id.end()) return std::nullopt;
        if (!member->gold) throw MissingGoldError(member->id);
        gold.push_back(label_in_mode(*member->gold, mode));
        pred.push_back(it->second);
    }
    if (gold.empty()) return std::nullopt;
    return compute_group_metrics(gold, pred, class_count(mode));
}

// Standard-variant order ranks before lexicographic ids; non-standard
// variants sort after all standard ones.
int variant_order(const std::string& vid) {
    auto rank = standard_variant_rank(vid);
    return rank ? *rank : static_cast<int>(standard_variants().size());
}

bool better(const RankedCandidate& a, const RankedCandidate& b, bool use_qwk) {
    double va = use_qwk ? *a.metrics.qwk : a.metrics.weighted_f1;
    double vb = use_qwk ? *b.metrics.qwk : b.metrics.weighted_f1;
    if (va != vb) return va > vb;
    if (a.metrics.accuracy != b.metrics.accuracy) return a.metrics.accuracy > b.metrics.accuracy;
    int oa = variant_order(a.candidate->variant_id);
    int ob = variant_order(b.candidate->variant_id);
    if (oa != ob) return oa < ob;
    if (a.candidate->scorer_id != b.candidate->scorer_id) {
        return a.candidate->scorer_id < b.candidate->scorer_id;
    }
    return a.candidate->variant_id < b.candidate->variant_id;
}

std::vector<RankedCandidate> rank_group(const RubricGroup& group,
                                        const std::vector<TrialCandidate>& candidates,
                                        LabelMode mode, std::string* metric_used) {
    std::vector<RankedCandidate> ranked;
    for (const auto& candidate : candidates) {
        if (auto m = candidate_metrics(group, candidate, mode)) {
            ranked.push_back({&candidate, *m});
        }
    }
    if (ranked.empty()) return ranked;
    bool use_qwk = std::all_of(ranked.begin(), ranked.end(),
                               [](const RankedCandidate& r) { return r.metrics.qwk.has_value(); });
    *metric_used = use_qwk ? "qwk" : "weighted_f1";
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](const RankedCandidate& a, const RankedCandidate& b) {
                         return better(a, b, use_qwk);
                     });
    return ranked;
}

} // namespace

std::pair<std::string, std::string> select_best_variant(
    const RubricGroup& group, const std::vector<TrialCandidate>& candidates, LabelMode mode) {
    std::string metric_used;
    std::vector<RankedCandidate> ranked = rank_group(group, candidates, mode, &metric_used);
    if (ranked.empty()) {
        throw NoTrialDataError("group " + group.id.hex + " has no rankable trial candidates");
    }
    return {ranked.front().candidate->variant_id, metric_used};
}

SelectionPlan select_best_method(const std::vector<RubricGroup>& groups,
                                 const std::vector<TrialCandidate>& candidates, LabelMode mode,
                                 const std::string& baseline_scorer_id) {
    SelectionPlan plan;
    for (const RubricGroup& group : groups) {
        std::string metric_used;
        std::vector<RankedCandidate> ranked = rank_group(group, candidates, mode, &metric_used);
        GroupChoice choice;
        if (ranked.empty()) {
            choice.scorer_id = baseline_scorer_id;
            choice.metric_used = "fallback";
            plan.warnings.push_back("group " + group.id.hex +
                                    " has no trial data; defaulting to " + baseline_scorer_id);
        } else {
            choice.scorer_id = ranked.front().candidate->scorer_id;
            choice.variant_id = ranked.front().candidate->variant_id;
            choice.metric_used = metric_used;
            for (const auto& r : ranked) choice.trial_scores[r.candidate->key()] = r.metrics;
        }
        plan.per_group[group.id] = std::move(choice);
    }
    return plan;
}

namespace {

json group_metrics_to_json(const GroupMetrics& m) {
    json out{{"n", m.n},
             {"accuracy", m.accuracy},
             {"weighted_f1", m.weighted_f1}};
    if (m.qwk) {
        out["qwk"] = *m.qwk;
    } else {
        out["qwk"] = nullptr;
    }
    return out;
}

GroupMetrics group_metrics_from_json(const json& j) {
    GroupMetrics m;
    m.n = j.at("n").get<std::size_t>();
    m.accuracy = j.at("accuracy").get<double>();
    m.weighted_f1 = j.at("weighted_f1").get<double>();
    if (!j.at("qwk").is_null()) m.qwk = j.at("qwk").get<double>();
    return m;
}

} // namespace

json selection_plan_to_json(const SelectionPlan& plan) {
    json groups = json::object();
    for (const auto& [gid, choice] : plan.per_group) {
        json scores = json::object();
        for (const auto& [key, m] : choice.trial_scores) {
            scores[key] = group_metrics_to_json(m);
        }
        groups[gid.hex] = json{{"scorer", choice.scorer_id},
                               {"variant", choice.variant_id},
                               {"metric_used", choice.metric_used},
                               {"trial_scores", scores}};
    }
    return json{{"format", "selection/1"}, {"groups", groups}, {"warnings", plan.warnings}};
}

SelectionPlan selection_plan_from_json(const json& doc) {
    if (doc.value("format", "") != "selection/1") {
        throw Error("unsupported selection file format");
    }
    SelectionPlan plan;
    for (const auto& [hex, entry] : doc.at("groups").items()) {
        GroupChoice choice;
        choice.scorer_id = entry.at("scorer").get<std::string>();
        choice.variant_id = entry.at("variant").get<std::string>();
        choice.metric_used = entry.at("metric_used").get<std::string>();
        for (const auto& [key, m] : entry.at("trial_scores").items()) {
            choice.trial_scores[key] = group_metrics_from_json(m);
        }
        plan.per_group[GroupId{hex}] = std::move(choice);
    }
    if (doc.contains("warnings")) {
        plan.warnings = doc.at("warnings").get<std::vector<std::string>>();
    }
    return plan;
}

} // namespace rubriq
