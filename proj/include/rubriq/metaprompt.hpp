#pragma once

#include "rubriq/corpus.hpp"
#include "rubriq/gateway.hpp"
#include "rubriq/metrics.hpp"
#include "rubriq/prompt.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace rubriq {

enum class Formulation { Base, Extended };

struct VariantConfig {
    Formulation formulation = Formulation::Base;
    ThinkingBudget thinking_budget = ThinkingBudget::Medium;
    bool use_synthetic = false;
};

std::string variant_id(const VariantConfig& config);
VariantConfig variant_config_from_id(const std::string& id);

// The four standard configurations, in their canonical order; this order is
// the second-to-last selection tie-breaker.
const std::vector<VariantConfig>& standard_variants();
std::optional<int> standard_variant_rank(const std::string& id);

struct PromptVariant {
    std::string variant_id;
    GroupId group_id;
    VariantConfig config;
    PromptTemplate tpl; // source = Induced, validated
    std::string provenance; // digest of the request that produced the template
};

struct EmptyGroupError : Error {
    using Error::Error;
};

struct InductionFailedError : Error {
    InductionFailedError(const GroupId& group, const std::vector<Violation>& violations);
    std::vector<Violation> violations;
};

struct NoTrialDataError : Error {
    using Error::Error;
};

// Train answers serialized as a JSON array of {answer, label} objects in
// record-id order; this string is embedded in the induction prompt, so its
// byte stability feeds the response cache key.
std::string training_examples_json(const RubricGroup& group, LabelMode mode,
                                   bool include_synthetic);

std::string build_meta_prompt(const RubricGroup& group, const VariantConfig& config,
                              LabelMode mode);

struct InductionSettings {
    std::string backend_id;
    std::string model;
    int max_regenerations = 2; // total calls per group-variant <= 1 + this
};

// One call with the variant's thinking budget; invalid templates trigger a
// regeneration request carrying the violation list and the attempt number
// (the attempt number keeps retry cache keys distinct).
PromptVariant induce_group_prompt(Gateway& gateway, const RubricGroup& group,
                                  const VariantConfig& config, LabelMode mode,
                                  const InductionSettings& settings);

// Disk layout: <root>/<group_id>/<variant_id>.txt plus one meta.json per
// group directory mapping variant_id to {config, provenance}.
class VariantStore {
  public:
    explicit VariantStore(std::filesystem::path root);

    void put(const PromptVariant& variant);
    PromptVariant get(const GroupId& group, const std::string& variant_id) const;
    bool contains(const GroupId& group, const std::string& variant_id) const;
    std::vector<std::string> variant_ids(const GroupId& group) const;
    std::vector<GroupId> group_ids() const;
    const std::filesystem::path& root() const { return root_; }

  private:
    std::filesystem::path root_;
    mutable std::mutex mutex_;
};

// One scoring strategy evaluated on a group's Trial members.
struct TrialCandidate {
    std::string scorer_id;
    std::string variant_id; // empty for non-variant scorers
    std::vector<Prediction> predictions;

    std::string key() const; // "scorer" or "scorer/variant"
};

struct GroupChoice {
    std::string scorer_id;
    std::string variant_id;
    std::string metric_used; // "qwk", "weighted_f1", or "fallback"
    std::map<std::string, GroupMetrics> trial_scores; // candidate key -> metrics
};

struct SelectionPlan {
    std::map<GroupId, GroupChoice> per_group;
    std::vector<std::string> warnings;
};

// Ranking: per-group QWK unless any candidate's QWK is undefined, in which
// case every candidate is ranked by weighted F1 instead; ties fall through to
// accuracy, then standard-variant order, then (scorer_id, variant_id).
// Returns (variant_id, metric_used).
std::pair<std::string, std::string> select_best_variant(
    const RubricGroup& group, const std::vector<TrialCandidate>& candidates, LabelMode mode);

SelectionPlan select_best_method(const std::vector<RubricGroup>& groups,
                                 const std::vector<TrialCandidate>& candidates, LabelMode mode,
                                 const std::string& baseline_scorer_id = "baseline");

nlohmann::json selection_plan_to_json(const SelectionPlan& plan);
SelectionPlan selection_plan_from_json(const nlohmann::json& doc);

} // namespace rubriq
