#include "rubriq/scorers.hpp"

#include "rubriq/digest.hpp"
#include "rubriq/prompt.hpp"
#include "rubriq/templates.hpp"

#include <atomic>
#include <iostream>
#include <thread>

namespace rubriq {

namespace {

Prediction from_output(const AnswerRecord& record, const std::string& raw,
                       const ScorerConfig& config, const std::string& variant_id,
                       ParseMode first_mode) {
    Prediction p;
    p.record_id = record.id;
    p.scorer_id = config.scorer_id;
    p.variant_id = variant_id;
    p.raw_output_digest = sha256_hex(raw);
    std::optional<ParsedLabel> parsed = parse_label(raw, config.label_mode, first_mode);
    if (!parsed && first_mode == ParseMode::Strict) {
        parsed = parse_label(raw, config.label_mode, ParseMode::Lenient);
    }
    if (parsed) {
        p.label = parsed->label;
    } else {
        p.abstained = true;
        p.label = config.fallback_label;
        p.abstain_reason = "UnparsableLabel";
    }
    return p;
}

CompletionRequest make_request(const ScorerConfig& config, std::string prompt,
                               ThinkingBudget budget) {
    CompletionRequest request;
    request.backend_id = config.backend_id;
    request.model = config.model;
    request.prompt = std::move(prompt);
    request.thinking_budget = budget;
    return request;
}

} // namespace

Prediction make_abstention(const AnswerRecord& record, const std::string& scorer_id,
                           Label fallback, std::string reason) {
    Prediction p;
    p.record_id = record.id;
    p.scorer_id = scorer_id;
    p.label = fallback;
    p.abstained = true;
    p.raw_output_digest = sha256_hex("");
    p.abstain_reason = std::move(reason);
    return p;
}

Prediction score_baseline(Gateway& gateway, const AnswerRecord& record,
                          const ScorerConfig& config) {
    std::string prompt =
        render(templates::baseline(config.label_mode),
               {{"question", record.question},
                {"answer_to_classify", record.answer},
                {"rubric_incorrect", record.rubric.incorrect},
                {"rubric_partially_correct", record.rubric.partially_correct},
                {"rubric_correct", record.rubric.correct}});
    Completion completion =
        gateway.complete(make_request(config, std::move(prompt), config.thinking_budget));
    return from_output(record, completion.text, config, "", ParseMode::Strict);
}

Prediction score_with_group_prompt(Gateway& gateway, const AnswerRecord& record,
                                   const PromptVariant& variant, const ScorerConfig& config) {
    if (group_key(record) != variant.group_id) {
        throw GroupMismatchError("record " + record.id + " does not belong to group " +
                                 variant.group_id.hex);
    }
    std::string prompt = render(variant.tpl, {{"question", record.question},
                                              {"answer_to_classify", record.answer}});
    Completion completion = gateway.complete(
        make_request(config, std::move(prompt), variant.config.thinking_budget));
    return from_output(record, completion.text, config, variant.variant_id, ParseMode::Strict);
}

namespace {

std::string truncated_review(std::string review, std::size_t limit, const char* which,
                             const std::string& record_id) {
    if (review.size() <= limit) return review;
    std::cerr << "warning: " << which << " review for record " << record_id
              << " truncated from " << review.size() << " to " << limit << " chars\n";
    review.resize(limit);
    return review;
}

} // namespace

Prediction score_roleplay(Gateway& gateway, const AnswerRecord& record,
                          const ScorerConfig& config) {
    if (config.label_mode != LabelMode::TwoWay) {
        throw Error("role-play scoring supports only the two-way label set");
    }
    std::map<std::string, std::string> bindings{{"question", record.question},
                                                {"answer", record.answer},
                                                {"incorrect", record.rubric.incorrect},
                                                {"correct", record.rubric.correct}};
    Completion positive = gateway.complete(make_request(
        config, render(templates::roleplay_positive(), bindings), config.thinking_budget));
    Completion negative = gateway.complete(make_request(
        config, render(templates::roleplay_negative(), bindings), config.thinking_budget));

    bindings["positive_review"] =
        truncated_review(positive.text, config.max_review_chars, "positive", record.id);
    bindings["negative_review"] =
        truncated_review(negative.text, config.max_review_chars, "negative", record.id);
    Completion verdict = gateway.complete(make_request(
        config, render(templates::roleplay_meta(), bindings), config.thinking_budget));
    return from_output(record, verdict.text, config, "", ParseMode::Lenient);
}

BaselineScorer::BaselineScorer(Gateway& gateway, ScorerConfig config)
    : gateway_(&gateway), config_(std::move(config)) {}

std::string BaselineScorer::id() const { return config_.scorer_id; }
Label BaselineScorer::fallback_label() const { return config_.fallback_label; }

Prediction BaselineScorer::score(const AnswerRecord& record) {
    return score_baseline(*gateway_, record, config_);
}

RoleplayScorer::RoleplayScorer(Gateway& gateway, ScorerConfig config)
    : gateway_(&gateway), config_(std::move(config)) {}

std::string RoleplayScorer::id() const { return config_.scorer_id; }
Label RoleplayScorer::fallback_label() const { return config_.fallback_label; }

Prediction RoleplayScorer::score(const AnswerRecord& record) {
    return score_roleplay(*gateway_, record, config_);
}

GroupPromptScorer::GroupPromptScorer(Gateway& gateway, const VariantStore& store,
                                     const std::vector<RubricGroup>& groups,
                                     std::string variant_id, ScorerConfig config)
    : gateway_(&gateway), store_(&store), index_(groups), variant_id_(std::move(variant_id)),
      config_(std::move(config)) {}

std::string GroupPromptScorer::id() const { return config_.scorer_id; }
Label GroupPromptScorer::fallback_label() const { return config_.fallback_label; }

const PromptVariant* GroupPromptScorer::variant_for(const GroupId& gid) {
    std::lock_guard lock(mutex_);
    auto it = loaded_.find(gid);
    if (it == loaded_.end()) {
        std::optional<PromptVariant> v;
        if (store_->contains(gid, variant_id_)) v = store_->get(gid, variant_id_);
        it = loaded_.emplace(gid, std::move(v)).first;
    }
    return it->second ? &*it->second : nullptr;
}

Prediction GroupPromptScorer::score(const AnswerRecord& record) {
    std::optional<GroupId> gid = index_.try_route(record);
    if (!gid) {
        return make_abstention(record, config_.scorer_id, config_.fallback_label,
                               "GroupNotFound");
    }
    const PromptVariant* variant = variant_for(*gid);
    if (variant == nullptr) {
        return make_abstention(record, config_.scorer_id, config_.fallback_label, "NoVariant");
    }
    return score_with_group_prompt(*gateway_, record, *variant, config_);
}

PlanScorer::PlanScorer(Gateway& gateway, const VariantStore& store,
                       const std::vector<RubricGroup>& groups, SelectionPlan plan,
                       ScorerConfig config, std::map<std::string, Scorer*> extra)
    : gateway_(&gateway), store_(&store), index_(groups), plan_(std::move(plan)),
      config_(std::move(config)), extra_(std::move(extra)) {}

std::string PlanScorer::id() const { return "plan"; }
Label PlanScorer::fallback_label() const { return config_.fallback_label; }

Prediction PlanScorer::score(const AnswerRecord& record) {
    ScorerConfig baseline_config = config_;
    baseline_config.scorer_id = "baseline";

    std::optional<GroupId> gid = index_.try_route(record);
    if (!gid) return score_baseline(*gateway_, record, baseline_config);
    auto entry = plan_.per_group.find(*gid);
    if (entry == plan_.per_group.end()) return score_baseline(*gateway_, record, baseline_config);

    const GroupChoice& choice = entry->second;
    if (choice.scorer_id == "baseline") {
        return score_baseline(*gateway_, record, baseline_config);
    }
    if (choice.scorer_id == "roleplay") {
        ScorerConfig rp = config_;
        rp.scorer_id = "roleplay";
        return score_roleplay(*gateway_, record, rp);
    }
    if (choice.scorer_id == "meta") {
        std::optional<PromptVariant> variant;
        {
            std::lock_guard lock(mutex_);
            auto key = std::make_pair(*gid, choice.variant_id);
            auto it = loaded_.find(key);
            if (it == loaded_.end()) {
                std::optional<PromptVariant> v;
                if (store_->contains(*gid, choice.variant_id)) {
                    v = store_->get(*gid, choice.variant_id);
                }
                it = loaded_.emplace(key, std::move(v)).first;
            }
            variant = it->second;
        }
        if (!variant) {
            return make_abstention(record, "meta", config_.fallback_label, "NoVariant");
        }
        ScorerConfig meta = config_;
        meta.scorer_id = "meta";
        return score_with_group_prompt(*gateway_, record, *variant, meta);
    }
    if (auto it = extra_.find(choice.scorer_id); it != extra_.end()) {
        return it->second->score(record);
    }
    return make_abstention(record, choice.scorer_id, config_.fallback_label, "UnknownScorer");
}

BatchAbortedError::BatchAbortedError(const std::string& what, std::vector<Prediction> p)
    : Error(what), partial(std::move(p)) {}

std::vector<Prediction> score_batch(Scorer& scorer, const std::vector<AnswerRecord>& records,
                                    int parallelism) {
    std::vector<std::optional<Prediction>> slots(records.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> aborted{false};
    std::mutex abort_mutex;
    std::string abort_message;

    auto worker = [&] {
        while (!aborted.load()) {
            std::size_t i = next.fetch_add(1);
            if (i >= records.size()) break;
            try {
                slots[i] = scorer.score(records[i]);
            } catch (const BudgetExceededError& e) {
                std::lock_guard lock(abort_mutex);
                abort_message = e.what();
                aborted.store(true);
            } catch (const std::exception& e) {
                slots[i] = make_abstention(records[i], scorer.id(), scorer.fallback_label(),
                                           e.what());
            }
        }
    };

    int threads = std::max(1, std::min<int>(parallelism, static_cast<int>(records.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<Prediction> results;
    results.reserve(records.size());
    for (auto& slot : slots) {
        if (slot) results.push_back(std::move(*slot));
    }
    if (aborted.load()) throw BatchAbortedError(abort_message, std::move(results));
    return results;
}

} // namespace rubriq
