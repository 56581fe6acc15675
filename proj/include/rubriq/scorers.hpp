#pragma once

#include "rubriq/corpus.hpp"
#include "rubriq/gateway.hpp"
#include "rubriq/metaprompt.hpp"
#include "rubriq/metrics.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace rubriq {

struct GroupMismatchError : Error {
    using Error::Error;
};

struct ScorerConfig {
    std::string scorer_id = "baseline";
    LabelMode label_mode = LabelMode::TwoWay;
    ThinkingBudget thinking_budget = ThinkingBudget::Medium;
    Label fallback_label = Label::Incorrect;
    std::string backend_id = "mock";
    std::string model;
    // Role-play reviews longer than this are cut tail-first before they are
    // interpolated into the third call (with a stderr warning).
    std::size_t max_review_chars = 100000;
};

// One call; Strict parse, then one Lenient reparse of the same output, then
// abstention to the fallback label.
Prediction score_baseline(Gateway& gateway, const AnswerRecord& record,
                          const ScorerConfig& config);

// One call using the induced template and the variant's thinking budget.
// Throws GroupMismatch when the record's rubric key is not the variant's.
Prediction score_with_group_prompt(Gateway& gateway, const AnswerRecord& record,
                                   const PromptVariant& variant, const ScorerConfig& config);

// Three sequential calls (positive review, negative review, meta review);
// the label is the Lenient parse of call 3. Two-way only.
Prediction score_roleplay(Gateway& gateway, const AnswerRecord& record,
                          const ScorerConfig& config);

class Scorer {
  public:
    virtual ~Scorer() = default;
    virtual std::string id() const = 0;
    virtual Label fallback_label() const { return Label::Incorrect; }
    virtual Prediction score(const AnswerRecord& record) = 0;
};

class BaselineScorer : public Scorer {
  public:
    BaselineScorer(Gateway& gateway, ScorerConfig config);
    std::string id() const override;
    Label fallback_label() const override;
    Prediction score(const AnswerRecord& record) override;

  private:
    Gateway* gateway_;
    ScorerConfig config_;
};

class RoleplayScorer : public Scorer {
  public:
    RoleplayScorer(Gateway& gateway, ScorerConfig config);
    std::string id() const override;
    Label fallback_label() const override;
    Prediction score(const AnswerRecord& record) override;

  private:
    Gateway* gateway_;
    ScorerConfig config_;
};

// Routes each record to its rubric group and scores with a fixed variant's
// stored prompt; unroutable records and groups without that variant abstain.
class GroupPromptScorer : public Scorer {
  public:
    GroupPromptScorer(Gateway& gateway, const VariantStore& store,
                      const std::vector<RubricGroup>& groups, std::string variant_id,
                      ScorerConfig config);
    std::string id() const override;
    Label fallback_label() const override;
    Prediction score(const AnswerRecord& record) override;

  private:
    const PromptVariant* variant_for(const GroupId& gid);

    Gateway* gateway_;
    const VariantStore* store_;
    GroupIndex index_;
    std::string variant_id_;
    ScorerConfig config_;
    std::mutex mutex_;
    std::map<GroupId, std::optional<PromptVariant>> loaded_;
};

// Dispatches per record to the scorer a SelectionPlan chose for its group;
// unroutable records and groups absent from the plan fall back to baseline
// prompting. Non-prompt scorers (e.g. the SVM) are supplied via `extra`.
class PlanScorer : public Scorer {
  public:
    PlanScorer(Gateway& gateway, const VariantStore& store,
               const std::vector<RubricGroup>& groups, SelectionPlan plan, ScorerConfig config,
               std::map<std::string, Scorer*> extra = {});
    std::string id() const override;
    Label fallback_label() const override;
    Prediction score(const AnswerRecord& record) override;

  private:
    Gateway* gateway_;
    const VariantStore* store_;
    GroupIndex index_;
    SelectionPlan plan_;
    ScorerConfig config_;
    std::map<std::string, Scorer*> extra_;
    std::mutex mutex_;
    std::map<std::pair<GroupId, std::string>, std::optional<PromptVariant>> loaded_;
};

struct BatchAbortedError : Error {
    BatchAbortedError(const std::string& what, std::vector<Prediction> partial);
    std::vector<Prediction> partial; // completed predictions, in input order
};

Prediction make_abstention(const AnswerRecord& record, const std::string& scorer_id,
                           Label fallback, std::string reason);

// Order-preserving: result[i] scores records[i]. Per-record failures become
// abstentions; only a spent call budget aborts, carrying the partials.
std::vector<Prediction> score_batch(Scorer& scorer, const std::vector<AnswerRecord>& records,
                                    int parallelism = 1);

} // namespace rubriq
