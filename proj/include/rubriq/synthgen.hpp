#pragma once

#include "rubriq/corpus.hpp"
#include "rubriq/gateway.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rubriq {

struct ImbalanceStat {
    GroupId group_id;
    std::int64_t n_correct = 0;
    std::int64_t n_incorrect = 0;

    std::int64_t gap() const;
    // The label with the smaller count; Incorrect on ties (gap 0 generates
    // nothing, so the tie value is never used).
    Label minority_label() const;
};

// Counts strictly Correct vs strictly Incorrect real Train answers.
ImbalanceStat imbalance_for_group(const RubricGroup& group);

// Top-k by gap descending, ties by group id; balanced groups are excluded.
std::vector<ImbalanceStat> rank_groups_by_imbalance(const std::vector<RubricGroup>& groups,
                                                    int k = 25);

// floor(gap / 2): the number of minority samples that halves the gap.
std::int64_t quota(const ImbalanceStat& stat);

struct SyntheticAnswer {
    std::string id; // "syn-..."
    GroupId group_id;
    std::string answer;
    Label target = Label::Incorrect;
    int attempts = 0;
    bool accepted = false;
    std::string lineage; // seed record id
};

struct SynthConfig {
    std::string backend_id = "mock";
    std::string model;
    LabelMode label_mode = LabelMode::TwoWay;
    int r_syn = 3;  // generate/noise/validate attempts per sample
    int top_k = 25;
    // Stop filling a group's quota after this many discarded samples.
    int max_discards_per_group = 3;
    double gen_temperature = 0.7; // generation and noise calls; validation runs at 0
    ThinkingBudget thinking_budget = ThinkingBudget::Medium;
};

// One sample slot: up to r_syn rounds of generate -> noise-inject -> validate
// against the full rubric. A round accepts iff the validated label equals the
// target and the noised text is not byte-equal to the seed answer; exhausted
// rounds return accepted = false rather than throwing.
SyntheticAnswer generate_one(Gateway& gateway, const RubricGroup& group, Label target,
                             const std::vector<std::string>& prior_synthetics,
                             const AnswerRecord& seed, const SynthConfig& config,
                             const std::string& id);

struct GroupGenReport {
    GroupId group_id;
    std::int64_t quota = 0;
    std::int64_t accepted = 0;
    std::int64_t discarded = 0;
    std::vector<int> attempts; // per finished sample, in slot order
};

struct SynthResult {
    std::vector<SyntheticAnswer> samples; // accepted and discarded, in slot order
    Corpus corpus;                        // input plus accepted Train records
    std::vector<GroupGenReport> reports;  // in imbalance-rank order
};

struct SynthAbortedError : Error {
    SynthAbortedError(const std::string& what, SynthResult partial);
    SynthResult partial;
};

// Fills each ranked group's quota with minority-label samples. Seeds cycle
// through the group's real minority-label Train answers by record id (all
// real Train answers when the minority side is empty), one seed per slot.
// Accepted samples are appended as synthetic Train records with ids
// "syn-<group prefix>-<slot>".
SynthResult generate_for_corpus(Gateway& gateway, const Corpus& corpus,
                                const SynthConfig& config);

} // namespace rubriq
