#include "rubriq/synthgen.hpp"

#include "rubriq/prompt.hpp"
#include "rubriq/strings.hpp"
#include "rubriq/templates.hpp"

#include <algorithm>
#include <cstdlib>

namespace rubriq {

std::int64_t ImbalanceStat::gap() const { return std::llabs(n_correct - n_incorrect); }

Label ImbalanceStat::minority_label() const {
    return n_correct < n_incorrect ? Label::Correct : Label::Incorrect;
}

ImbalanceStat imbalance_for_group(const RubricGroup& group) {
    ImbalanceStat stat;
    stat.group_id = group.id;
    for (const AnswerRecord* record : group.train_members(false)) {
        if (!record->gold) continue;
        if (*record->gold == Label::Correct) ++stat.n_correct;
        if (*record->gold == Label::Incorrect) ++stat.n_incorrect;
    }
    return stat;
}

std::vector<ImbalanceStat> rank_groups_by_imbalance(const std::vector<RubricGroup>& groups,
                                                    int k) {
    std::vector<ImbalanceStat> stats;
    for (const RubricGroup& group : groups) {
        ImbalanceStat stat = imbalance_for_group(group);
        if (stat.gap() > 0) stats.push_back(stat);
    }
    std::sort(stats.begin(), stats.end(), [](const ImbalanceStat& a, const ImbalanceStat& b) {
        if (a.gap() != b.gap()) return a.gap() > b.gap();
        return a.group_id < b.group_id;
    });
    if (k >= 0 && stats.size() > static_cast<std::size_t>(k)) {
        stats.resize(static_cast<std::size_t>(k));
    }
    return stats;
}

std::int64_t quota(const ImbalanceStat& stat) { return stat.gap() / 2; }

namespace {

std::string numbered_list(const std::vector<std::string>& items) {
    if (items.empty()) return "(none)";
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += '\n';
        out += std::to_string(i + 1) + ". " + items[i];
    }
    return out;
}

CompletionRequest synth_request(const SynthConfig& config, std::string prompt,
                                double temperature) {
    CompletionRequest request;
    request.backend_id = config.backend_id;
    request.model = config.model;
    request.prompt = std::move(prompt);
    request.thinking_budget = config.thinking_budget;
    request.temperature = temperature;
    return request;
}

} // namespace

SyntheticAnswer generate_one(Gateway& gateway, const RubricGroup& group, Label target,
                             const std::vector<std::string>& prior_synthetics,
                             const AnswerRecord& seed, const SynthConfig& config,
                             const std::string& id) {
    SyntheticAnswer sample;
    sample.id = id;
    sample.group_id = group.id;
    sample.target = target;
    sample.lineage = seed.id;

    const std::string target_rubric =
        target == Label::Correct ? group.rubric.correct : group.rubric.incorrect;
    const std::string prior = numbered_list(prior_synthetics);

    for (int round = 1; round <= config.r_syn; ++round) {
        sample.attempts = round;
        std::string gen_prompt =
            render(templates::synth_generate(),
                   {{"question", group.question},
                    {"seed_answer", seed.answer},
                    {"target_label", std::string(label_to_string(target))},
                    {"target_rubric", target_rubric},
                    {"prior_answers", prior},
                    {"round", std::to_string(round)}});
        Completion generated =
            gateway.complete(synth_request(config, std::move(gen_prompt),
                                           config.gen_temperature));

        std::string noise_prompt = render(templates::synth_noise(),
                                          {{"answer", trim(generated.text)},
                                           {"round", std::to_string(round)}});
        Completion noised = gateway.complete(
            synth_request(config, std::move(noise_prompt), config.gen_temperature));
        std::string candidate = trim(noised.text);

        std::string validate_prompt =
            render(templates::synth_validate(config.label_mode),
                   {{"question", group.question},
                    {"answer_to_classify", candidate},
                    {"rubric_incorrect", group.rubric.incorrect},
                    {"rubric_partially_correct", group.rubric.partially_correct},
                    {"rubric_correct", group.rubric.correct},
                    {"round", std::to_string(round)}});
        Completion verdict =
            gateway.complete(synth_request(config, std::move(validate_prompt), 0.0));

        std::optional<ParsedLabel> parsed =
            parse_label(verdict.text, config.label_mode, ParseMode::Strict);
        if (!parsed) parsed = parse_label(verdict.text, config.label_mode, ParseMode::Lenient);

        sample.answer = candidate;
        if (parsed && parsed->label == target && candidate != seed.answer &&
            !candidate.empty()) {
            sample.accepted = true;
            return sample;
        }
    }
    sample.accepted = false;
    return sample;
}

SynthAbortedError::SynthAbortedError(const std::string& what, SynthResult p)
    : Error(what), partial(std::move(p)) {}

SynthResult generate_for_corpus(Gateway& gateway, const Corpus& corpus,
                                const SynthConfig& config) {
    SynthResult result;
    result.corpus = corpus;

    std::vector<RubricGroup> groups = group_by_rubric(corpus);
    std::vector<ImbalanceStat> stats = rank_groups_by_imbalance(groups, config.top_k);

    for (const ImbalanceStat& stat : stats) {
        const RubricGroup* group = nullptr;
        for (const RubricGroup& g : groups) {
            if (g.id == stat.group_id) {
                group = &g;
                break;
            }
        }
        GroupGenReport report;
        report.group_id = stat.group_id;
        report.quota = quota(stat);
        if (report.quota == 0) {
            result.reports.push_back(std::move(report));
            continue;
        }

        Label target = stat.minority_label();
        std::vector<const AnswerRecord*> seeds;
        for (const AnswerRecord* record : group->train_members(false)) {
            if (record->gold && *record->gold == target) seeds.push_back(record);
        }
        if (seeds.empty()) seeds = group->train_members(false);
        std::sort(seeds.begin(), seeds.end(),
                  [](const AnswerRecord* a, const AnswerRecord* b) { return a->id < b->id; });
        if (seeds.empty()) {
            result.reports.push_back(std::move(report));
            continue;
        }

        std::vector<std::string> prior;
        std::size_t slot = 0;
        while (report.accepted < report.quota &&
               report.discarded < config.max_discards_per_group) {
            const AnswerRecord* seed = seeds[slot % seeds.size()];
            std::string id =
                "syn-" + stat.group_id.hex.substr(0, 8) + "-" + std::to_string(slot + 1);
            ++slot;
            SyntheticAnswer sample;
            try {
                sample = generate_one(gateway, *group, target, prior, *seed, config, id);
            } catch (const BudgetExceededError& e) {
                result.reports.push_back(std::move(report));
                throw SynthAbortedError(e.what(), std::move(result));
            }
            report.attempts.push_back(sample.attempts);
            if (sample.accepted) {
                ++report.accepted;
                prior.push_back(sample.answer);
                AnswerRecord record;
                record.id = sample.id;
                record.question = group->question;
                record.rubric = group->rubric;
                record.answer = sample.answer;
                record.gold = target;
                record.split = Split::Train;
                record.synthetic = true;
                result.corpus.records.push_back(std::move(record));
            } else {
                ++report.discarded;
            }
            result.samples.push_back(std::move(sample));
        }
        result.reports.push_back(std::move(report));
    }
    return result;
}

} // namespace rubriq
