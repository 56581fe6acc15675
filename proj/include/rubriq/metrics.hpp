#pragma once

#include "rubriq/corpus.hpp"
#include "rubriq/errors.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rubriq {

class LengthMismatchError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class UnmatchedPredictionError : public Error {
public:
    explicit UnmatchedPredictionError(const std::string& id);
};

class MissingPredictionError : public Error {
public:
    explicit MissingPredictionError(const std::string& id);
};

/// K x K counts, rows = gold, cols = predicted, label order Incorrect <
/// PartiallyCorrect < Correct (PartiallyCorrect dropped when k = 2).
class ConfusionMatrix {
public:
    ConfusionMatrix(int k, std::vector<std::int64_t> counts);

    static ConfusionMatrix from_labels(std::span<const Label> gold,
                                       std::span<const Label> pred, int k);

    int k() const { return k_; }
    std::int64_t n() const { return n_; }
    std::int64_t at(int gold_row, int pred_col) const;
    ConfusionMatrix transposed() const;

private:
    int k_;
    std::vector<std::int64_t> counts_; // row-major
    std::int64_t n_;
};

double accuracy(const ConfusionMatrix& cm);

/// Support-weighted mean of per-class F1; a class with zero
/// precision+recall contributes F1 = 0.
double weighted_f1(const ConfusionMatrix& cm);

/// Quadratic weighted kappa: 1 - sum(w.O) / sum(w.E) with
/// w_ij = (i-j)^2 / (K-1)^2 and E the marginal outer product scaled to n.
/// Returns nullopt (Undefined) when the expected disagreement is zero;
/// never coerced to 0.
std::optional<double> qwk(const ConfusionMatrix& cm);

struct GroupMetrics {
    std::size_t n = 0;
    double accuracy = 0.0;
    double weighted_f1 = 0.0;
    std::optional<double> qwk; // nullopt = Undefined
};

GroupMetrics compute_group_metrics(std::span<const Label> gold,
                                   std::span<const Label> pred, int k);

/// A scored label for one record. `abstained` marks records whose model
/// output was unparsable (or unroutable); the label then equals the
/// scorer's fallback label.
struct Prediction {
    std::string record_id;
    Label label = Label::Incorrect;
    std::string scorer_id;
    std::string variant_id;    // empty when not variant-based
    bool abstained = false;
    std::string raw_output_digest;
    std::string abstain_reason; // empty unless abstained
};

struct EvalReport {
    int k = 2;
    GroupMetrics overall;
    std::map<std::string, GroupMetrics> per_group; // keyed by GroupId hex
    std::size_t abstained = 0;
};

/// Joins predictions to gold records by id and computes overall and
/// per-group metrics. Per-group QWK may be Undefined on degenerate groups
/// while the overall value stays defined.
EvalReport evaluate(const std::vector<AnswerRecord>& gold_records,
                    const std::vector<Prediction>& predictions, int k);

nlohmann::json eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

/// Fixed-width text table: group id, n, acc, wf1, qwk (3 decimals,
/// "undef" for Undefined QWK), with an overall row.
std::string eval_report_to_table(const EvalReport& report);

/// Predictions TSV: id, label, scorer, variant, abstained (header included).
std::string predictions_to_tsv(const std::vector<Prediction>& predictions);
std::vector<Prediction> predictions_from_tsv(const std::string& text);

} // namespace rubriq
