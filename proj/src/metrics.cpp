#include "rubriq/metrics.hpp"

#include "rubriq/strings.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_map>

using nlohmann::json;

namespace rubriq {

UnmatchedPredictionError::UnmatchedPredictionError(const std::string& id)
    : Error("prediction does not match any gold record: " + id) {}

MissingPredictionError::MissingPredictionError(const std::string& id)
    : Error("no prediction for gold record: " + id) {}

ConfusionMatrix::ConfusionMatrix(int k, std::vector<std::int64_t> counts)
    : k_(k), counts_(std::move(counts)), n_(0) {
    if (k_ != 2 && k_ != 3) throw Error("confusion matrix: K must be 2 or 3");
    if (counts_.size() != static_cast<std::size_t>(k_ * k_)) {
        throw Error("confusion matrix: counts size must be K*K");
    }
    for (auto c : counts_) {
        if (c < 0) throw Error("confusion matrix: negative count");
        n_ += c;
    }
}

ConfusionMatrix ConfusionMatrix::from_labels(std::span<const Label> gold,
                                             std::span<const Label> pred, int k) {
    if (gold.size() != pred.size()) {
        throw LengthMismatchError("confusion: gold and pred lengths differ");
    }
    if (gold.empty()) throw EmptyInputError("confusion: empty input");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k * k), 0);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        int g = label_index(gold[i], k);
        int p = label_index(pred[i], k);
        counts[static_cast<std::size_t>(g * k + p)]++;
    }
    return ConfusionMatrix(k, std::move(counts));
}

std::int64_t ConfusionMatrix::at(int gold_row, int pred_col) const {
    return counts_[static_cast<std::size_t>(gold_row * k_ + pred_col)];
}

ConfusionMatrix ConfusionMatrix::transposed() const {
    std::vector<std::int64_t> t(counts_.size());
    for (int i = 0; i < k_; ++i) {
        for (int j = 0; j < k_; ++j) {
            t[static_cast<std::size_t>(j * k_ + i)] = at(i, j);
        }
    }
    return ConfusionMatrix(k_, std::move(t));
}

double accuracy(const ConfusionMatrix& cm) {
    if (cm.n() == 0) throw EmptyInputError("accuracy: empty matrix");
    std::int64_t diag = 0;
    for (int i = 0; i < cm.k(); ++i) diag += cm.at(i, i);
    return static_cast<double>(diag) / static_cast<double>(cm.n());
}

double weighted_f1(const ConfusionMatrix& cm) {
    if (cm.n() == 0) throw EmptyInputError("weighted_f1: empty matrix");
    const int k = cm.k();
    double total = 0.0;
    for (int c = 0; c < k; ++c) {
        std::int64_t tp = cm.at(c, c);
        std::int64_t support = 0, predicted = 0;
        for (int j = 0; j < k; ++j) {
            support += cm.at(c, j);
            predicted += cm.at(j, c);
        }
        double precision = predicted > 0 ? static_cast<double>(tp) / predicted : 0.0;
        double recall = support > 0 ? static_cast<double>(tp) / support : 0.0;
        double f1 = (precision + recall) > 0.0
                        ? 2.0 * precision * recall / (precision + recall)
                        : 0.0;
        total += (static_cast<double>(support) / cm.n()) * f1;
    }
    return total;
}

std::optional<double> qwk(const ConfusionMatrix& cm) {
    if (cm.n() == 0) throw EmptyInputError("qwk: empty matrix");
    const int k = cm.k();
    const double denom = static_cast<double>((k - 1) * (k - 1));

    std::vector<double> gold_marginal(k, 0.0), pred_marginal(k, 0.0);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            gold_marginal[i] += cm.at(i, j);
            pred_marginal[j] += cm.at(i, j);
        }
    }

    double observed = 0.0, expected = 0.0;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            double w = static_cast<double>((i - j) * (i - j)) / denom;
            observed += w * cm.at(i, j);
            expected += w * gold_marginal[i] * pred_marginal[j] / cm.n();
        }
    }
    if (expected == 0.0) return std::nullopt;
    return 1.0 - observed / expected;
}

GroupMetrics compute_group_metrics(std::span<const Label> gold,
                                   std::span<const Label> pred, int k) {
    ConfusionMatrix cm = ConfusionMatrix::from_labels(gold, pred, k);
    GroupMetrics m;
    m.n = gold.size();
    m.accuracy = accuracy(cm);
    m.weighted_f1 = weighted_f1(cm);
    m.qwk = qwk(cm);
    return m;
}

EvalReport evaluate(const std::vector<AnswerRecord>& gold_records,
                    const std::vector<Prediction>& predictions, int k) {
    std::unordered_map<std::string, const AnswerRecord*> by_id;
    for (const auto& r : gold_records) by_id.emplace(r.id, &r);

    std::unordered_map<std::string, const Prediction*> pred_by_id;
    for (const auto& p : predictions) {
        if (by_id.count(p.record_id) == 0) throw UnmatchedPredictionError(p.record_id);
        pred_by_id.emplace(p.record_id, &p);
    }

    EvalReport report;
    report.k = k;
    std::vector<Label> gold_all, pred_all;
    std::map<std::string, std::pair<std::vector<Label>, std::vector<Label>>> by_group;

    for (const auto& r : gold_records) {
        auto it = pred_by_id.find(r.id);
        if (it == pred_by_id.end()) throw MissingPredictionError(r.id);
        if (!r.gold) throw Error("evaluate: record without gold label: " + r.id);
        const Prediction& p = *it->second;
        gold_all.push_back(*r.gold);
        pred_all.push_back(p.label);
        if (p.abstained) report.abstained++;
        auto& bucket = by_group[group_key(r).hex];
        bucket.first.push_back(*r.gold);
        bucket.second.push_back(p.label);
    }

    report.overall = compute_group_metrics(gold_all, pred_all, k);
    for (const auto& [gid, pair] : by_group) {
        report.per_group.emplace(gid, compute_group_metrics(pair.first, pair.second, k));
    }
    return report;
}

namespace {

json group_metrics_to_json(const GroupMetrics& m) {
    json j;
    j["n"] = m.n;
    j["accuracy"] = m.accuracy;
    j["weighted_f1"] = m.weighted_f1;
    if (m.qwk) {
        j["qwk"] = *m.qwk;
    } else {
        j["qwk"] = nullptr;
    }
    return j;
}

GroupMetrics group_metrics_from_json(const json& j) {
    GroupMetrics m;
    m.n = j.at("n").get<std::size_t>();
    m.accuracy = j.at("accuracy").get<double>();
    m.weighted_f1 = j.at("weighted_f1").get<double>();
    if (!j.at("qwk").is_null()) m.qwk = j.at("qwk").get<double>();
    return m;
}

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string fmt_qwk(const std::optional<double>& v) {
    return v ? fmt3(*v) : std::string("undef");
}

} // namespace

json eval_report_to_json(const EvalReport& report) {
    json j;
    j["k"] = report.k;
    j["abstained"] = report.abstained;
    j["overall"] = group_metrics_to_json(report.overall);
    json groups = json::object();
    for (const auto& [gid, m] : report.per_group) groups[gid] = group_metrics_to_json(m);
    j["per_group"] = groups;
    return j;
}

EvalReport eval_report_from_json(const json& j) {
    EvalReport report;
    report.k = j.at("k").get<int>();
    report.abstained = j.at("abstained").get<std::size_t>();
    report.overall = group_metrics_from_json(j.at("overall"));
    for (const auto& [gid, m] : j.at("per_group").items()) {
        report.per_group.emplace(gid, group_metrics_from_json(m));
    }
    return report;
}

std::string eval_report_to_table(const EvalReport& report) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %6s %8s %8s %8s\n", "group", "n", "acc", "wf1", "qwk");
    out << line;
    for (const auto& [gid, m] : report.per_group) {
        std::snprintf(line, sizeof(line), "%-16s %6zu %8s %8s %8s\n", gid.substr(0, 16).c_str(),
                      m.n, fmt3(m.accuracy).c_str(), fmt3(m.weighted_f1).c_str(),
                      fmt_qwk(m.qwk).c_str());
        out << line;
    }
    std::snprintf(line, sizeof(line), "%-16s %6zu %8s %8s %8s\n", "overall", report.overall.n,
                  fmt3(report.overall.accuracy).c_str(), fmt3(report.overall.weighted_f1).c_str(),
                  fmt_qwk(report.overall.qwk).c_str());
    out << line;
    out << "abstained: " << report.abstained << "\n";
    return out.str();
}

std::string predictions_to_tsv(const std::vector<Prediction>& predictions) {
    std::string out = "id\tlabel\tscorer\tvariant\tabstained\n";
    for (const auto& p : predictions) {
        out += p.record_id;
        out += '\t';
        out += label_to_string(p.label);
        out += '\t';
        out += p.scorer_id;
        out += '\t';
        out += p.variant_id;
        out += '\t';
        out += p.abstained ? "true" : "false";
        out += '\n';
    }
    return out;
}

std::vector<Prediction> predictions_from_tsv(const std::string& text) {
    std::vector<Prediction> out;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("id\t", 0) == 0) continue; // header
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 5) {
            throw Error("predictions TSV: expected 5 fields at line " + std::to_string(line_no));
        }
        Prediction p;
        p.record_id = fields[0];
        auto label = label_from_string(fields[1]);
        if (!label) throw Error("predictions TSV: bad label at line " + std::to_string(line_no));
        p.label = *label;
        p.scorer_id = fields[2];
        p.variant_id = fields[3];
        p.abstained = (fields[4] == "true");
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace rubriq
