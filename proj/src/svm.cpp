#include "rubriq/svm.hpp"

#include "rubriq/digest.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace rubriq {

using nlohmann::json;

double kernel(const SparseVector& a, const SparseVector& b, double gamma, double coef0) {
    return std::tanh(gamma * dot(a, b) + coef0);
}

namespace {

// Variance over all dense entries of X (zeros included), matching the
// common "scale" gamma convention.
double dense_variance(const std::vector<SparseVector>& X, std::size_t dim) {
    if (dim == 0 || X.empty()) return 0.0;
    double total = static_cast<double>(X.size()) * static_cast<double>(dim);
    double sum = 0.0;
    double sumsq = 0.0;
    for (const SparseVector& x : X) {
        for (double v : x.values) {
            sum += v;
            sumsq += v * v;
        }
    }
    double mean = sum / total;
    return sumsq / total - mean * mean;
}

class SmoSolver {
  public:
    SmoSolver(const std::vector<SparseVector>& X, const std::vector<double>& y,
              const SvmParams& params, double gamma)
        : X_(X), y_(y), params_(params), gamma_(gamma), n_(X.size()), alpha_(n_, 0.0),
          errors_(n_) {
        kmat_.resize(n_ * n_);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double k = kernel(X_[i], X_[j], gamma_, params_.coef0);
                kmat_[i * n_ + j] = k;
                kmat_[j * n_ + i] = k;
            }
        }
        for (std::size_t i = 0; i < n_; ++i) errors_[i] = -y_[i]; // f = 0 initially
    }

    TrainDiagnostics solve() {
        TrainDiagnostics diag;
        bool examine_all = true;
        int iter = 0;
        while (iter < params_.max_iter) {
            ++iter;
            int changed = 0;
            if (examine_all) {
                for (std::size_t i = 0; i < n_; ++i) changed += examine(i, diag);
            } else {
                for (std::size_t i = 0; i < n_; ++i) {
                    if (alpha_[i] > 0.0 && alpha_[i] < params_.C) changed += examine(i, diag);
                }
            }
            if (examine_all) {
                if (changed == 0) break; // full sweep with no progress: done
                examine_all = false;
            } else if (changed == 0) {
                examine_all = true;
            }
        }
        diag.iterations = iter;
        diag.converged = iter < params_.max_iter;
        return diag;
    }

    const std::vector<double>& alpha() const { return alpha_; }
    double bias() const { return b_; }

  private:
    double k(std::size_t i, std::size_t j) const { return kmat_[i * n_ + j]; }

    // Dual objective W(alpha) = sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
    double objective() const {
        double linear = 0.0;
        double quad = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (alpha_[i] == 0.0) continue;
            linear += alpha_[i];
            for (std::size_t j = 0; j < n_; ++j) {
                if (alpha_[j] == 0.0) continue;
                quad += alpha_[i] * alpha_[j] * y_[i] * y_[j] * k(i, j);
            }
        }
        return linear - 0.5 * quad;
    }

    int examine(std::size_t i2, TrainDiagnostics& diag) {
        double y2 = y_[i2];
        double a2 = alpha_[i2];
        double e2 = errors_[i2];
        double r2 = e2 * y2;
        bool violates = (r2 < -params_.tol && a2 < params_.C) || (r2 > params_.tol && a2 > 0.0);
        if (!violates) return 0;

        // Second-choice heuristic: the largest |E1 - E2| among non-bound points.
        std::size_t best = n_;
        double best_gap = -1.0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (alpha_[i] <= 0.0 || alpha_[i] >= params_.C) continue;
            double gap = std::fabs(errors_[i] - e2);
            if (gap > best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        if (best < n_ && take_step(best, i2, diag)) return 1;

        // Deterministic fallback sweeps, offset to avoid always starting at 0.
        for (std::size_t d = 1; d <= n_; ++d) {
            std::size_t i1 = (i2 + d) % n_;
            if (alpha_[i1] > 0.0 && alpha_[i1] < params_.C && take_step(i1, i2, diag)) return 1;
        }
        for (std::size_t d = 1; d <= n_; ++d) {
            std::size_t i1 = (i2 + d) % n_;
            if (take_step(i1, i2, diag)) return 1;
        }
        return 0;
    }

    bool take_step(std::size_t i1, std::size_t i2, TrainDiagnostics& diag) {
        if (i1 == i2) return false;
        double a1 = alpha_[i1];
        double a2 = alpha_[i2];
        double y1 = y_[i1];
        double y2 = y_[i2];
        double e1 = errors_[i1];
        double e2 = errors_[i2];
        double s = y1 * y2;

        double lo;
        double hi;
        if (s < 0.0) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(params_.C, params_.C + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - params_.C);
            hi = std::min(params_.C, a1 + a2);
        }
        if (lo >= hi) return false;

        double k11 = k(i1, i1);
        double k12 = k(i1, i2);
        double k22 = k(i2, i2);
        double eta = k11 + k22 - 2.0 * k12;

        double a2_new;
        if (eta > 0.0) {
            a2_new = a2 + y2 * (e1 - e2) / eta;
            a2_new = std::clamp(a2_new, lo, hi);
        } else {
            // Sigmoid kernels are not positive semidefinite, so eta <= 0
            // happens; evaluate the pair objective at both box ends and move
            // to the better one (keeps the dual objective non-decreasing).
            double f1 = y1 * (e1 + b_) - a1 * k11 - s * a2 * k12;
            double f2 = y2 * (e2 + b_) - s * a1 * k12 - a2 * k22;
            double l1 = a1 + s * (a2 - lo);
            double h1 = a1 + s * (a2 - hi);
            double psi_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                            s * lo * l1 * k12;
            double psi_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                            s * hi * h1 * k12;
            constexpr double kEps = 1e-12;
            if (psi_lo < psi_hi - kEps) {
                a2_new = lo;
            } else if (psi_lo > psi_hi + kEps) {
                a2_new = hi;
            } else {
                return false;
            }
        }
        constexpr double kStepEps = 1e-12;
        if (std::fabs(a2_new - a2) < kStepEps * (a2_new + a2 + kStepEps)) return false;

        double a1_new = a1 + s * (a2 - a2_new);
        if (a1_new < 0.0) a1_new = 0.0; // numeric guard
        if (a1_new > params_.C) a1_new = params_.C;

        double d1 = (a1_new - a1) * y1;
        double d2 = (a2_new - a2) * y2;
        double b1 = b_ - e1 - d1 * k11 - d2 * k12;
        double b2 = b_ - e2 - d1 * k12 - d2 * k22;
        double b_new;
        if (a1_new > 0.0 && a1_new < params_.C) {
            b_new = b1;
        } else if (a2_new > 0.0 && a2_new < params_.C) {
            b_new = b2;
        } else {
            b_new = (b1 + b2) / 2.0;
        }

        double db = b_new - b_;
        for (std::size_t i = 0; i < n_; ++i) {
            errors_[i] += d1 * k(i1, i) + d2 * k(i2, i) + db;
        }
        alpha_[i1] = a1_new;
        alpha_[i2] = a2_new;
        b_ = b_new;
        ++diag.updates;
        if (params_.track_objective) diag.objective_trace.push_back(objective());
        return true;
    }

    const std::vector<SparseVector>& X_;
    const std::vector<double>& y_;
    SvmParams params_;
    double gamma_;
    std::size_t n_;
    std::vector<double> alpha_;
    std::vector<double> errors_; // E_i = f(x_i) - y_i
    std::vector<double> kmat_;
    double b_ = 0.0;
};

} // namespace

SvmModel train_svm(const std::vector<SparseVector>& X, const std::vector<Label>& y,
                   SvmParams params) {
    if (X.size() != y.size()) throw Error("svm: feature/label count mismatch");
    if (X.empty()) throw Error("svm: empty training set");
    std::vector<double> yv(y.size());
    bool has_pos = false;
    bool has_neg = false;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == Label::Correct) {
            yv[i] = 1.0;
            has_pos = true;
        } else if (y[i] == Label::Incorrect) {
            yv[i] = -1.0;
            has_neg = true;
        } else {
            throw Error("svm: training labels must be Correct or Incorrect");
        }
    }
    if (!has_pos || !has_neg) throw Error("svm: need at least one example of each class");

    std::size_t dim = X.front().dim;
    double gamma = params.gamma;
    if (gamma <= 0.0) {
        double variance = dense_variance(X, dim);
        gamma = variance > 0.0 && dim > 0 ? 1.0 / (static_cast<double>(dim) * variance) : 1.0;
    }

    SmoSolver solver(X, yv, params, gamma);
    TrainDiagnostics diag = solver.solve();

    SvmModel model;
    model.gamma = gamma;
    model.coef0 = params.coef0;
    model.dim = dim;
    model.diagnostics = std::move(diag);
    model.bias = solver.bias();
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (solver.alpha()[i] > 0.0) {
            model.support_vectors.push_back(X[i]);
            model.dual_coefs.push_back(solver.alpha()[i] * yv[i]);
        }
    }
    return model;
}

double decision_value(const SvmModel& model, const SparseVector& x) {
    double sum = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
        sum += model.dual_coefs[i] * kernel(model.support_vectors[i], x, model.gamma,
                                            model.coef0);
    }
    return sum;
}

Label predict(const SvmModel& model, const SparseVector& x) {
    return decision_value(model, x) > 0.0 ? Label::Correct : Label::Incorrect;
}

SvmTextModel train_text_classifier(const std::vector<std::string>& texts,
                                   const std::vector<Label>& labels,
                                   VectorizerConfig vec_config, SvmParams params) {
    SvmTextModel out{Vectorizer::fit(texts, vec_config), {}};
    std::vector<SparseVector> X;
    X.reserve(texts.size());
    for (const std::string& text : texts) X.push_back(out.vectorizer.transform(text));
    out.model = train_svm(X, labels, params);
    return out;
}

Label predict_text(const SvmTextModel& model, const std::string& text) {
    return predict(model.model, model.vectorizer.transform(text));
}

namespace {

json sparse_to_json(const SparseVector& v) {
    return json{{"indices", v.indices}, {"values", v.values}};
}

SparseVector sparse_from_json(const json& j, std::size_t dim) {
    SparseVector v;
    v.indices = j.at("indices").get<std::vector<std::uint32_t>>();
    v.values = j.at("values").get<std::vector<double>>();
    v.dim = dim;
    if (v.indices.size() != v.values.size()) throw Error("sparse vector size mismatch");
    return v;
}

} // namespace

json svm_text_model_to_json(const SvmTextModel& model) {
    json svs = json::array();
    for (const SparseVector& v : model.model.support_vectors) svs.push_back(sparse_to_json(v));
    return json{{"format_version", "svm-text/1"},
                {"vectorizer", model.vectorizer.to_json()},
                {"gamma", model.model.gamma},
                {"coef0", model.model.coef0},
                {"bias", model.model.bias},
                {"dim", model.model.dim},
                {"support_vectors", svs},
                {"dual_coefs", model.model.dual_coefs}};
}

SvmTextModel svm_text_model_from_json(const json& j) {
    if (j.value("format_version", "") != "svm-text/1") {
        throw Error("unsupported svm model format");
    }
    SvmTextModel out{Vectorizer::from_json(j.at("vectorizer")), {}};
    out.model.gamma = j.at("gamma").get<double>();
    out.model.coef0 = j.at("coef0").get<double>();
    out.model.bias = j.at("bias").get<double>();
    out.model.dim = j.at("dim").get<std::size_t>();
    for (const json& v : j.at("support_vectors")) {
        out.model.support_vectors.push_back(sparse_from_json(v, out.model.dim));
    }
    out.model.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
    if (out.model.dual_coefs.size() != out.model.support_vectors.size()) {
        throw Error("svm model coefficient count mismatch");
    }
    return out;
}

void save_svm_text_model(const SvmTextModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << svm_text_model_to_json(model).dump(2) << '\n';
}

SvmTextModel load_svm_text_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return svm_text_model_from_json(json::parse(in));
}

SvmScorer::SvmScorer(SvmTextModel model, std::string scorer_id)
    : model_(std::move(model)), scorer_id_(std::move(scorer_id)) {}

std::string SvmScorer::id() const { return scorer_id_; }

Prediction SvmScorer::score(const AnswerRecord& record) {
    Prediction p;
    p.record_id = record.id;
    p.scorer_id = scorer_id_;
    p.label = predict_text(model_, record.answer);
    p.raw_output_digest = sha256_hex(label_to_string(p.label));
    return p;
}

} // namespace rubriq
