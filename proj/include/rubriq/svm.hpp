#pragma once

#include "rubriq/corpus.hpp"
#include "rubriq/scorers.hpp"
#include "rubriq/tfidf.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rubriq {

struct SvmParams {
    double C = 1.0;
    double gamma = -1.0; // <= 0 selects 1 / (n_features * variance of X entries)
    double coef0 = 0.0;
    double tol = 1e-3;
    int max_iter = 1000; // outer examine sweeps
    // Record the dual objective after every successful pair update (test
    // hook; the trace grows with update count).
    bool track_objective = false;
};

struct TrainDiagnostics {
    bool converged = true;
    int iterations = 0;
    long updates = 0;
    std::vector<double> objective_trace; // populated when track_objective
};

// Binary classifier, classes fixed as Correct = +1, Incorrect = -1.
struct SvmModel {
    std::vector<SparseVector> support_vectors;
    std::vector<double> dual_coefs; // alpha_i * y_i per support vector
    double bias = 0.0;
    double gamma = 0.0;
    double coef0 = 0.0;
    std::size_t dim = 0;
    TrainDiagnostics diagnostics; // not persisted
};

double kernel(const SparseVector& a, const SparseVector& b, double gamma, double coef0);

// Soft-margin dual via sequential minimal optimization. Non-convergence
// within max_iter sweeps is flagged in diagnostics, not thrown.
SvmModel train_svm(const std::vector<SparseVector>& X, const std::vector<Label>& y,
                   SvmParams params = {});

double decision_value(const SvmModel& model, const SparseVector& x);
// decision > 0 -> Correct; 0 and below -> Incorrect.
Label predict(const SvmModel& model, const SparseVector& x);

struct SvmTextModel {
    Vectorizer vectorizer;
    SvmModel model;
};

SvmTextModel train_text_classifier(const std::vector<std::string>& texts,
                                   const std::vector<Label>& labels,
                                   VectorizerConfig vec_config = {}, SvmParams params = {});
Label predict_text(const SvmTextModel& model, const std::string& text);

nlohmann::json svm_text_model_to_json(const SvmTextModel& model);
SvmTextModel svm_text_model_from_json(const nlohmann::json& j);
void save_svm_text_model(const SvmTextModel& model, const std::filesystem::path& path);
SvmTextModel load_svm_text_model(const std::filesystem::path& path);

// Scores answer text alone; never abstains.
class SvmScorer : public Scorer {
  public:
    SvmScorer(SvmTextModel model, std::string scorer_id = "svm");
    std::string id() const override;
    Prediction score(const AnswerRecord& record) override;

  private:
    SvmTextModel model_;
    std::string scorer_id_;
};

} // namespace rubriq
