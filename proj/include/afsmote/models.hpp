#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "afsmote/matrix.hpp"

namespace afsmote {

double sigmoid(double z);
/// log(1 + exp(z)) without overflow.
double softplus(double z);

/// Binary probabilistic classifier. Every model exposes a raw real-valued
/// score (log-odds or signed margin); probabilities are sigmoid(raw).
class ProbClassifier {
 public:
  virtual ~ProbClassifier() = default;

  virtual std::size_t dim() const = 0;
  virtual std::string type_tag() const = 0;
  virtual std::vector<double> decision_function(const Matrix& features) const = 0;
  virtual nlohmann::json to_json() const = 0;
  virtual std::unique_ptr<ProbClassifier> clone() const = 0;

  /// Probabilities in [0, 1]; throws DimensionMismatch.
  std::vector<double> predict_proba(const Matrix& features) const;

 protected:
  void check_dim(const Matrix& features) const;
};

inline std::vector<double> predict_proba(const ProbClassifier& model, const Matrix& features) {
  return model.predict_proba(features);
}

// ---- logistic regression -------------------------------------------------

struct LogisticOptions {
  double l2_lambda = 1e-4;
  int max_iter = 100;
  double tol = 1e-8;
};

class LogisticModel final : public ProbClassifier {
 public:
  std::vector<double> coefficients;
  double intercept = 0.0;
  double l2_lambda = 0.0;
  std::vector<double> loss_history;  // objective after each accepted step, first = start
  int iterations = 0;
  bool converged = false;

  std::size_t dim() const override { return coefficients.size(); }
  std::string type_tag() const override { return "logistic"; }
  std::vector<double> decision_function(const Matrix& features) const override;
  nlohmann::json to_json() const override;
  std::unique_ptr<ProbClassifier> clone() const override { return std::make_unique<LogisticModel>(*this); }
};

/// Mean weighted negative log-likelihood plus (lambda/2)*||coef||^2. The
/// intercept is not penalised. `params` holds the d coefficients followed by
/// the intercept; empty weights mean unit weights.
double logistic_objective(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                          double l2_lambda, std::span<const double> params);
std::vector<double> logistic_gradient(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                                      double l2_lambda, std::span<const double> params);

/// Damped Newton: a step is halved up to 20 times until the objective does
/// not increase.
LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, const LogisticOptions& options = {},
                           std::span<const double> weights = {});

// ---- boosted decision stumps ---------------------------------------------

struct Stump {
  std::size_t feature = 0;
  double threshold = 0.0;  // x[feature] <= threshold goes left
  double left = 0.0;
  double right = 0.0;

  double operator()(std::span<const double> row) const { return row[feature] <= threshold ? left : right; }
};

/// raw(x) = base_score + learning_rate * sum of stump outputs.
class StumpBoostModel final : public ProbClassifier {
 public:
  std::size_t n_features = 0;
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<Stump> stumps;
  std::vector<double> loss_history;  // mean logistic loss, index r = after r rounds
  std::uint64_t seed = 0;

  std::size_t dim() const override { return n_features; }
  std::string type_tag() const override { return "stump_boost"; }
  std::vector<double> decision_function(const Matrix& features) const override;
  nlohmann::json to_json() const override;
  std::unique_ptr<ProbClassifier> clone() const override { return std::make_unique<StumpBoostModel>(*this); }
};

/// Gradient boosting on logistic loss. Each round fits a least-squares stump
/// to the residuals y - p by exhaustive search over features and midpoints
/// between consecutive distinct values; leaves hold the residual means.
/// The search is deterministic, `seed` is recorded for provenance only.
StumpBoostModel fit_stump_boost(const Matrix& x, std::span<const int> y, int n_rounds, double learning_rate,
                                std::uint64_t seed, std::span<const double> weights = {});

// ---- linear max-margin ---------------------------------------------------

class LinearMaxMarginModel final : public ProbClassifier {
 public:
  std::vector<double> weights;
  double bias = 0.0;
  double reg_lambda = 0.0;
  std::vector<double> objective_history;  // best averaged-iterate objective after each epoch

  std::size_t dim() const override { return weights.size(); }
  std::string type_tag() const override { return "linear_svm"; }
  std::vector<double> decision_function(const Matrix& features) const override;
  nlohmann::json to_json() const override;
  std::unique_ptr<ProbClassifier> clone() const override {
    return std::make_unique<LinearMaxMarginModel>(*this);
  }

  /// y_pm * (w.x + b) for each row.
  std::vector<double> margins(const Matrix& features, std::span<const int> labels_pm) const;
  /// Rows with margin <= 1 + tolerance.
  std::vector<std::size_t> support_set(const Matrix& features, std::span<const int> labels_pm,
                                       double tolerance = 1e-3) const;
};

/// (lambda/2)*||w||^2 + mean hinge loss.
double hinge_objective(const Matrix& x, std::span<const int> labels_pm, double reg_lambda,
                       std::span<const double> w, double b);

/// Pegasos-style primal sub-gradient descent with iterate averaging. The
/// returned parameters are the epoch-end averaged iterate with the lowest
/// objective. Labels are +1/-1.
LinearMaxMarginModel fit_linear_svm(const Matrix& x, std::span<const int> labels_pm, double reg_lambda,
                                    int epochs, std::uint64_t seed);

/// Maps 0/1 labels to -1/+1.
std::vector<int> to_plus_minus(std::span<const int> labels01);

// ---- serialization -------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

std::unique_ptr<ProbClassifier> model_from_json(const nlohmann::json& doc);

}  // namespace afsmote
