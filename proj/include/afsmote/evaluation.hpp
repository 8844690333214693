#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "afsmote/kernels.hpp"

namespace afsmote {

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// Predicts positive iff p >= t.
Confusion confusion_at(std::span<const double> probs, std::span<const int> labels, double t);

struct PrfMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double f_beta = 0.0;
  double balanced_accuracy = 0.0;
};

/// 0/0 conventions: precision = 0 when nothing is predicted positive,
/// recall = 0 without positives, F = 0 when precision = recall = 0.
PrfMetrics prf_metrics(const Confusion& c, double beta = 1.0);
double f_beta_score(double precision, double recall, double beta);

/// Plug-in estimate of
///   (1+b^2) pi1 E[p 1{p>=t} | y=1] / (b^2 pi1 + (1-pi1) E[1{p>=t} | y=0]).
/// Not clamped; it can exceed 1.
double f_tilde_beta(std::span<const double> probs, std::span<const int> labels, double t, double beta, double pi1);

/// Mann-Whitney AUC with half credit for ties.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// sum_k (R_k - R_{k-1}) P_k over descending distinct-score cut points.
double average_precision(std::span<const double> scores, std::span<const int> labels);

double brier(std::span<const double> probs, std::span<const int> labels);

inline constexpr std::size_t kDefaultBins = 10;

/// Equal-width bin of p in [0,1]; p = 1 falls in the last bin.
std::size_t bin_index(double p, std::size_t n_bins);

struct CalibrationErrors {
  double ece = 0.0;
  double mce = 0.0;
};
CalibrationErrors ece_mce(std::span<const double> probs, std::span<const int> labels,
                          std::size_t n_bins = kDefaultBins);

// ---- threshold selection -------------------------------------------------

struct OperatingPoint {
  double threshold = 0.5;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool feasible = false;
};

/// {0, 1} plus midpoints between consecutive distinct sorted probabilities,
/// ascending.
std::vector<double> threshold_candidates(std::span<const double> probs);

/// Maximises F1 subject to precision >= p0 (ties: higher threshold). When
/// no candidate reaches p0, maximises precision, then F1, then threshold,
/// and reports feasible = false.
OperatingPoint select_threshold(std::span<const double> probs, std::span<const int> labels, double p0);

// ---- bootstrap -----------------------------------------------------------

struct BootstrapConfig {
  std::size_t n_resamples = 2000;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  bool stratified = false;
};

inline constexpr std::size_t kMinResamplesForBca = 100;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double z0 = 0.0;
  double acceleration = 0.0;
  bool degenerate = false;        // all replicates identical
  std::size_t exhausted_redraws = 0;
  bool few_resamples = false;     // fewer than kMinResamplesForBca
};

/// Type-7 (linear interpolation) quantile of sorted values.
double empirical_quantile(std::span<const double> sorted, double q);

Interval percentile_interval(std::vector<double> replicates, double confidence);

/// BCa endpoints from a point estimate, bootstrap replicates and jackknife
/// values. z0 counts ties with the point estimate as half below.
Interval bca_from_replicates(double point, std::vector<double> replicates, std::span<const double> jackknife,
                             double confidence);

/// Same, with z0 and the acceleration supplied directly.
Interval bca_with_parameters(std::vector<double> replicates, double z0, double acceleration, double confidence);

Interval bca_bootstrap(const kernels::Statistic& statistic, std::span<const double> probs,
                       std::span<const int> labels, const BootstrapConfig& config);

// ---- DeLong --------------------------------------------------------------

struct DeLongResult {
  double auc_a = 0.0;
  double auc_b = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  double cov_ab = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  bool zero_variance_unequal = false;
};

/// Paired two-sided DeLong test on the same samples.
DeLongResult delong_test(std::span<const double> scores_a, std::span<const double> scores_b,
                         std::span<const int> labels);

double normal_cdf(double z);
double normal_quantile(double p);

// ---- report --------------------------------------------------------------

struct MetricReport {
  double threshold = 0.5;
  bool threshold_feasible = false;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  std::map<double, double> f_beta;        // beta -> F_beta
  std::map<double, double> f_tilde_beta;  // beta -> surrogate
  double auroc = 0.0;
  double average_precision = 0.0;
  double balanced_accuracy = 0.0;
  double brier = 0.0;
  double ece = 0.0;
  double mce = 0.0;
  std::map<std::string, std::pair<double, double>> intervals;  // metric -> (lo, hi)
  std::optional<double> delong_p;

  /// Flat name -> value view (f_beta keyed as f_beta_<beta>).
  std::map<std::string, double> scalars() const;
  nlohmann::json to_json() const;
};

/// Every metric for calibrated test probabilities at threshold t.
MetricReport evaluate_at(std::span<const double> probs, std::span<const int> labels, double t,
                         std::span<const double> betas, std::size_t n_bins = kDefaultBins);

std::string beta_key(double beta);

}  // namespace afsmote
