#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "afsmote/matrix.hpp"
#include "afsmote/models.hpp"

namespace afsmote {

struct FilterConfig {
  double lambda = 0.5;
  double tau = 0.8;  // values above 1 are accepted and retain nothing
  double alpha = 4.0;
  double eta = 0.5;
  std::optional<std::size_t> top_k;
  bool diversity_enabled = true;
  // Four-head fusion S = w . (s_util, s_real, s_unc, s_den); off by default.
  bool extended_fusion = false;
  std::array<double, 4> head_weights{0.4, 0.4, 0.1, 0.1};
  // s_util head = 2 * (1 - sigmoid(alpha d)), spanning (0, 1] instead of (0, 0.5].
  bool rescale_utility = true;
  // Fused realism head = min(1, odds(s_real) / odds(prior)) with the
  // discriminator's training prior, i.e. the capped real/synthetic density
  // ratio. s_real itself (and epsilon) stay the raw discriminator output.
  bool normalize_realism = true;
  std::size_t density_k = 5;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

struct HeadScores {
  std::vector<double> s_real;
  std::vector<double> s_util;
  std::vector<double> s_unc;
  std::vector<double> s_den;

  std::size_t size() const { return s_real.size(); }
};

struct ScoredCandidate {
  std::size_t index = 0;
  double s_real = 0.0, s_util = 0.0, s_unc = 0.0, s_den = 0.0;
  double fused = 0.0;
  bool retained = false;
};

struct FilteredSet {
  std::vector<ScoredCandidate> scored;    // one per candidate, by index
  std::vector<std::size_t> retained;      // ascending candidate indices
  std::vector<std::size_t> selection_order;  // order in which Top-K picked them
  std::size_t passed_tau = 0;             // |{S >= tau}|
};

// ---- discriminator -------------------------------------------------------

struct DiscriminatorOptions {
  int n_rounds = 200;
  double learning_rate = 0.1;
  double holdout_fraction = 0.2;
  // Reweight so real and synthetic rows carry equal total weight.
  bool balance_classes = false;
};

inline constexpr std::size_t kMinDiscriminatorRows = 5;

struct Discriminator {
  StumpBoostModel model;
  double real_prior = 0.5;  // effective share of real rows in training
  std::vector<std::size_t> train_real, train_synthetic;      // row indices into the inputs
  std::vector<std::size_t> holdout_real, holdout_synthetic;
};

/// Label 1 = real minority, 0 = synthetic. A stratified 80/20 split keeps
/// the 20% unseen for estimate_epsilon; identical rows land on the same side.
Discriminator train_discriminator(const Matrix& real_minority, const Matrix& candidates, std::uint64_t seed,
                                  const DiscriminatorOptions& options = {});

// ---- heads ---------------------------------------------------------------

std::vector<double> realism_score(const ProbClassifier& g, const Matrix& points);
std::vector<double> boundary_distance(std::span<const double> p_hat, double t);
/// 1 - sigmoid(alpha d), in (0, 0.5].
std::vector<double> utility_score(std::span<const double> d, double alpha);
/// Binary entropy in bits.
std::vector<double> uncertainty_score(std::span<const double> p_hat);

struct DensityReference {
  std::vector<double> candidate_radius;  // mean distance to k nearest real minority rows
  double median_real_radius = 0.0;       // median of the same over real rows, self excluded
};
DensityReference density_radii(const Matrix& candidates, const Matrix& real_minority, std::size_t k);
/// exp(-r / median_real_radius).
std::vector<double> density_score(const Matrix& candidates, const Matrix& real_minority, std::size_t k);

/// min(1, odds(s) / odds(prior)) elementwise.
std::vector<double> realism_head(std::span<const double> s_real, double prior);

/// Evaluates all four heads. `pilot_probs` are the pilot scorer's
/// probabilities at the candidates and `t` its threshold.
HeadScores compute_heads(const Matrix& candidates, const Discriminator& discriminator,
                         std::span<const double> pilot_probs, double t, const Matrix& real_minority,
                         const FilterConfig& config);

// ---- fusion and selection ------------------------------------------------

std::vector<double> fuse_scores(const HeadScores& heads, const FilterConfig& config);

/// Candidate indices ordered by descending score, ties to the lower index.
std::vector<std::size_t> rank_descending(std::span<const double> scores);

/// Threshold at tau, then Top-K (greedy score + gamma * min distance with
/// gamma = 0.1 range(S) when diversity is on, plain score order otherwise).
/// `points` is only read when diversity selection runs.
FilteredSet fuse_and_select(const HeadScores& heads, const Matrix& points, const FilterConfig& config);

/// Columns index, s_real, s_util, s_unc, s_den, S, retained.
void write_scores_csv(const FilteredSet& set, const std::filesystem::path& path);

// ---- PCA -----------------------------------------------------------------

struct PCAProjection {
  std::vector<double> mean;
  Matrix components;  // d x r, orthonormal columns
  std::vector<double> explained_variance;
  std::size_t achieved_rank = 0;  // eigenvalues above the numerical floor
  bool rank_deficient = false;

  std::size_t input_dim() const { return mean.size(); }
  std::size_t output_dim() const { return components.cols(); }
};

/// Power iteration with deflation on the sample covariance (tolerance 1e-10,
/// at most 10k iterations per component). When fewer than r eigenvalues are
/// nonzero the remaining columns complete an orthonormal basis with zero
/// explained variance and the projection is flagged.
PCAProjection pca_fit(const Matrix& features, std::size_t r);
Matrix pca_project(const PCAProjection& proj, const Matrix& features);
/// Maps projected rows back to the input space (mean added back).
Matrix pca_reconstruct(const PCAProjection& proj, const Matrix& projected);

// ---- diagnostics ---------------------------------------------------------

struct TheoremDiagnostics {
  double epsilon_hat = 0.0;
  std::optional<double> lipschitz_over_reach_hat;  // absent without boundary-adjacent pairs
  double boundary_threshold_t = 0.5;
};

/// Fraction of held-out synthetic rows with s_real >= eta. Throws EmptyHoldout.
double estimate_epsilon(const ProbClassifier& g, const Matrix& held_out_synthetic, double eta);
double epsilon_from_scores(std::span<const double> s_real, double eta);

inline constexpr double kBoundaryBand = 0.1;

/// L * rho where L is the largest |p_i - p_j| / ||x_i - x_j|| over minority
/// pairs with both |p - t| <= 0.1 and rho the median nearest-neighbour
/// distance among minority rows. Absent when no such pair exists.
std::optional<double> estimate_l_over_rho(std::span<const double> minority_probs, const Matrix& minority, double t);
std::optional<double> estimate_l_over_rho(const ProbClassifier& p_hat, const Matrix& minority, double t);

}  // namespace afsmote
