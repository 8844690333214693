#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "afsmote/calibration.hpp"
#include "afsmote/dataset.hpp"
#include "afsmote/evaluation.hpp"
#include "afsmote/filter.hpp"
#include "afsmote/models.hpp"
#include "afsmote/samplers.hpp"

namespace afsmote {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum class ClassifierKind { kLogistic, kStumpBoost, kLinearSvm };
std::string to_string(ClassifierKind k);
ClassifierKind parse_classifier_kind(const std::string& text);

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::kLogistic;
  LogisticOptions logistic;
  int boost_rounds = 100;
  double boost_learning_rate = 0.1;
  double svm_lambda = 1e-3;
  int svm_epochs = 20;
};

std::unique_ptr<ProbClassifier> fit_classifier(const ClassifierConfig& config, const Matrix& x,
                                               std::span<const int> y, std::uint64_t seed);

/// Boosted stumps get isotonic; logistic and max-margin models get Platt.
CalibrationKind default_calibration(ClassifierKind kind);
CalibrationMap fit_calibration(CalibrationKind kind, std::span<const double> raw, std::span<const int> labels);

struct SyntheticSource {
  std::size_t n = 10000;
  double pi1 = 0.05;
  std::size_t dim = 2;
  double separation = 3.0;         // distance between class means, in units of sigma
  std::optional<std::uint64_t> seed;  // defaults to the experiment seed
};

struct DataSource {
  std::optional<std::filesystem::path> csv;  // synthetic when absent
  LabelColumn label = std::string("y");
  NanPolicy nan_policy = NanPolicy::kReject;
  SyntheticSource synthetic;
};

Dataset load_source(const DataSource& source, std::uint64_t experiment_seed);

struct ExperimentConfig {
  DataSource data;
  SamplerConfig sampler;
  bool filter_enabled = true;  // false gives the plain oversampling baseline
  FilterConfig filter;
  DiscriminatorOptions discriminator;
  ClassifierConfig classifier;
  std::optional<CalibrationKind> calibration;  // policy table when unset
  std::vector<double> betas{1.0, 2.0};
  double p0 = 0.9;
  std::size_t cv_folds = 5;
  BootstrapConfig bootstrap;
  bool compute_intervals = true;
  bool compare_to_baseline = true;  // DeLong against the unaugmented model
  std::optional<std::size_t> pca_target_dim;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;  // not part of the resolved config: output never depends on it

  void validate() const;
  /// Full resolved configuration with sorted keys.
  nlohmann::json to_json() const;
};

/// FNV-1a over the canonical JSON of the resolved config, 16 hex digits.
std::string config_hash(const ExperimentConfig& config);
std::string json_hash(const nlohmann::json& value);

struct FoldResult {
  std::size_t fold = 0;
  MetricReport metrics;
  std::size_t n_train = 0, n_valid = 0, n_test = 0;
  std::size_t n_candidates = 0, n_retained = 0;
  std::string sampler_fallback;
  double pilot_threshold = 0.5;
  std::optional<double> epsilon_hat;
  std::optional<double> l_over_rho_hat;
  nlohmann::json calibration;
  std::optional<PCAProjection> pca;
  std::vector<double> test_probs;  // calibrated, by test row order
  std::vector<std::size_t> test_indices;
  std::vector<double> valid_probs;
  std::vector<int> valid_labels;
  bool leakage_audit_passed = false;

  nlohmann::json to_json() const;
};

struct Aggregate {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

/// Mean with a two-sided Student-t interval at `confidence`; lo = hi = mean
/// for a single value.
Aggregate aggregate_values(std::span<const double> values, double confidence = 0.95);

struct RunResult {
  std::vector<FoldResult> folds;
  std::map<std::string, Aggregate> aggregate;
  TheoremDiagnostics diagnostics;  // fold means; L*rho over folds where present
  bool l_over_rho_present = false;
  nlohmann::json config;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;  // command-line assignments, recorded for provenance
  std::string started_utc, finished_utc;

  nlohmann::json to_json(bool include_timestamps = true) const;
};

/// Pre-processed view of one fold. Exposed for tests of the individual stages.
struct FoldData {
  Dataset train, valid, test;
  FoldSplit split;
  std::optional<PCAProjection> pca;
};

FoldData prepare_fold(const Dataset& data, const FoldSplit& split, const ExperimentConfig& config);

FoldResult run_fold(const FoldData& fold, std::size_t fold_index, const ExperimentConfig& config);

RunResult run_pipeline(const ExperimentConfig& config);
RunResult run_on_dataset(const Dataset& data, const ExperimentConfig& config);

// ---- sweeps --------------------------------------------------------------

struct SweepGrid {
  std::vector<double> lambda_values{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> p0_values{0.80, 0.85, 0.90, 0.95};
  std::vector<std::size_t> k_values{3, 5, 10};
  std::vector<double> ratio_values{1.0, 2.0, 4.0};

  std::size_t cells() const { return lambda_values.size() * p0_values.size() * k_values.size() * ratio_values.size(); }
};

struct SweepCell {
  std::size_t id = 0;
  double lambda = 0.0, p0 = 0.0, ratio = 0.0;
  std::size_t k = 0;
  std::optional<RunResult> result;
  std::string error;  // set when the cell failed
};

/// Config of cell `id` (lambda-major order), seed hashed from the base seed
/// and the cell coordinates.
ExperimentConfig sweep_cell_config(const ExperimentConfig& base, const SweepGrid& grid, std::size_t id);

std::vector<SweepCell> run_sweep(const ExperimentConfig& base, const SweepGrid& grid);

/// Long format: cell, lambda, p0, k, ratio, fold, metric, value, status.
void write_sweep_csv(const std::vector<SweepCell>& cells, const std::filesystem::path& path);

// ---- theorem harness -----------------------------------------------------

struct TheoremConfig {
  std::size_t n_seeds = 5;
  double beta = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double min_improvement_fraction = 0.8;  // share of seeds with dF >= 0
};

struct TheoremSeedResult {
  std::uint64_t seed = 0;
  double f_tilde_filtered = 0.0, f_tilde_baseline = 0.0, delta_f_tilde = 0.0;
  double brier_filtered = 0.0, brier_baseline = 0.0, delta_brier = 0.0;
  double epsilon_hat = 0.0;
  double l_over_rho_hat = 0.0;
  bool l_over_rho_present = false;
  double bound = 0.0;
  double recall_filtered = 0.0, recall_smote = 0.0;
  bool improvement = false;
  bool bound_holds = false;
};

struct TheoremReport {
  std::vector<TheoremSeedResult> seeds;
  double improvement_fraction = 0.0;
  std::size_t bound_holds = 0;
  std::size_t recall_at_least_smote = 0;
  bool passed = true;
  nlohmann::json config;

  nlohmann::json to_json() const;
};

/// For each seed: AF-SMOTE, plain SMOTE and the unaugmented model on a fresh
/// synthetic draw, all with that seed.
TheoremReport theorem_check(const SyntheticSource& spec, const ExperimentConfig& config, const TheoremConfig& tc);

// ---- reports -------------------------------------------------------------

enum class ReportFormat { kJson, kCsv };

/// JSON: sorted keys, shortest round-trip reals. CSV: fold, metric, value
/// with 17 significant digits.
void emit_report(const RunResult& result, ReportFormat format, const std::filesystem::path& path);

std::string utc_timestamp();

// ---- augmentation --------------------------------------------------------

struct AugmentResult {
  CandidateSet candidates;  // original feature units
  FilteredSet filtered;
  Dataset augmented;        // input rows followed by retained candidates (label 1)
  double pilot_threshold = 0.5;
  std::optional<double> epsilon_hat;
};

/// Candidate generation and filtering on a whole dataset. The pilot scorer
/// and its threshold are fitted in-sample.
AugmentResult augment_dataset(const Dataset& data, const ExperimentConfig& config);

}  // namespace afsmote
