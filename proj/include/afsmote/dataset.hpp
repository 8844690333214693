#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "afsmote/matrix.hpp"

namespace afsmote {

using Labels = std::vector<int>;

/// Feature matrix with binary labels (1 = minority / positive).
struct Dataset {
  Matrix features;
  Labels labels;
  std::vector<std::string> feature_names;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }

  /// Throws if the shape is inconsistent, a label is not 0/1, or a feature
  /// is non-finite (unless allow_nan).
  void validate(bool allow_nan = false) const;

  Dataset subset(std::span<const std::size_t> indices) const;
};

struct ClassStats {
  std::size_t n_total = 0;
  std::size_t n_pos = 0;
  double pi1 = 0.0;
};

ClassStats class_stats(std::span<const int> labels);
inline ClassStats class_stats(const Dataset& data) { return class_stats(data.labels); }

/// Throws SingleClassInput unless both labels occur.
void require_both_classes(std::span<const int> labels, const char* context);

struct FoldSplit {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> valid_indices;
  std::vector<std::size_t> test_indices;
};

/// Fraction of each fold's non-test rows carved out (stratified) for
/// calibration and threshold selection.
inline constexpr double kValidationFraction = 0.25;

/// Stratified k-fold split. Positives and negatives are shuffled separately
/// and dealt round-robin; negatives continue the deal where positives
/// stopped so fold sizes differ by at most one.
std::vector<FoldSplit> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed);

/// Stratified split of `indices` into (kept, carved) with `fraction` of each
/// class carved out. Each side keeps at least one member of a class that has
/// two or more members.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_carve(
    std::span<const std::size_t> indices, std::span<const int> labels, double fraction,
    std::uint64_t seed);

struct SyntheticSpec {
  std::size_t n = 10000;
  double pi1 = 0.05;
  std::size_t dim = 2;
  std::array<std::vector<double>, 2> class_means;  // [0] = negative, [1] = positive
  std::array<Matrix, 2> class_covs;
  std::uint64_t seed = 0;

  /// Isotropic unit-variance classes whose means differ by `separation`
  /// along the first axis.
  static SyntheticSpec isotropic(std::size_t n, double pi1, std::size_t dim, double separation,
                                 std::uint64_t seed);
};

/// Exactly round(n * pi1) positives, rows shuffled, deterministic by seed.
Dataset make_gaussian_imbalanced(const SyntheticSpec& spec);

/// Lower Cholesky factor; throws NonPositiveDefiniteCovariance.
Matrix cholesky(const Matrix& a);

// ---- CSV -----------------------------------------------------------------

using LabelColumn = std::variant<std::string, std::size_t>;

enum class NanPolicy { kReject, kAllow };

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label,
                 NanPolicy nan_policy = NanPolicy::kReject);

/// Writes the dataset with a trailing label column named `label_name`.
/// Reals use 17 significant digits so a reload is bit-exact.
void write_csv(const Dataset& data, const std::filesystem::path& path,
               const std::string& label_name = "y");

/// Shortest-to-write 17 significant digit decimal form of a double.
std::string format_real(double value);

// ---- preprocessing -------------------------------------------------------

/// Replaces NaN cells with the column mean over `fit_rows`.
void impute_mean(Matrix& features, std::span<const std::size_t> fit_rows);

/// Column z-score transform fitted on a subset of rows.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& features, std::span<const std::size_t> rows);
  Matrix apply(const Matrix& features) const;
  Matrix invert(const Matrix& standardized) const;
};

}  // namespace afsmote
