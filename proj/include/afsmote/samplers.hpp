#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afsmote/dataset.hpp"
#include "afsmote/matrix.hpp"
#include "afsmote/models.hpp"

namespace afsmote {

enum class SamplerMethod { kNone, kSmote, kAdasyn, kBorderline, kSvmSmote };

std::string to_string(SamplerMethod m);
SamplerMethod parse_sampler_method(const std::string& text);

struct SamplerConfig {
  SamplerMethod method = SamplerMethod::kSmote;
  std::size_t k_neighbors = 5;
  double overgen_ratio = 1.0;  // candidates = ratio x class deficit
  std::uint64_t seed = 0;
  // Replaces every drawn gap (0 produces exact copies of the base rows).
  std::optional<double> fixed_gap;
  // SVM-SMOTE: support set is {margin <= 1 + tolerance}.
  double support_tolerance = 1e-3;
  double svm_lambda = 1e-2;
  int svm_epochs = 50;
};

/// Synthetic minority points with provenance. Row j equals
///   minority[parent_a[j]] + gap[j] * (minority[parent_b[j]] - minority[parent_a[j]])
/// where minority[i] is dataset row minority_rows[i]. Gaps lie in [0, 1]
/// except SVM-SMOTE extrapolation, which stores a gap in [-0.5, 0).
struct CandidateSet {
  Matrix points;
  std::vector<std::size_t> parent_a;
  std::vector<std::size_t> parent_b;
  std::vector<double> gap;
  std::vector<std::size_t> minority_rows;
  SamplerMethod method = SamplerMethod::kNone;
  std::string fallback;  // empty unless a degenerate input forced plain SMOTE

  std::size_t size() const { return gap.size(); }
};

/// Number of candidates requested: round(ratio * max(0, n_neg - n_pos)).
std::size_t target_candidate_count(std::size_t n_pos, std::size_t n_neg, double ratio);

/// Indices of the k nearest rows of `points` to `query` (Euclidean, ties to
/// the lower index). `exclude` removes one row, normally the query itself.
std::vector<std::size_t> knn_indices(const Matrix& points, std::span<const double> query, std::size_t k,
                                     std::optional<std::size_t> exclude = std::nullopt);

/// Fraction of majority rows among each minority row's k nearest neighbours
/// in the full dataset (the row itself excluded). Indexed like minority_rows.
std::vector<double> majority_fractions(const Dataset& data, std::span<const std::size_t> minority_rows,
                                       std::size_t k);

enum class MinorityCategory { kSafe, kDanger, kNoise };
MinorityCategory categorize(double majority_fraction);

/// Integer allocation proportional to `weights` summing exactly to `total`
/// (largest remainder, ties to the lower index).
std::vector<std::size_t> largest_remainder(std::span<const double> weights, std::size_t total);

CandidateSet smote_generate(const Dataset& data, const SamplerConfig& config);
CandidateSet adasyn_generate(const Dataset& data, const SamplerConfig& config);
CandidateSet borderline_generate(const Dataset& data, const SamplerConfig& config);
CandidateSet svm_smote_generate(const Dataset& data, const SamplerConfig& config, const LinearMaxMarginModel& svm);

/// Dispatches on config.method; SVM-SMOTE fits its own max-margin model.
/// kNone yields an empty set.
CandidateSet generate_candidates(const Dataset& data, const SamplerConfig& config);

/// Columns f0..f{d-1}, parent_a, parent_b, gap.
void write_candidates_csv(const CandidateSet& candidates, const std::filesystem::path& path);

}  // namespace afsmote
