#include "afsmote/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "afsmote/error.hpp"
#include "afsmote/kernels.hpp"
#include "afsmote/rng.hpp"

namespace afsmote {

std::string to_string(SamplerMethod m) {
  switch (m) {
    case SamplerMethod::kNone: return "none";
    case SamplerMethod::kSmote: return "smote";
    case SamplerMethod::kAdasyn: return "adasyn";
    case SamplerMethod::kBorderline: return "borderline";
    case SamplerMethod::kSvmSmote: return "svm_smote";
  }
  return "none";
}

SamplerMethod parse_sampler_method(const std::string& text) {
  for (auto m : {SamplerMethod::kNone, SamplerMethod::kSmote, SamplerMethod::kAdasyn, SamplerMethod::kBorderline,
                 SamplerMethod::kSvmSmote}) {
    if (to_string(m) == text) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown sampler method '" + text + "'");
}

std::size_t target_candidate_count(std::size_t n_pos, std::size_t n_neg, double ratio) {
  if (n_neg <= n_pos) return 0;
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n_neg - n_pos)));
}

std::vector<std::size_t> knn_indices(const Matrix& points, std::span<const double> query, std::size_t k,
                                     std::optional<std::size_t> exclude) {
  std::vector<std::size_t> idx(k);
  std::vector<double> dist(k);
  kernels::knn_single(points, query, k, exclude, idx, dist);
  return idx;
}

std::vector<double> majority_fractions(const Dataset& data, std::span<const std::size_t> minority_rows,
                                       std::size_t k) {
  const auto table = kernels::knn_of_rows(data.features, minority_rows, k);
  std::vector<double> out(minority_rows.size());
  for (std::size_t i = 0; i < minority_rows.size(); ++i) {
    std::size_t maj = 0;
    for (auto j : table.neighbors(i)) maj += data.labels[j] == 0 ? 1 : 0;
    out[i] = static_cast<double>(maj) / static_cast<double>(k);
  }
  return out;
}

MinorityCategory categorize(double majority_fraction) {
  if (majority_fraction >= 1.0) return MinorityCategory::kNoise;
  if (majority_fraction >= 0.5) return MinorityCategory::kDanger;
  return MinorityCategory::kSafe;
}

std::vector<std::size_t> largest_remainder(std::span<const double> weights, std::size_t total) {
  std::vector<std::size_t> counts(weights.size(), 0);
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || !(sum > 0.0)) return counts;
  std::vector<double> rem(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i] / sum;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    rem[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t j = 0; assigned < total; j = (j + 1) % order.size(), ++assigned) ++counts[order[j]];
  return counts;
}

namespace {

struct MinorityView {
  std::vector<std::size_t> rows;  // dataset indices
  Matrix points;
  kernels::NeighborTable neighbors;  // within minority, self excluded
};

MinorityView minority_view(const Dataset& data, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k_neighbors must be >= 1");
  MinorityView v;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.labels[i] == 1) v.rows.push_back(i);
  if (v.rows.size() < k + 1) {
    throw Error(ErrorCode::kTooFewMinority, "need at least k+1=" + std::to_string(k + 1) +
                                                " minority rows, have " + std::to_string(v.rows.size()));
  }
  v.points = data.features.select_rows(v.rows);
  v.neighbors = kernels::knn_table(v.points, v.points, k, true);
  return v;
}

std::size_t requested_count(const Dataset& data, const SamplerConfig& config) {
  if (!(config.overgen_ratio > 0.0)) throw Error(ErrorCode::kInvalidArgument, "overgen_ratio must be positive");
  const auto s = class_stats(data);
  return target_candidate_count(s.n_pos, s.n_total - s.n_pos, config.overgen_ratio);
}

class CandidateBuilder {
 public:
  CandidateBuilder(const MinorityView& view, SamplerMethod method, std::size_t reserve) : view_(view) {
    out_.points = Matrix(0, view.points.cols());
    out_.points.reserve_rows(reserve);
    out_.minority_rows = view.rows;
    out_.method = method;
    row_.resize(view.points.cols());
  }

  void add(std::size_t a, std::size_t b, double gap) {
    const auto pa = view_.points.row(a);
    const auto pb = view_.points.row(b);
    for (std::size_t j = 0; j < row_.size(); ++j) row_[j] = pa[j] + gap * (pb[j] - pa[j]);
    out_.points.append_row(row_);
    out_.parent_a.push_back(a);
    out_.parent_b.push_back(b);
    out_.gap.push_back(gap);
  }

  CandidateSet take() { return std::move(out_); }

 private:
  const MinorityView& view_;
  CandidateSet out_;
  std::vector<double> row_;
};

// Uniform draw order per candidate: base (when random), neighbour slot, gap.
double draw_gap(Rng& rng, const SamplerConfig& config) {
  const double u = rng.uniform();
  return config.fixed_gap ? *config.fixed_gap : u;
}

CandidateSet smote_from_view(const MinorityView& view, const SamplerConfig& config, std::size_t m,
                             SamplerMethod method) {
  Rng rng(config.seed);
  CandidateBuilder builder(view, method, m);
  for (std::size_t c = 0; c < m; ++c) {
    const std::size_t base = rng.index(view.rows.size());
    const std::size_t nb = view.neighbors.neighbors(base)[rng.index(config.k_neighbors)];
    builder.add(base, nb, draw_gap(rng, config));
  }
  return builder.take();
}

}  // namespace

CandidateSet smote_generate(const Dataset& data, const SamplerConfig& config) {
  const auto view = minority_view(data, config.k_neighbors);
  return smote_from_view(view, config, requested_count(data, config), SamplerMethod::kSmote);
}

CandidateSet adasyn_generate(const Dataset& data, const SamplerConfig& config) {
  const auto view = minority_view(data, config.k_neighbors);
  const std::size_t m = requested_count(data, config);
  const auto r = majority_fractions(data, view.rows, config.k_neighbors);
  if (std::all_of(r.begin(), r.end(), [](double v) { return v == 0.0; })) {
    auto out = smote_from_view(view, config, m, SamplerMethod::kAdasyn);
    out.fallback = "all_safe";
    return out;
  }
  const auto counts = largest_remainder(r, m);
  Rng rng(config.seed);
  CandidateBuilder builder(view, SamplerMethod::kAdasyn, m);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t c = 0; c < counts[i]; ++c) {
      const std::size_t nb = view.neighbors.neighbors(i)[rng.index(config.k_neighbors)];
      builder.add(i, nb, draw_gap(rng, config));
    }
  }
  return builder.take();
}

CandidateSet borderline_generate(const Dataset& data, const SamplerConfig& config) {
  const auto view = minority_view(data, config.k_neighbors);
  const std::size_t m = requested_count(data, config);
  const auto r = majority_fractions(data, view.rows, config.k_neighbors);
  std::vector<std::size_t> danger;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (categorize(r[i]) == MinorityCategory::kDanger) danger.push_back(i);
  if (danger.empty()) {
    auto out = smote_from_view(view, config, m, SamplerMethod::kBorderline);
    out.fallback = "empty_danger_set";
    return out;
  }
  Rng rng(config.seed);
  CandidateBuilder builder(view, SamplerMethod::kBorderline, m);
  for (std::size_t c = 0; c < m; ++c) {
    const std::size_t base = danger[rng.index(danger.size())];
    const std::size_t nb = view.neighbors.neighbors(base)[rng.index(config.k_neighbors)];
    builder.add(base, nb, draw_gap(rng, config));
  }
  return builder.take();
}

CandidateSet svm_smote_generate(const Dataset& data, const SamplerConfig& config, const LinearMaxMarginModel& svm) {
  const auto view = minority_view(data, config.k_neighbors);
  const std::size_t m = requested_count(data, config);
  const std::vector<int> plus(view.rows.size(), 1);
  const auto support = svm.support_set(view.points, plus, config.support_tolerance);
  if (support.empty()) {
    auto out = smote_from_view(view, config, m, SamplerMethod::kSvmSmote);
    out.fallback = "no_support_vectors";
    return out;
  }
  const auto r = majority_fractions(data, view.rows, config.k_neighbors);
  Rng rng(config.seed);
  CandidateBuilder builder(view, SamplerMethod::kSvmSmote, m);
  for (std::size_t c = 0; c < m; ++c) {
    const std::size_t base = support[rng.index(support.size())];
    const std::size_t nb = view.neighbors.neighbors(base)[rng.index(config.k_neighbors)];
    const double u = draw_gap(rng, config);
    // Mostly-minority neighbourhood: interpolate. Otherwise step away from
    // the neighbour, at most half a segment past the base.
    builder.add(base, nb, r[base] < 0.5 ? u : -0.5 * u);
  }
  return builder.take();
}

CandidateSet generate_candidates(const Dataset& data, const SamplerConfig& config) {
  switch (config.method) {
    case SamplerMethod::kNone: {
      CandidateSet empty;
      empty.points = Matrix(0, data.dim());
      return empty;
    }
    case SamplerMethod::kSmote: return smote_generate(data, config);
    case SamplerMethod::kAdasyn: return adasyn_generate(data, config);
    case SamplerMethod::kBorderline: return borderline_generate(data, config);
    case SamplerMethod::kSvmSmote: {
      const auto svm = fit_linear_svm(data.features, to_plus_minus(data.labels), config.svm_lambda,
                                      config.svm_epochs, derive_seed(config.seed, {0x5f3}));
      return svm_smote_generate(data, config, svm);
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unhandled sampler method");
}

void write_candidates_csv(const CandidateSet& candidates, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (std::size_t j = 0; j < candidates.points.cols(); ++j) out << 'f' << j << ',';
  out << "parent_a,parent_b,gap\n";
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (double v : candidates.points.row(i)) out << format_real(v) << ',';
    out << candidates.parent_a[i] << ',' << candidates.parent_b[i] << ',' << format_real(candidates.gap[i]) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace afsmote
