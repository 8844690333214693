#include "afsmote/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "afsmote/error.hpp"
#include "afsmote/rng.hpp"

namespace afsmote::kernels {

namespace {

void check_knn_args(const Matrix& reference, std::size_t query_dim, std::size_t k, bool excluding) {
  if (reference.cols() != query_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "query dimension differs from reference");
  }
  const std::size_t available = reference.rows() - (excluding && reference.rows() > 0 ? 1 : 0);
  if (k > available) {
    throw Error(ErrorCode::kKTooLarge, "k=" + std::to_string(k) + " exceeds " + std::to_string(available) +
                                           " available rows");
  }
}

// One resample: indices drawn with replacement (optionally within class).
std::vector<std::size_t> draw_indices(Rng& rng, std::span<const int> labels,
                                      std::span<const std::size_t> pos, std::span<const std::size_t> neg,
                                      bool stratified) {
  const std::size_t n = labels.size();
  std::vector<std::size_t> idx(n);
  if (stratified) {
    std::size_t j = 0;
    for (std::size_t i = 0; i < pos.size(); ++i) idx[j++] = pos[rng.index(pos.size())];
    for (std::size_t i = 0; i < neg.size(); ++i) idx[j++] = neg[rng.index(neg.size())];
  } else {
    for (auto& i : idx) i = rng.index(n);
  }
  return idx;
}

// Evaluates resample b into values[b]; returns true when the redraw cap was hit.
bool one_replicate(const Statistic& stat, std::span<const double> scores, std::span<const int> labels,
                   std::span<const std::size_t> pos, std::span<const std::size_t> neg, std::uint64_t seed,
                   std::size_t b, bool stratified, double& value) {
  Rng rng(derive_seed(seed, {b}));
  std::vector<double> s(labels.size());
  std::vector<int> y(labels.size());
  bool both = false;
  for (int attempt = 0; attempt < kMaxRedraws && !both; ++attempt) {
    const auto idx = draw_indices(rng, labels, pos, neg, stratified);
    int seen = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      s[i] = scores[idx[i]];
      y[i] = labels[idx[i]];
      seen |= (y[i] == 1 ? 1 : 2);
    }
    both = seen == 3;
  }
  try {
    value = stat(s, y);
  } catch (const Error&) {
    value = std::numeric_limits<double>::quiet_NaN();
  }
  return !both;
}

void split_classes(std::span<const int> labels, std::vector<std::size_t>& pos, std::vector<std::size_t>& neg) {
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
}

double one_jackknife(const Statistic& stat, std::span<const double> scores, std::span<const int> labels,
                     std::size_t drop) {
  std::vector<double> s;
  std::vector<int> y;
  s.reserve(scores.size() - 1);
  y.reserve(scores.size() - 1);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == drop) continue;
    s.push_back(scores[i]);
    y.push_back(labels[i]);
  }
  try {
    return stat(s, y);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

void knn_single(const Matrix& reference, std::span<const double> query, std::size_t k,
                std::optional<std::size_t> exclude, std::span<std::size_t> out_index,
                std::span<double> out_dist) {
  check_knn_args(reference, query.size(), k, exclude.has_value());
  if (k == 0) return;
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(reference.rows());
  for (std::size_t r = 0; r < reference.rows(); ++r) {
    if (exclude && *exclude == r) continue;
    cand.emplace_back(squared_distance(reference.row(r), query), r);
  }
  std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k - 1), cand.end());
  std::sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k));
  for (std::size_t j = 0; j < k; ++j) {
    out_index[j] = cand[j].second;
    out_dist[j] = std::sqrt(cand[j].first);
  }
}

NeighborTable knn_table(const Matrix& reference, const Matrix& queries, std::size_t k, bool self_exclude) {
  check_knn_args(reference, queries.cols(), k, self_exclude);
  NeighborTable t;
  t.k = k;
  t.index.resize(queries.rows() * k);
  t.dist.resize(queries.rows() * k);
  const auto n = static_cast<std::ptrdiff_t>(queries.rows());
#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    const auto uq = static_cast<std::size_t>(q);
    knn_single(reference, queries.row(uq), k, self_exclude ? std::optional<std::size_t>(uq) : std::nullopt,
               {t.index.data() + uq * k, k}, {t.dist.data() + uq * k, k});
  }
  return t;
}

NeighborTable knn_of_rows(const Matrix& reference, std::span<const std::size_t> rows, std::size_t k) {
  check_knn_args(reference, reference.cols(), k, true);
  NeighborTable t;
  t.k = k;
  t.index.resize(rows.size() * k);
  t.dist.resize(rows.size() * k);
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    const auto uq = static_cast<std::size_t>(q);
    knn_single(reference, reference.row(rows[uq]), k, rows[uq], {t.index.data() + uq * k, k},
               {t.dist.data() + uq * k, k});
  }
  return t;
}

Replicates bootstrap_replicates(const Statistic& stat, std::span<const double> scores,
                                std::span<const int> labels, std::size_t n_resamples, std::uint64_t seed,
                                bool stratified) {
  std::vector<std::size_t> pos, neg;
  split_classes(labels, pos, neg);
  Replicates out;
  out.values.resize(n_resamples);
  std::size_t exhausted = 0;
  const auto n = static_cast<std::ptrdiff_t>(n_resamples);
#pragma omp parallel for schedule(dynamic, 8) reduction(+ : exhausted)
  for (std::ptrdiff_t b = 0; b < n; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    if (one_replicate(stat, scores, labels, pos, neg, seed, ub, stratified, out.values[ub])) ++exhausted;
  }
  out.exhausted_redraws = exhausted;
  return out;
}

std::vector<double> jackknife_values(const Statistic& stat, std::span<const double> scores,
                                     std::span<const int> labels) {
  std::vector<double> out(scores.size());
  const auto n = static_cast<std::ptrdiff_t>(scores.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = one_jackknife(stat, scores, labels, static_cast<std::size_t>(i));
  }
  return out;
}

namespace serial {

NeighborTable knn_table(const Matrix& reference, const Matrix& queries, std::size_t k, bool self_exclude) {
  check_knn_args(reference, queries.cols(), k, self_exclude);
  NeighborTable t;
  t.k = k;
  t.index.resize(queries.rows() * k);
  t.dist.resize(queries.rows() * k);
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    knn_single(reference, queries.row(q), k, self_exclude ? std::optional<std::size_t>(q) : std::nullopt,
               {t.index.data() + q * k, k}, {t.dist.data() + q * k, k});
  }
  return t;
}

NeighborTable knn_of_rows(const Matrix& reference, std::span<const std::size_t> rows, std::size_t k) {
  check_knn_args(reference, reference.cols(), k, true);
  NeighborTable t;
  t.k = k;
  t.index.resize(rows.size() * k);
  t.dist.resize(rows.size() * k);
  for (std::size_t q = 0; q < rows.size(); ++q) {
    knn_single(reference, reference.row(rows[q]), k, rows[q], {t.index.data() + q * k, k},
               {t.dist.data() + q * k, k});
  }
  return t;
}

Replicates bootstrap_replicates(const Statistic& stat, std::span<const double> scores,
                                std::span<const int> labels, std::size_t n_resamples, std::uint64_t seed,
                                bool stratified) {
  std::vector<std::size_t> pos, neg;
  split_classes(labels, pos, neg);
  Replicates out;
  out.values.resize(n_resamples);
  for (std::size_t b = 0; b < n_resamples; ++b) {
    if (one_replicate(stat, scores, labels, pos, neg, seed, b, stratified, out.values[b])) {
      ++out.exhausted_redraws;
    }
  }
  return out;
}

std::vector<double> jackknife_values(const Statistic& stat, std::span<const double> scores,
                                     std::span<const int> labels) {
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = one_jackknife(stat, scores, labels, i);
  return out;
}

}  // namespace serial

}  // namespace afsmote::kernels
