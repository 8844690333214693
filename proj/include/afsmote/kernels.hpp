#pragma once

// Data-parallel hot loops. Each kernel has an OpenMP implementation in
// `kernels::` and a plain loop in `kernels::serial::` that the tests use as
// the reference; both must produce bit-identical results.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "afsmote/matrix.hpp"

namespace afsmote::kernels {

/// k nearest reference rows for each query row, flattened row-major.
struct NeighborTable {
  std::size_t k = 0;
  std::vector<std::size_t> index;
  std::vector<double> dist;

  std::size_t queries() const { return k == 0 ? 0 : index.size() / k; }
  std::span<const std::size_t> neighbors(std::size_t q) const { return {index.data() + q * k, k}; }
  std::span<const double> distances(std::size_t q) const { return {dist.data() + q * k, k}; }
};

/// Euclidean kNN of one query. Ties on distance go to the lower index.
/// `exclude` drops one reference row (the query itself when it is a member).
void knn_single(const Matrix& reference, std::span<const double> query, std::size_t k,
                std::optional<std::size_t> exclude, std::span<std::size_t> out_index,
                std::span<double> out_dist);

/// kNN for every query. With `self_exclude`, queries are the reference rows
/// and query i never returns reference row i.
NeighborTable knn_table(const Matrix& reference, const Matrix& queries, std::size_t k, bool self_exclude);

/// kNN of the listed reference rows among all other reference rows.
NeighborTable knn_of_rows(const Matrix& reference, std::span<const std::size_t> rows, std::size_t k);

using Statistic = std::function<double(std::span<const double> scores, std::span<const int> labels)>;

struct Replicates {
  std::vector<double> values;      // NaN where the statistic could not be evaluated
  std::size_t exhausted_redraws = 0;  // resamples still single-class after the redraw cap
};

inline constexpr int kMaxRedraws = 10;

/// Bootstrap replicates of `stat`. Resample b draws from its own stream
/// seeded by derive_seed(seed, {b}); a resample missing a class is redrawn up
/// to kMaxRedraws times.
Replicates bootstrap_replicates(const Statistic& stat, std::span<const double> scores,
                                std::span<const int> labels, std::size_t n_resamples, std::uint64_t seed,
                                bool stratified);

/// Leave-one-out values of `stat`.
std::vector<double> jackknife_values(const Statistic& stat, std::span<const double> scores,
                                     std::span<const int> labels);

namespace serial {

NeighborTable knn_table(const Matrix& reference, const Matrix& queries, std::size_t k, bool self_exclude);
NeighborTable knn_of_rows(const Matrix& reference, std::span<const std::size_t> rows, std::size_t k);

Replicates bootstrap_replicates(const Statistic& stat, std::span<const double> scores,
                                std::span<const int> labels, std::size_t n_resamples, std::uint64_t seed,
                                bool stratified);

std::vector<double> jackknife_values(const Statistic& stat, std::span<const double> scores,
                                     std::span<const int> labels);

}  // namespace serial

}  // namespace afsmote::kernels
