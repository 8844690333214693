#pragma once
// Slow, obviously-correct reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "afsmote/evaluation.hpp"
#include "afsmote/matrix.hpp"

namespace afsmote::oracle {

/// O(n^2) Mann-Whitney pair count with half credit for ties.
inline double auroc_pairs(std::span<const double> s, std::span<const int> y) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      ++pairs;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

/// Recounts precision and recall at every distinct score (predict s >= t)
/// and sums (R_k - R_{k-1}) P_k from the highest cut down.
inline double ap_by_thresholds(std::span<const double> s, std::span<const int> y) {
  std::set<double, std::greater<>> cuts(s.begin(), s.end());
  const double n_pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
  double ap = 0.0, prev_recall = 0.0;
  for (const double t : cuts) {
    double tp = 0.0, pp = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) {
        pp += 1.0;
        tp += y[i];
      }
    }
    const double recall = tp / n_pos;
    ap += (recall - prev_recall) * (tp / pp);
    prev_recall = recall;
  }
  return ap;
}

/// Isotonic least squares by exhaustive search: group equal scores, try every
/// partition of the groups into contiguous blocks, keep the best one whose
/// block means are non-decreasing. Returns the fitted value of each input.
inline std::vector<double> isotonic_by_partitions(std::span<const double> s, std::span<const int> y) {
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] < s[b]; });
  std::vector<double> gsum, gcnt;
  std::vector<std::size_t> group_of(s.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || s[order[i]] != s[order[i - 1]]) {
      gsum.push_back(0.0);
      gcnt.push_back(0.0);
    }
    gsum.back() += y[order[i]];
    gcnt.back() += 1.0;
    group_of[order[i]] = gsum.size() - 1;
  }
  const std::size_t m = gsum.size();
  double best_sse = std::numeric_limits<double>::infinity();
  std::vector<double> best_group_value;
  for (std::size_t mask = 0; mask < (std::size_t{1} << (m - 1)); ++mask) {
    std::vector<double> value(m);
    double prev = -1.0, sse = 0.0;
    bool monotone = true;
    std::size_t start = 0;
    for (std::size_t g = 0; g < m; ++g) {
      const bool cut_after = g == m - 1 || ((mask >> g) & 1U);
      if (!cut_after) continue;
      double sum = 0.0, cnt = 0.0;
      for (std::size_t h = start; h <= g; ++h) {
        sum += gsum[h];
        cnt += gcnt[h];
      }
      const double mean = sum / cnt;
      if (mean < prev) monotone = false;
      prev = mean;
      for (std::size_t h = start; h <= g; ++h) value[h] = mean;
      start = g + 1;
    }
    if (!monotone) continue;
    for (std::size_t i = 0; i < s.size(); ++i) sse += (y[i] - value[group_of[i]]) * (y[i] - value[group_of[i]]);
    if (sse < best_sse - 1e-15) {
      best_sse = sse;
      best_group_value = value;
    }
  }
  std::vector<double> fitted(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) fitted[i] = best_group_value[group_of[i]];
  return fitted;
}

struct ScanResult {
  std::vector<double> candidates;
  OperatingPoint chosen;
};

/// Enumerates candidate thresholds from scratch and applies the selection
/// rule as set maxima (not as a running comparison).
inline ScanResult threshold_scan(std::span<const double> p, std::span<const int> y, double p0) {
  std::set<double> distinct(p.begin(), p.end());
  std::set<double> cand{0.0, 1.0};
  for (auto it = distinct.begin(); std::next(it) != distinct.end(); ++it) cand.insert(0.5 * (*it + *std::next(it)));

  std::vector<OperatingPoint> ops;
  for (const double t : cand) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const bool pred = p[i] >= t;
      if (pred && y[i] == 1) tp += 1;
      if (pred && y[i] == 0) fp += 1;
      if (!pred && y[i] == 1) fn += 1;
    }
    const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f1 = prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    ops.push_back({t, prec, rec, f1, prec >= p0});
  }

  ScanResult r;
  r.candidates.assign(cand.begin(), cand.end());
  const bool any_feasible = std::any_of(ops.begin(), ops.end(), [](const auto& o) { return o.feasible; });
  std::vector<OperatingPoint> pool;
  if (any_feasible) {
    double best_f1 = -1.0;
    for (const auto& o : ops)
      if (o.feasible) best_f1 = std::max(best_f1, o.f1);
    for (const auto& o : ops)
      if (o.feasible && o.f1 == best_f1) pool.push_back(o);
  } else {
    double best_p = -1.0;
    for (const auto& o : ops) best_p = std::max(best_p, o.precision);
    double best_f1 = -1.0;
    for (const auto& o : ops)
      if (o.precision == best_p) best_f1 = std::max(best_f1, o.f1);
    for (const auto& o : ops)
      if (o.precision == best_p && o.f1 == best_f1) pool.push_back(o);
  }
  r.chosen = *std::max_element(pool.begin(), pool.end(),
                               [](const auto& a, const auto& b) { return a.threshold < b.threshold; });
  r.chosen.feasible = any_feasible;
  return r;
}

/// Cyclic Jacobi eigensolver for a symmetric matrix. Eigenvalues descending,
/// eigenvectors as matching columns.
inline std::pair<std::vector<double>, Matrix> jacobi_eigen(Matrix a) {
  const std::size_t n = a.rows();
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
  std::vector<double> values(n);
  Matrix vectors(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) vectors(r, c) = v(r, order[c]);
  }
  return {values, vectors};
}

/// Sample covariance (divisor n - 1).
inline Matrix covariance(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) mean[c] += x(r, c) / static_cast<double>(n);
  Matrix cov(d, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov(i, j) += (x(r, i) - mean[i]) * (x(r, j) - mean[j]);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) cov(i, j) /= static_cast<double>(n - 1);
  return cov;
}

inline std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                              std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double up = f(x);
    x[i] = xi - h;
    const double down = f(x);
    x[i] = xi;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Indices of the k nearest rows by full sort on (distance, index).
inline std::vector<std::size_t> knn_by_sort(const Matrix& ref, std::span<const double> q, std::size_t k,
                                            std::optional<std::size_t> exclude) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < ref.rows(); ++i) {
    if (exclude && *exclude == i) continue;
    double s = 0.0;
    for (std::size_t c = 0; c < ref.cols(); ++c) s += (ref(i, c) - q[c]) * (ref(i, c) - q[c]);
    d.emplace_back(s, i);
  }
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(d[i].second);
  return out;
}

}  // namespace afsmote::oracle
