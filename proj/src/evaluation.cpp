#include "afsmote/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "afsmote/dataset.hpp"
#include "afsmote/error.hpp"

namespace afsmote {

namespace {

void check_same_length(std::span<const double> a, std::span<const int> y, const char* who) {
  if (a.size() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(who) + ": scores and labels differ in length");
  }
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

Confusion confusion_at(std::span<const double> probs, std::span<const int> labels, double t) {
  check_same_length(probs, labels, "confusion_at");
  Confusion c;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred = probs[i] >= t;
    if (labels[i] == 1) (pred ? c.tp : c.fn)++;
    else (pred ? c.fp : c.tn)++;
  }
  return c;
}

double f_beta_score(double precision, double recall, double beta) {
  const double b2 = beta * beta;
  const double den = b2 * precision + recall;
  return den > 0.0 ? (1.0 + b2) * precision * recall / den : 0.0;
}

PrfMetrics prf_metrics(const Confusion& c, double beta) {
  PrfMetrics m;
  const auto tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const auto tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = f_beta_score(m.precision, m.recall, 1.0);
  m.f_beta = f_beta_score(m.precision, m.recall, beta);
  m.balanced_accuracy = 0.5 * (m.recall + ratio(tn, tn + fp));
  return m;
}

double f_tilde_beta(std::span<const double> probs, std::span<const int> labels, double t, double beta, double pi1) {
  check_same_length(probs, labels, "f_tilde_beta");
  require_both_classes(labels, "f_tilde_beta");
  double num = 0.0, neg_hits = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool hit = probs[i] >= t;
    if (labels[i] == 1) {
      ++n_pos;
      if (hit) num += probs[i];
    } else {
      ++n_neg;
      if (hit) neg_hits += 1.0;
    }
  }
  const double b2 = beta * beta;
  const double e_pos = num / static_cast<double>(n_pos);
  const double e_neg = neg_hits / static_cast<double>(n_neg);
  return (1.0 + b2) * pi1 * e_pos / (b2 * pi1 + (1.0 - pi1) * e_neg);
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_same_length(scores, labels, "auroc");
  require_both_classes(labels, "auroc");
  std::vector<double> neg;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (labels[i] == 0) neg.push_back(scores[i]);
  std::sort(neg.begin(), neg.end());
  // Twice the Mann-Whitney count is an integer, so the sum is exact.
  std::uint64_t twice_u = 0;
  std::uint64_t n_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    ++n_pos;
    const auto lo = std::lower_bound(neg.begin(), neg.end(), scores[i]);
    const auto hi = std::upper_bound(lo, neg.end(), scores[i]);
    twice_u += 2 * static_cast<std::uint64_t>(lo - neg.begin()) + static_cast<std::uint64_t>(hi - lo);
  }
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(neg.size()));
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  check_same_length(scores, labels, "average_precision");
  require_both_classes(labels, "average_precision");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const auto total_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  double ap = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? tp : fp)++;
      ++j;
    }
    const double recall = static_cast<double>(tp) / total_pos;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double brier(std::span<const double> probs, std::span<const int> labels) {
  check_same_length(probs, labels, "brier");
  if (probs.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double d = labels[i] - probs[i];
    s += d * d;
  }
  return s / static_cast<double>(probs.size());
}

std::size_t bin_index(double p, std::size_t n_bins) {
  if (!(p > 0.0)) return 0;
  const auto b = static_cast<std::size_t>(std::floor(p * static_cast<double>(n_bins)));
  return std::min(b, n_bins - 1);
}

CalibrationErrors ece_mce(std::span<const double> probs, std::span<const int> labels, std::size_t n_bins) {
  check_same_length(probs, labels, "ece_mce");
  if (n_bins == 0) throw Error(ErrorCode::kInvalidArgument, "ece_mce needs n_bins >= 1");
  std::vector<double> sum_p(n_bins, 0.0), sum_y(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto b = bin_index(probs[i], n_bins);
    sum_p[b] += probs[i];
    sum_y[b] += labels[i];
    ++count[b];
  }
  CalibrationErrors e;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (count[b] == 0) continue;
    const auto c = static_cast<double>(count[b]);
    const double gap = std::abs(sum_p[b] / c - sum_y[b] / c);
    e.ece += c / static_cast<double>(probs.size()) * gap;
    e.mce = std::max(e.mce, gap);
  }
  return e;
}

// ---- threshold selection -------------------------------------------------

std::vector<double> threshold_candidates(std::span<const double> probs) {
  std::vector<double> u(probs.begin(), probs.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  std::vector<double> c{0.0, 1.0};
  for (std::size_t i = 0; i + 1 < u.size(); ++i) c.push_back(0.5 * (u[i] + u[i + 1]));
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

OperatingPoint select_threshold(std::span<const double> probs, std::span<const int> labels, double p0) {
  check_same_length(probs, labels, "select_threshold");
  require_both_classes(labels, "select_threshold");
  if (!(p0 > 0.0 && p0 < 1.0)) throw Error(ErrorCode::kInvalidArgument, "precision floor must lie in (0, 1)");

  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < probs.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(probs[i]);
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  auto at_least = [](const std::vector<double>& v, double t) {
    return static_cast<std::size_t>(v.end() - std::lower_bound(v.begin(), v.end(), t));
  };

  std::optional<OperatingPoint> best_feasible, best_fallback;
  for (double t : threshold_candidates(probs)) {
    Confusion c;
    c.tp = at_least(pos, t);
    c.fn = pos.size() - c.tp;
    c.fp = at_least(neg, t);
    c.tn = neg.size() - c.fp;
    const auto m = prf_metrics(c);
    const OperatingPoint op{t, m.precision, m.recall, m.f1, m.precision >= p0};
    // Candidates ascend, so >= keeps the higher threshold on ties.
    if (op.feasible && (!best_feasible || op.f1 >= best_feasible->f1)) best_feasible = op;
    if (!best_fallback || op.precision > best_fallback->precision ||
        (op.precision == best_fallback->precision && op.f1 >= best_fallback->f1)) {
      best_fallback = op;
    }
  }
  if (best_feasible) return *best_feasible;
  auto op = *best_fallback;
  op.feasible = false;
  return op;
}

// ---- bootstrap -----------------------------------------------------------

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  static const boost::math::normal standard;
  return boost::math::quantile(standard, p);
}

double empirical_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  q = std::clamp(q, 0.0, 1.0);
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

void drop_nan_and_sort(std::vector<double>& v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  std::sort(v.begin(), v.end());
}

}  // namespace

Interval percentile_interval(std::vector<double> replicates, double confidence) {
  drop_nan_and_sort(replicates);
  const double alpha = 1.0 - confidence;
  Interval out;
  out.lo = empirical_quantile(replicates, 0.5 * alpha);
  out.hi = empirical_quantile(replicates, 1.0 - 0.5 * alpha);
  return out;
}

Interval bca_with_parameters(std::vector<double> replicates, double z0, double acceleration, double confidence) {
  drop_nan_and_sort(replicates);
  const double alpha = 1.0 - confidence;
  Interval out;
  out.z0 = z0;
  out.acceleration = acceleration;
  double q_lo = 0.5 * alpha, q_hi = 1.0 - 0.5 * alpha;
  if (z0 != 0.0 || acceleration != 0.0) {
    auto adjust = [&](double q) {
      const double zq = normal_quantile(q);
      const double s = z0 + zq;
      return normal_cdf(z0 + s / (1.0 - acceleration * s));
    };
    q_lo = adjust(q_lo);
    q_hi = adjust(q_hi);
  }
  out.lo = empirical_quantile(replicates, q_lo);
  out.hi = empirical_quantile(replicates, q_hi);
  return out;
}

Interval bca_from_replicates(double point, std::vector<double> replicates, std::span<const double> jackknife,
                             double confidence) {
  drop_nan_and_sort(replicates);
  Interval out;
  if (replicates.empty() || replicates.front() == replicates.back()) {
    out.lo = out.hi = point;
    out.degenerate = true;
    return out;
  }
  const auto b = static_cast<double>(replicates.size());
  const auto below = static_cast<double>(std::lower_bound(replicates.begin(), replicates.end(), point) -
                                         replicates.begin());
  const auto equal = static_cast<double>(std::upper_bound(replicates.begin(), replicates.end(), point) -
                                         std::lower_bound(replicates.begin(), replicates.end(), point));
  const double prop = std::clamp((below + 0.5 * equal) / b, 0.5 / b, 1.0 - 0.5 / b);
  const double z0 = normal_quantile(prop);

  double mean = 0.0;
  std::size_t m = 0;
  for (double v : jackknife)
    if (!std::isnan(v)) {
      mean += v;
      ++m;
    }
  double a = 0.0;
  if (m > 1) {
    mean /= static_cast<double>(m);
    double s2 = 0.0, s3 = 0.0;
    for (double v : jackknife) {
      if (std::isnan(v)) continue;
      const double d = mean - v;
      s2 += d * d;
      s3 += d * d * d;
    }
    if (s2 > 0.0) a = s3 / (6.0 * std::pow(s2, 1.5));
  }
  return bca_with_parameters(std::move(replicates), z0, a, confidence);
}

Interval bca_bootstrap(const kernels::Statistic& statistic, std::span<const double> probs,
                       std::span<const int> labels, const BootstrapConfig& config) {
  check_same_length(probs, labels, "bca_bootstrap");
  if (probs.size() < 10) throw Error(ErrorCode::kInvalidArgument, "bca_bootstrap needs n >= 10");
  const double point = statistic(probs, labels);
  auto reps = kernels::bootstrap_replicates(statistic, probs, labels, config.n_resamples, config.seed,
                                            config.stratified);
  const auto jack = kernels::jackknife_values(statistic, probs, labels);
  auto out = bca_from_replicates(point, std::move(reps.values), jack, config.confidence);
  out.exhausted_redraws = reps.exhausted_redraws;
  out.few_resamples = config.n_resamples < kMinResamplesForBca;
  return out;
}

// ---- DeLong --------------------------------------------------------------

namespace {

// Structural components: v10[i] for positives, v01[j] for negatives.
void structural_components(std::span<const double> s, std::span<const int> y, std::vector<double>& v10,
                           std::vector<double>& v01) {
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < s.size(); ++i) (y[i] == 1 ? pos : neg).push_back(s[i]);
  std::vector<double> sp = pos, sn = neg;
  std::sort(sp.begin(), sp.end());
  std::sort(sn.begin(), sn.end());
  v10.resize(pos.size());
  v01.resize(neg.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const auto lo = std::lower_bound(sn.begin(), sn.end(), pos[i]);
    const auto hi = std::upper_bound(lo, sn.end(), pos[i]);
    v10[i] = (static_cast<double>(lo - sn.begin()) + 0.5 * static_cast<double>(hi - lo)) /
             static_cast<double>(sn.size());
  }
  for (std::size_t j = 0; j < neg.size(); ++j) {
    const auto lo = std::lower_bound(sp.begin(), sp.end(), neg[j]);
    const auto hi = std::upper_bound(lo, sp.end(), neg[j]);
    v01[j] = (static_cast<double>(sp.end() - hi) + 0.5 * static_cast<double>(hi - lo)) /
             static_cast<double>(sp.size());
  }
}

double covariance(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  if (a.size() < 2) return 0.0;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / (n - 1.0);
}

}  // namespace

DeLongResult delong_test(std::span<const double> scores_a, std::span<const double> scores_b,
                         std::span<const int> labels) {
  check_same_length(scores_a, labels, "delong_test");
  check_same_length(scores_b, labels, "delong_test");
  require_both_classes(labels, "delong_test");
  std::vector<double> a10, a01, b10, b01;
  structural_components(scores_a, labels, a10, a01);
  structural_components(scores_b, labels, b10, b01);

  DeLongResult r;
  r.auc_a = auroc(scores_a, labels);
  r.auc_b = auroc(scores_b, labels);
  const auto m = static_cast<double>(a10.size());
  const auto n = static_cast<double>(a01.size());
  r.var_a = covariance(a10, a10) / m + covariance(a01, a01) / n;
  r.var_b = covariance(b10, b10) / m + covariance(b01, b01) / n;
  r.cov_ab = covariance(a10, b10) / m + covariance(a01, b01) / n;
  const double var_diff = r.var_a + r.var_b - 2.0 * r.cov_ab;
  const double diff = r.auc_a - r.auc_b;
  if (!(var_diff > 1e-300)) {
    if (diff == 0.0) {
      r.z = 0.0;
      r.p_value = 1.0;
    } else {
      r.z = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
      r.zero_variance_unequal = true;
    }
    return r;
  }
  r.z = diff / std::sqrt(var_diff);
  r.p_value = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  return r;
}

// ---- report --------------------------------------------------------------

std::string beta_key(double beta) {
  std::ostringstream os;
  os << beta;
  auto s = os.str();
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

std::map<std::string, double> MetricReport::scalars() const {
  std::map<std::string, double> out{{"threshold", threshold},
                                    {"recall", recall},
                                    {"precision", precision},
                                    {"f1", f1},
                                    {"auroc", auroc},
                                    {"average_precision", average_precision},
                                    {"balanced_accuracy", balanced_accuracy},
                                    {"brier", brier},
                                    {"ece", ece},
                                    {"mce", mce}};
  for (const auto& [b, v] : f_beta) out["f_beta_" + beta_key(b)] = v;
  for (const auto& [b, v] : f_tilde_beta) out["f_tilde_beta_" + beta_key(b)] = v;
  if (delong_p) out["delong_p"] = *delong_p;
  return out;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : scalars()) j[k] = v;
  j["threshold_feasible"] = threshold_feasible;
  for (const auto& [name, iv] : intervals) j[name + "_ci"] = {iv.first, iv.second};
  return j;
}

MetricReport evaluate_at(std::span<const double> probs, std::span<const int> labels, double t,
                         std::span<const double> betas, std::size_t n_bins) {
  MetricReport r;
  r.threshold = t;
  const auto c = confusion_at(probs, labels, t);
  const auto m = prf_metrics(c);
  r.precision = m.precision;
  r.recall = m.recall;
  r.f1 = m.f1;
  r.balanced_accuracy = m.balanced_accuracy;
  const double pi1 = class_stats(labels).pi1;
  for (double b : betas) {
    r.f_beta[b] = f_beta_score(m.precision, m.recall, b);
    r.f_tilde_beta[b] = f_tilde_beta(probs, labels, t, b, pi1);
  }
  r.auroc = auroc(probs, labels);
  r.average_precision = average_precision(probs, labels);
  r.brier = brier(probs, labels);
  const auto e = ece_mce(probs, labels, n_bins);
  r.ece = e.ece;
  r.mce = e.mce;
  return r;
}

}  // namespace afsmote
