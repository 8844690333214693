#include "afsmote/filter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "afsmote/dataset.hpp"
#include "afsmote/error.hpp"
#include "afsmote/kernels.hpp"
#include "afsmote/rng.hpp"

namespace afsmote {

namespace {

void require_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, std::string("filter.") + name + " must lie in [0, 1]");
  }
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

void FilterConfig::validate() const {
  require_unit(lambda, "lambda");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::kInvalidArgument, "filter.tau must be >= 0");
  require_unit(eta, "eta");
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "filter.alpha must be positive");
  if (top_k && *top_k == 0) throw Error(ErrorCode::kInvalidArgument, "filter.top_k must be positive when set");
  if (density_k == 0) throw Error(ErrorCode::kInvalidArgument, "filter.density_k must be positive");
  if (extended_fusion) {
    double sum = 0.0;
    for (double w : head_weights) {
      if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "filter.head_weights must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::kInvalidArgument, "filter.head_weights must sum to 1");
  }
}

// ---- discriminator -------------------------------------------------------

Discriminator train_discriminator(const Matrix& real_minority, const Matrix& candidates, std::uint64_t seed,
                                  const DiscriminatorOptions& options) {
  const std::size_t n_real = real_minority.rows(), n_syn = candidates.rows();
  if (n_real < kMinDiscriminatorRows || n_syn < kMinDiscriminatorRows) {
    throw Error(ErrorCode::kTooFewSamples, "discriminator needs >= 5 real and >= 5 synthetic rows, have " +
                                               std::to_string(n_real) + " and " + std::to_string(n_syn));
  }
  if (real_minority.cols() != candidates.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "discriminator inputs differ in width");
  }
  const Matrix all = vstack(real_minority, candidates);
  std::vector<int> labels(n_real + n_syn, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_real), 1);
  // Identical rows share a side of the split so a copied candidate cannot be
  // scored against its own training twin. Without duplicates this is the
  // plain stratified carve.
  std::map<std::vector<double>, std::vector<std::size_t>> groups;
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < all.rows(); ++i) {
    const auto r = all.row(i);
    auto& members = groups[std::vector<double>(r.begin(), r.end())];
    if (members.empty()) reps.push_back(i);
    members.push_back(i);
  }
  auto [kept_reps, held_reps] = stratified_carve(reps, labels, options.holdout_fraction, seed);
  auto expand = [&](const std::vector<std::size_t>& rs) {
    std::vector<std::size_t> rows;
    for (auto rep : rs) {
      const auto r = all.row(rep);
      const auto& members = groups.at(std::vector<double>(r.begin(), r.end()));
      rows.insert(rows.end(), members.begin(), members.end());
    }
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  const auto kept = expand(kept_reps), held = expand(held_reps);

  Discriminator out;
  for (auto i : kept) (i < n_real ? out.train_real : out.train_synthetic).push_back(i < n_real ? i : i - n_real);
  for (auto i : held) (i < n_real ? out.holdout_real : out.holdout_synthetic).push_back(i < n_real ? i : i - n_real);

  const Matrix x = all.select_rows(kept);
  std::vector<int> y(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) y[i] = labels[kept[i]];
  std::vector<double> w;
  if (options.balance_classes) {
    const double n = static_cast<double>(kept.size());
    const double w_real = n / (2.0 * static_cast<double>(out.train_real.size()));
    const double w_syn = n / (2.0 * static_cast<double>(out.train_synthetic.size()));
    w.resize(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) w[i] = y[i] == 1 ? w_real : w_syn;
  }
  out.real_prior = options.balance_classes ? 0.5
                                           : static_cast<double>(out.train_real.size()) /
                                                 static_cast<double>(kept.size());
  out.model = fit_stump_boost(x, y, options.n_rounds, options.learning_rate, seed, w);
  return out;
}

// ---- heads ---------------------------------------------------------------

std::vector<double> realism_score(const ProbClassifier& g, const Matrix& points) { return g.predict_proba(points); }

std::vector<double> boundary_distance(std::span<const double> p_hat, double t) {
  std::vector<double> d(p_hat.size());
  for (std::size_t i = 0; i < p_hat.size(); ++i) d[i] = std::abs(p_hat[i] - t);
  return d;
}

std::vector<double> utility_score(std::span<const double> d, double alpha) {
  std::vector<double> s(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) s[i] = 1.0 - sigmoid(alpha * d[i]);
  return s;
}

std::vector<double> uncertainty_score(std::span<const double> p_hat) {
  std::vector<double> s(p_hat.size());
  for (std::size_t i = 0; i < p_hat.size(); ++i) {
    const double p = p_hat[i];
    if (p <= 0.0 || p >= 1.0) {
      s[i] = 0.0;
      continue;
    }
    s[i] = -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
  }
  return s;
}

DensityReference density_radii(const Matrix& candidates, const Matrix& real_minority, std::size_t k) {
  if (k == 0 || k > real_minority.rows()) {
    throw Error(ErrorCode::kKTooLarge, "density k=" + std::to_string(k) + " exceeds " +
                                           std::to_string(real_minority.rows()) + " real minority rows");
  }
  auto mean_rows = [k](const kernels::NeighborTable& t) {
    std::vector<double> r(t.queries());
    for (std::size_t q = 0; q < r.size(); ++q) {
      const auto d = t.distances(q);
      r[q] = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(k);
    }
    return r;
  };
  DensityReference ref;
  ref.candidate_radius = mean_rows(kernels::knn_table(real_minority, candidates, k, false));
  ref.median_real_radius = median_of(mean_rows(kernels::knn_table(real_minority, real_minority, k, true)));
  return ref;
}

std::vector<double> density_score(const Matrix& candidates, const Matrix& real_minority, std::size_t k) {
  const auto ref = density_radii(candidates, real_minority, k);
  std::vector<double> s(ref.candidate_radius.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = ref.candidate_radius[i];
    if (ref.median_real_radius > 0.0) {
      s[i] = std::exp(-r / ref.median_real_radius);
    } else {
      s[i] = r == 0.0 ? 1.0 : 0.0;
    }
  }
  return s;
}

std::vector<double> realism_head(std::span<const double> s_real, double prior) {
  if (!(prior > 0.0 && prior < 1.0)) throw Error(ErrorCode::kInvalidArgument, "realism prior must lie in (0, 1)");
  const double prior_odds = prior / (1.0 - prior);
  std::vector<double> h(s_real.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double p = s_real[i];
    h[i] = p >= 1.0 ? 1.0 : std::min(1.0, p / (1.0 - p) / prior_odds);
  }
  return h;
}

HeadScores compute_heads(const Matrix& candidates, const Discriminator& discriminator,
                         std::span<const double> pilot_probs, double t, const Matrix& real_minority,
                         const FilterConfig& config) {
  if (pilot_probs.size() != candidates.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "pilot probabilities do not match the candidate count");
  }
  HeadScores h;
  h.s_real = realism_score(discriminator.model, candidates);
  if (config.normalize_realism) h.s_real = realism_head(h.s_real, discriminator.real_prior);
  h.s_util = utility_score(boundary_distance(pilot_probs, t), config.alpha);
  if (config.rescale_utility)
    for (double& u : h.s_util) u *= 2.0;
  h.s_unc = uncertainty_score(pilot_probs);
  const std::size_t k = std::min(config.density_k, real_minority.rows() - 1);
  h.s_den = density_score(candidates, real_minority, k);
  return h;
}

// ---- fusion and selection ------------------------------------------------

std::vector<double> fuse_scores(const HeadScores& heads, const FilterConfig& config) {
  const std::size_t n = heads.size();
  if (heads.s_util.size() != n || heads.s_unc.size() != n || heads.s_den.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "head score vectors differ in length");
  }
  std::vector<double> s(n);
  if (config.extended_fusion) {
    const auto& w = config.head_weights;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = w[0] * heads.s_util[i] + w[1] * heads.s_real[i] + w[2] * heads.s_unc[i] + w[3] * heads.s_den[i];
    }
  } else {
    const double lam = config.lambda;
    for (std::size_t i = 0; i < n; ++i) s[i] = lam * heads.s_util[i] + (1.0 - lam) * heads.s_real[i];
  }
  return s;
}

std::vector<std::size_t> rank_descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

namespace {

std::vector<std::size_t> greedy_diverse(std::span<const std::size_t> pool, std::span<const double> s,
                                        const Matrix& points, std::size_t k) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (auto i : pool) {
    lo = std::min(lo, s[i]);
    hi = std::max(hi, s[i]);
  }
  const double gamma = 0.1 * (hi - lo);
  std::vector<double> min_dist(pool.size(), std::numeric_limits<double>::infinity());
  std::vector<bool> taken(pool.size(), false);
  std::vector<std::size_t> picked;
  picked.reserve(k);

  auto take = [&](std::size_t slot) {
    taken[slot] = true;
    picked.push_back(pool[slot]);
    const auto p = points.row(pool[slot]);
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (!taken[j]) min_dist[j] = std::min(min_dist[j], distance(points.row(pool[j]), p));
    }
  };

  std::size_t first = 0;
  for (std::size_t j = 1; j < pool.size(); ++j)
    if (s[pool[j]] > s[pool[first]]) first = j;
  take(first);
  while (picked.size() < k) {
    std::size_t best = pool.size();
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (taken[j]) continue;
      const double v = s[pool[j]] + gamma * min_dist[j];
      if (best == pool.size() || v > best_value) {
        best = j;
        best_value = v;
      }
    }
    take(best);
  }
  return picked;
}

}  // namespace

FilteredSet fuse_and_select(const HeadScores& heads, const Matrix& points, const FilterConfig& config) {
  config.validate();
  const auto s = fuse_scores(heads, config);
  FilteredSet out;
  out.scored.resize(s.size());
  std::vector<std::size_t> pool;  // ascending
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto& c = out.scored[i];
    c.index = i;
    c.s_real = heads.s_real[i];
    c.s_util = heads.s_util[i];
    c.s_unc = heads.s_unc[i];
    c.s_den = heads.s_den[i];
    c.fused = s[i];
    if (s[i] >= config.tau) pool.push_back(i);
  }
  out.passed_tau = pool.size();

  if (config.top_k && pool.size() > *config.top_k) {
    const std::size_t k = *config.top_k;
    if (config.diversity_enabled) {
      if (points.rows() != s.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "diversity selection needs one point per candidate");
      }
      out.selection_order = greedy_diverse(pool, s, points, k);
    } else {
      std::stable_sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
      out.selection_order.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    }
  } else {
    out.selection_order = pool;
  }
  out.retained = out.selection_order;
  std::sort(out.retained.begin(), out.retained.end());
  for (auto i : out.retained) out.scored[i].retained = true;
  return out;
}

void write_scores_csv(const FilteredSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "index,s_real,s_util,s_unc,s_den,S,retained\n";
  for (const auto& c : set.scored) {
    out << c.index << ',' << format_real(c.s_real) << ',' << format_real(c.s_util) << ',' << format_real(c.s_unc)
        << ',' << format_real(c.s_den) << ',' << format_real(c.fused) << ',' << (c.retained ? 1 : 0) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

// ---- PCA -----------------------------------------------------------------

PCAProjection pca_fit(const Matrix& features, std::size_t r) {
  const std::size_t n = features.rows(), d = features.cols();
  if (n < 2) throw Error(ErrorCode::kTooFewSamples, "pca_fit needs at least 2 rows");
  if (r == 0 || r > d) {
    throw Error(ErrorCode::kInvalidArgument, "pca target dimension must lie in [1, " + std::to_string(d) + "]");
  }
  PCAProjection proj;
  proj.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) proj.mean[j] += features(i, j);
  for (double& m : proj.mean) m /= static_cast<double>(n);

  Matrix cov(d, d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = features.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      const double ca = row[a] - proj.mean[a];
      for (std::size_t b = a; b < d; ++b) cov(a, b) += ca * (row[b] - proj.mean[b]);
    }
  }
  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) /= static_cast<double>(n - 1);
      cov(b, a) = cov(a, b);
    }
    trace += cov(a, a);
  }
  const double floor = 1e-12 * std::max(trace, std::numeric_limits<double>::min());

  std::vector<std::vector<double>> basis;
  Rng rng(0x9ca5eedULL);
  auto orthogonalize = [&](std::vector<double>& v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : basis) {
        const double c = dot(v, u);
        for (std::size_t j = 0; j < d; ++j) v[j] -= c * u[j];
      }
    const double norm = std::sqrt(dot(v, v));
    if (norm > 0.0)
      for (double& x : v) x /= norm;
    return norm;
  };

  std::vector<double> v(d), w(d);
  for (std::size_t c = 0; c < r; ++c) {
    for (double& x : v) x = rng.normal();
    orthogonalize(v);
    double lambda = 0.0;
    for (int it = 0; it < 10000; ++it) {
      for (std::size_t a = 0; a < d; ++a) w[a] = dot(cov.row(a), v);
      if (orthogonalize(w) == 0.0) break;
      double delta = 0.0;
      for (std::size_t j = 0; j < d; ++j) delta = std::max(delta, std::abs(w[j] - v[j]));
      v.swap(w);
      if (delta < 1e-10) break;
    }
    for (std::size_t a = 0; a < d; ++a) w[a] = dot(cov.row(a), v);
    lambda = dot(v, w);
    if (lambda <= floor) {
      proj.rank_deficient = true;
      lambda = 0.0;
    } else {
      ++proj.achieved_rank;
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) cov(a, b) -= lambda * v[a] * v[b];
    }
    // Canonical sign: largest-magnitude coordinate positive.
    std::size_t big = 0;
    for (std::size_t j = 1; j < d; ++j)
      if (std::abs(v[j]) > std::abs(v[big])) big = j;
    if (v[big] < 0.0)
      for (double& x : v) x = -x;
    basis.push_back(v);
    proj.explained_variance.push_back(lambda);
  }

  proj.components = Matrix(d, r, 0.0);
  for (std::size_t c = 0; c < r; ++c)
    for (std::size_t j = 0; j < d; ++j) proj.components(j, c) = basis[c][j];
  return proj;
}

Matrix pca_project(const PCAProjection& proj, const Matrix& features) {
  if (features.cols() != proj.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "pca_project expects " + std::to_string(proj.input_dim()) + " columns");
  }
  const std::size_t r = proj.output_dim(), d = proj.input_dim();
  Matrix out(features.rows(), r, 0.0);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto row = features.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double c = row[j] - proj.mean[j];
      for (std::size_t k = 0; k < r; ++k) out(i, k) += c * proj.components(j, k);
    }
  }
  return out;
}

Matrix pca_reconstruct(const PCAProjection& proj, const Matrix& projected) {
  if (projected.cols() != proj.output_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "pca_reconstruct expects " + std::to_string(proj.output_dim()) +
                                                   " columns");
  }
  const std::size_t r = proj.output_dim(), d = proj.input_dim();
  Matrix out(projected.rows(), d, 0.0);
  for (std::size_t i = 0; i < projected.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = proj.mean[j];
      for (std::size_t k = 0; k < r; ++k) s += projected(i, k) * proj.components(j, k);
      out(i, j) = s;
    }
  }
  return out;
}

// ---- diagnostics ---------------------------------------------------------

double epsilon_from_scores(std::span<const double> s_real, double eta) {
  if (s_real.empty()) throw Error(ErrorCode::kEmptyHoldout, "no held-out synthetic rows for epsilon");
  const auto hits = std::count_if(s_real.begin(), s_real.end(), [eta](double s) { return s >= eta; });
  return static_cast<double>(hits) / static_cast<double>(s_real.size());
}

double estimate_epsilon(const ProbClassifier& g, const Matrix& held_out_synthetic, double eta) {
  if (held_out_synthetic.empty()) throw Error(ErrorCode::kEmptyHoldout, "no held-out synthetic rows for epsilon");
  return epsilon_from_scores(realism_score(g, held_out_synthetic), eta);
}

std::optional<double> estimate_l_over_rho(std::span<const double> minority_probs, const Matrix& minority, double t) {
  if (minority.rows() < 2) throw Error(ErrorCode::kTooFewSamples, "estimate_l_over_rho needs >= 2 minority rows");
  if (minority_probs.size() != minority.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "one probability per minority row expected");
  }
  std::vector<std::size_t> band;
  for (std::size_t i = 0; i < minority.rows(); ++i)
    if (std::abs(minority_probs[i] - t) <= kBoundaryBand) band.push_back(i);
  bool any_pair = false;
  double lip = 0.0;
  for (std::size_t a = 0; a < band.size(); ++a) {
    for (std::size_t b = a + 1; b < band.size(); ++b) {
      const double dist = distance(minority.row(band[a]), minority.row(band[b]));
      if (!(dist > 0.0)) continue;
      any_pair = true;
      lip = std::max(lip, std::abs(minority_probs[band[a]] - minority_probs[band[b]]) / dist);
    }
  }
  if (!any_pair) return std::nullopt;
  const auto nn = kernels::knn_table(minority, minority, 1, true);
  const double rho = median_of(nn.dist);
  return lip * rho;
}

std::optional<double> estimate_l_over_rho(const ProbClassifier& p_hat, const Matrix& minority, double t) {
  const auto probs = p_hat.predict_proba(minority);
  return estimate_l_over_rho(probs, minority, t);
}

}  // namespace afsmote
