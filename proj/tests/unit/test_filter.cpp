#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>
#include <utility>

#include "afsmote/error.hpp"
#include "afsmote/evaluation.hpp"
#include "afsmote/filter.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace afsmote;

namespace {

HeadScores two_head(std::vector<double> util, std::vector<double> real) {
  HeadScores h;
  const std::size_t n = util.size();
  h.s_util = std::move(util);
  h.s_real = std::move(real);
  h.s_unc.assign(n, 0.0);
  h.s_den.assign(n, 0.0);
  return h;
}

FilterConfig plain(double lambda, double tau) {
  FilterConfig c;
  c.lambda = lambda;
  c.tau = tau;
  return c;
}

double held_out_auroc(const Discriminator& g, const Matrix& real, const Matrix& syn) {
  std::vector<double> s;
  std::vector<int> y;
  for (const auto& [rows, src, label] : {std::tuple{&g.holdout_real, &real, 1}, std::tuple{&g.holdout_synthetic, &syn, 0}}) {
    const auto p = g.model.predict_proba(src->select_rows(*rows));
    s.insert(s.end(), p.begin(), p.end());
    y.insert(y.end(), p.size(), label);
  }
  return auroc(s, y);
}

}  // namespace

// ---- heads ---------------------------------------------------------------

TEST(Heads, BoundaryDistance) {
  const std::vector<double> p{0.5, 1.0, 0.2};
  EXPECT_EQ(boundary_distance(p, 0.5), (std::vector<double>{0.0, 0.5, 0.3}));
}

TEST(Heads, UtilityValues) {
  const std::vector<double> d{0.0, 0.5};
  const auto s = utility_score(d, 4.0);
  EXPECT_EQ(s[0], 0.5);
  EXPECT_NEAR(s[1], 1.0 - 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(s[1], 0.1192, 1e-4);
}

TEST(Heads, UtilityStrictlyDecreasing) {
  Rng rng(1);
  for (int rep = 0; rep < 1000; ++rep) {
    const double a = rng.uniform() * 0.5, b = a + 1e-6 + rng.uniform() * 0.5;
    const std::vector<double> d{a, b};
    const auto s = utility_score(d, 0.5 + rng.uniform() * 10.0);
    ASSERT_GT(s[0], s[1]);
    ASSERT_LE(s[0], 0.5);
    ASSERT_GT(s[1], 0.0);
  }
}

TEST(Heads, Entropy) {
  const std::vector<double> p{0.5, 0.0, 1.0, 0.25};
  const auto s = uncertainty_score(p);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_EQ(s[1], 0.0);
  EXPECT_EQ(s[2], 0.0);
  EXPECT_NEAR(s[3], -(0.25 * std::log(0.25) + 0.75 * std::log(0.75)) / std::log(2.0), 1e-15);
  EXPECT_NEAR(s[3], 0.8113, 1e-4);
}

TEST(Heads, DensityHandTable) {
  // Real minority on a line at 0, 1, 3, 6; k = 2.
  // Self-excluded radii: 0 -> (1+3)/2, 1 -> (1+2)/2, 3 -> (2+3)/2, 6 -> (3+5)/2.
  // Median of {2, 1.5, 2.5, 4} is 2.25. Candidate 2 -> (1+1)/2 = 1.
  const Matrix real(4, 1, {0.0, 1.0, 3.0, 6.0});
  const Matrix cand(1, 1, {2.0});
  const auto ref = density_radii(cand, real, 2);
  EXPECT_EQ(ref.median_real_radius, 2.25);
  EXPECT_EQ(ref.candidate_radius[0], 1.0);
  EXPECT_DOUBLE_EQ(density_score(cand, real, 2)[0], std::exp(-1.0 / 2.25));
}

TEST(Heads, DensityProximityAndOutlier) {
  Rng rng(2);
  const Matrix real = gen::random_matrix(rng, 30, 3);
  Matrix cand(2, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    cand(0, c) = real(4, c);
    cand(1, c) = 100.0 * (1.0 + real(4, c));
  }
  const auto s = density_score(cand, real, 5);
  EXPECT_GT(s[0], std::exp(-1.0));
  EXPECT_LT(s[1], 1e-10);
  EXPECT_THROW(density_score(cand, real, 31), Error);
}

TEST(Heads, RealismHeadCapsDensityRatio) {
  const std::vector<double> s{0.2, 0.5, 0.9, 1.0};
  const auto h = realism_head(s, 0.2);  // prior odds 1/4
  EXPECT_DOUBLE_EQ(h[0], 1.0);
  EXPECT_EQ(h[1], 1.0);
  EXPECT_EQ(h[3], 1.0);
  const auto g = realism_head(s, 0.5);
  EXPECT_DOUBLE_EQ(g[0], 0.25);
  EXPECT_EQ(g[1], 1.0);
}

// ---- fusion and selection ------------------------------------------------

TEST(Fusion, BoundaryInclusion) {
  const auto h = two_head({0.9}, {0.7});
  const auto out = fuse_and_select(h, Matrix(1, 1), plain(0.5, 0.8));
  EXPECT_DOUBLE_EQ(out.scored[0].fused, 0.8);
  // 0.5 * 0.9 + 0.5 * 0.7 rounds to exactly 0.8 in binary64.
  EXPECT_EQ(out.scored[0].fused, 0.8);
  EXPECT_EQ(out.retained, (std::vector<std::size_t>{0}));
}

TEST(Fusion, LambdaOneIgnoresRealism) {
  Rng rng(3);
  const auto h = gen::random_heads(rng, 200);
  EXPECT_EQ(fuse_scores(h, plain(1.0, 0.0)), h.s_util);
  EXPECT_EQ(fuse_scores(h, plain(0.0, 0.0)), h.s_real);
}

TEST(Fusion, ExactnessProperty) {
  Rng rng(4);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto h = gen::random_heads(rng, 1 + rng.index(50));
    const double lam = rng.uniform();
    const auto s = fuse_scores(h, plain(lam, 0.0));
    for (std::size_t i = 0; i < s.size(); ++i)
      ASSERT_LE(std::abs(s[i] - (lam * h.s_util[i] + (1.0 - lam) * h.s_real[i])), 1e-15);
  }
}

TEST(Fusion, EndpointRankings) {
  Rng rng(5);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto h = gen::random_heads(rng, 2 + rng.index(40));
    ASSERT_EQ(rank_descending(fuse_scores(h, plain(0.0, 0.0))), rank_descending(h.s_real));
    ASSERT_EQ(rank_descending(fuse_scores(h, plain(1.0, 0.0))), rank_descending(h.s_util));
  }
}

TEST(Fusion, NestedInTau) {
  Rng rng(6);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto h = gen::random_heads(rng, 1 + rng.index(60));
    const double lam = rng.uniform();
    const double t1 = rng.uniform(), t2 = t1 + rng.uniform() * (1.0 - t1);
    const auto a = fuse_and_select(h, Matrix(0, 1), plain(lam, t1));
    const auto b = fuse_and_select(h, Matrix(0, 1), plain(lam, t2));
    ASSERT_TRUE(std::includes(a.retained.begin(), a.retained.end(), b.retained.begin(), b.retained.end()));
    ASSERT_EQ(a.passed_tau, a.retained.size());
  }
}

TEST(Fusion, TauAboveOneRetainsNothing) {
  Rng rng(7);
  const auto h = gen::random_heads(rng, 50);
  EXPECT_TRUE(fuse_and_select(h, Matrix(0, 1), plain(0.5, 1.0 + 1e-9)).retained.empty());
}

TEST(TopK, DiversitySelectionProperties) {
  Rng rng(8);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + rng.index(40);
    const auto h = gen::random_heads(rng, n);
    const Matrix pts = gen::random_matrix(rng, n, 2);
    auto cfg = plain(rng.uniform(), rng.uniform() * 0.8);
    cfg.top_k = 1 + rng.index(15);
    cfg.diversity_enabled = rng.uniform() < 0.5;
    const auto out = fuse_and_select(h, pts, cfg);
    ASSERT_EQ(out.retained.size(), std::min(*cfg.top_k, out.passed_tau));
    ASSERT_EQ(std::set<std::size_t>(out.retained.begin(), out.retained.end()).size(), out.retained.size());
    for (auto i : out.retained) ASSERT_GE(out.scored[i].fused, cfg.tau);
    if (out.passed_tau > *cfg.top_k) {
      const std::size_t top = *std::max_element(out.selection_order.begin(), out.selection_order.end(),
                                           [&](auto a, auto b) { return out.scored[a].fused < out.scored[b].fused; });
      ASSERT_EQ(out.scored[out.selection_order.front()].fused, out.scored[top].fused);
    }
  }
}

TEST(TopK, HandGreedyTrace) {
  // Scores 1.0 .. 0.5 at positions 0, 0.1, 0.2, 5, 10, 20; gamma = 0.05.
  // Step 2 values: 0.955, 0.91, 1.10, 1.30, 1.50 -> pick 5.
  // Step 3 values: 0.955, 0.91, 1.10, 1.30 -> pick 4.
  const auto h = two_head({1.0, 0.95, 0.9, 0.85, 0.8, 0.5}, std::vector<double>(6, 0.0));
  const Matrix pts(6, 1, {0.0, 0.1, 0.2, 5.0, 10.0, 20.0});
  auto cfg = plain(1.0, 0.0);
  cfg.top_k = 3;
  const auto diverse = fuse_and_select(h, pts, cfg);
  EXPECT_EQ(diverse.selection_order, (std::vector<std::size_t>{0, 5, 4}));
  cfg.diversity_enabled = false;
  EXPECT_EQ(fuse_and_select(h, pts, cfg).selection_order, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Fusion, ExtendedWeights) {
  HeadScores h;
  h.s_util = {1.0};
  h.s_real = {0.5};
  h.s_unc = {0.0};
  h.s_den = {1.0};
  FilterConfig cfg;
  cfg.extended_fusion = true;
  EXPECT_DOUBLE_EQ(fuse_scores(h, cfg)[0], 0.4 + 0.2 + 0.1);
  cfg.head_weights = {0.5, 0.5, 0.5, 0.5};
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(FilterConfig, RejectsOutOfRange) {
  EXPECT_THROW(plain(1.5, 0.8).validate(), Error);
  EXPECT_THROW(plain(0.5, -0.1).validate(), Error);
  EXPECT_NO_THROW(plain(0.5, 1.5).validate());
}

// ---- PCA -----------------------------------------------------------------

TEST(Pca, LineYEqualsX) {
  Rng rng(9);
  Matrix x(50, 2);
  for (std::size_t i = 0; i < 50; ++i) x(i, 0) = x(i, 1) = rng.normal();
  const auto p = pca_fit(x, 2);
  const double c = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(p.components(0, 0)), c, 1e-8);
  EXPECT_NEAR(std::abs(p.components(1, 0)), c, 1e-8);
  EXPECT_GT(p.components(0, 0) * p.components(1, 0), 0.0);
  EXPECT_NEAR(p.explained_variance[1], 0.0, 1e-10);
  EXPECT_TRUE(p.rank_deficient);
  EXPECT_EQ(p.achieved_rank, 1u);
}

TEST(Pca, FullRankReconstruction) {
  Rng rng(10);
  const Matrix x = gen::random_matrix(rng, 40, 4, 3.0);
  const auto p = pca_fit(x, 4);
  const Matrix back = pca_reconstruct(p, pca_project(p, x));
  for (std::size_t i = 0; i < x.data().size(); ++i) ASSERT_NEAR(back.data()[i], x.data()[i], 1e-8);
}

TEST(Pca, MatchesJacobiOracle) {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix x = gen::random_matrix(rng, 200, 5);
    for (std::size_t i = 0; i < 200; ++i)
      for (std::size_t c = 0; c < 5; ++c) x(i, c) *= 1.0 + static_cast<double>(c);  // distinct spectrum
    const auto p = pca_fit(x, 3);
    const auto [values, vectors] = oracle::jacobi_eigen(oracle::covariance(x));
    for (std::size_t j = 0; j < 3; ++j) {
      ASSERT_NEAR(p.explained_variance[j], values[j], 1e-6);
      if (j > 0) ASSERT_GE(p.explained_variance[j - 1], p.explained_variance[j]);
    }
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 3; ++b) {
        double dot = 0;
        for (std::size_t r = 0; r < 5; ++r) dot += p.components(r, a) * p.components(r, b);
        ASSERT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-9);
      }
    }
  }
}

// ---- diagnostics ---------------------------------------------------------

TEST(Epsilon, Examples) {
  EXPECT_EQ(epsilon_from_scores(std::vector<double>{0.2, 0.6, 0.7, 0.4}, 0.5), 0.5);
  EXPECT_EQ(epsilon_from_scores(std::vector<double>(5, 0.0), 0.5), 0.0);
  EXPECT_EQ(epsilon_from_scores(std::vector<double>(5, 1.0), 0.5), 1.0);
  try {
    epsilon_from_scores(std::vector<double>{}, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyHoldout);
  }
}

TEST(Epsilon, NonIncreasingInEta) {
  Rng rng(12);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto s = gen::random_scores(rng, 1 + rng.index(30));
    const double a = rng.uniform(), b = a + rng.uniform() * (1.0 - a);
    const double ea = epsilon_from_scores(s, a), eb = epsilon_from_scores(s, b);
    ASSERT_GE(ea, eb);
    ASSERT_GE(eb, 0.0);
    ASSERT_LE(ea, 1.0);
  }
}

TEST(LOverRho, TwoPoints) {
  const Matrix m(2, 1, {0.0, 1.0});
  const auto v = estimate_l_over_rho(std::vector<double>{0.45, 0.55}, m, 0.5);
  ASSERT_TRUE(v.has_value());
  EXPECT_NEAR(*v, 0.1, 1e-12);
}

TEST(LOverRho, ConstantScorerAndAbsentBand) {
  Rng rng(13);
  const Matrix m = gen::random_matrix(rng, 10, 2);
  EXPECT_EQ(estimate_l_over_rho(std::vector<double>(10, 0.5), m, 0.5).value(), 0.0);
  EXPECT_FALSE(estimate_l_over_rho(std::vector<double>(10, 0.9), m, 0.5).has_value());
}

TEST(LOverRho, ScaleInvariant) {
  Rng rng(14);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng.index(20);
    const Matrix m = gen::random_matrix(rng, n, 3);
    std::vector<double> p(n);
    for (auto& v : p) v = 0.4 + 0.2 * rng.uniform();
    const double c = 0.01 + rng.uniform() * 100.0;
    Matrix scaled = m;
    for (std::size_t i = 0; i < n; ++i)
      for (double& v : scaled.row(i)) v *= c;
    const auto a = estimate_l_over_rho(p, m, 0.5), b = estimate_l_over_rho(p, scaled, 0.5);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) ASSERT_NEAR(*a, *b, 1e-9 * std::max(1.0, *a));
  }
}

// ---- discriminator -------------------------------------------------------

TEST(Discriminator, CopiesAreIndistinguishable) {
  Rng rng(15);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix real = gen::random_matrix(rng, 400, 2);
    const auto g = train_discriminator(real, real, seed);
    EXPECT_NEAR(held_out_auroc(g, real, real), 0.5, 0.1) << "seed " << seed;
  }
}

TEST(Discriminator, OffsetIsSeparable) {
  Rng rng(16);
  const Matrix real = gen::random_matrix(rng, 200, 3);
  Matrix syn = real;
  for (std::size_t i = 0; i < syn.rows(); ++i)
    for (double& v : syn.row(i)) v += 100.0;
  const auto g = train_discriminator(real, syn, 4);
  double correct = 0, total = 0;
  for (const auto& [rows, src, label] : {std::tuple{&g.holdout_real, &real, 1}, std::tuple{&g.holdout_synthetic, &std::as_const(syn), 0}}) {
    for (const double p : g.model.predict_proba(src->select_rows(*rows))) {
      correct += (p >= 0.5) == (label == 1);
      total += 1;
    }
  }
  EXPECT_GE(correct / total, 0.99);
}

TEST(Discriminator, MidSeparationBetweenRegimes) {
  Rng rng(17);
  const Matrix real = gen::random_matrix(rng, 400, 2);
  Matrix syn = gen::random_matrix(rng, 400, 2);
  for (std::size_t i = 0; i < syn.rows(); ++i) syn(i, 0) += 1.0;
  const double a = held_out_auroc(train_discriminator(real, syn, 5), real, syn);
  EXPECT_GT(a, 0.6);
  EXPECT_LT(a, 0.99);
}

TEST(Discriminator, CopiesShareTheirSide) {
  Rng rng(20);
  const Matrix real = gen::random_matrix(rng, 50, 2);
  const auto g = train_discriminator(real, real, 7);
  EXPECT_EQ(g.holdout_real, g.holdout_synthetic);
  EXPECT_EQ(g.holdout_real.size(), 10u);
}

TEST(Discriminator, HoldoutIsStratifiedAndDisjoint) {
  Rng rng(18);
  const Matrix real = gen::random_matrix(rng, 50, 2), syn = gen::random_matrix(rng, 100, 2);
  const auto g = train_discriminator(real, syn, 6);
  EXPECT_EQ(g.holdout_real.size(), 10u);
  EXPECT_EQ(g.holdout_synthetic.size(), 20u);
  std::set<std::size_t> train(g.train_synthetic.begin(), g.train_synthetic.end());
  for (auto i : g.holdout_synthetic) EXPECT_FALSE(train.count(i));
  EXPECT_THROW(train_discriminator(real.select_rows(std::vector<std::size_t>{0, 1, 2, 3}), syn, 1), Error);
}

TEST(Discriminator, NullModelIsHalf) {
  Rng rng(19);
  const Matrix x = gen::random_matrix(rng, 20, 2);
  std::vector<int> y(20, 0);
  for (std::size_t i = 0; i < 10; ++i) y[i] = 1;
  const auto g = fit_stump_boost(x, y, 0, 0.1, 0);
  for (const double s : realism_score(g, gen::random_matrix(rng, 100, 2))) EXPECT_DOUBLE_EQ(s, 0.5);
}
