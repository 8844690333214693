#include <gtest/gtest.h>

#include <cmath>

#include "afsmote/error.hpp"
#include "afsmote/evaluation.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace afsmote;

TEST(Confusion, HandCase) {
  const std::vector<double> p{0.9, 0.1};
  const std::vector<int> y{1, 0};
  EXPECT_EQ(confusion_at(p, y, 0.5), (Confusion{1, 0, 1, 0}));
}

TEST(Confusion, ThresholdIsInclusive) {
  const std::vector<double> p{0.5};
  const std::vector<int> y{1};
  EXPECT_EQ(confusion_at(p, y, 0.5).tp, 1u);
}

TEST(Confusion, MatchesRecount) {
  Rng rng(3);
  const auto p = gen::random_scores(rng, 20);
  const auto y = gen::random_labels(rng, 20);
  const double t = 0.4;
  Confusion want;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pred = p[i] >= t;
    if (pred && y[i]) ++want.tp;
    if (pred && !y[i]) ++want.fp;
    if (!pred && !y[i]) ++want.tn;
    if (!pred && y[i]) ++want.fn;
  }
  EXPECT_EQ(confusion_at(p, y, t), want);
}

TEST(Prf, PerfectAndEmptyConventions) {
  const auto m = prf_metrics(Confusion{1, 0, 1, 0});
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  const auto z = prf_metrics(Confusion{0, 0, 5, 3});
  EXPECT_EQ(z.precision, 0.0);
  EXPECT_EQ(z.f1, 0.0);
}

TEST(Prf, F1FromReportedPrecisionRecall) {
  EXPECT_NEAR(f_beta_score(0.7891, 0.8632, 1.0), 0.8245, 5e-4);
}

TEST(FTilde, PerfectScorerAtBalancedPrior) {
  const std::vector<double> p{1, 0, 1, 0};
  const std::vector<int> y{1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(f_tilde_beta(p, y, 0.5, 1.0, 0.5), 2.0);
}

TEST(FTilde, EmptyNumerator) {
  const std::vector<double> p{0.1, 0.2, 0.9};
  const std::vector<int> y{1, 1, 0};
  EXPECT_EQ(f_tilde_beta(p, y, 0.5, 1.0, 0.3), 0.0);
}

TEST(FTilde, LargeBetaLimit) {
  Rng rng(5);
  const auto y = gen::random_labels(rng, 200, 0.2);
  const auto p = gen::informative_scores(rng, y);
  const double t = 0.5, pi1 = 0.2;
  double num = 0, npos = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!y[i]) continue;
    npos += 1;
    if (p[i] >= t) num += p[i];
  }
  const double limit = (num / npos);
  EXPECT_NEAR(f_tilde_beta(p, y, t, 100.0, pi1), limit, 0.01 * limit);
}

TEST(FTilde, NumeratorGrowsWhenPositivesCrossThreshold) {
  Rng rng(6);
  for (int rep = 0; rep < 500; ++rep) {
    const auto y = gen::random_labels(rng, 30, 0.3);
    auto p = gen::random_scores(rng, 30);
    const double t = 0.2 + 0.6 * rng.uniform();
    const double before = f_tilde_beta(p, y, t, 1.0, 0.3);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (y[i] == 1 && p[i] < t) {
        p[i] = t + (1.0 - t) * rng.uniform();
        break;
      }
    }
    ASSERT_GE(f_tilde_beta(p, y, t, 1.0, 0.3), before);
  }
}

TEST(Auroc, Extremes) {
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_EQ(auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y), 1.0);
  EXPECT_EQ(auroc(std::vector<double>(4, 0.3), y), 0.5);
}

TEST(Auroc, PairCountOracleAndMonotoneInvariance) {
  Rng rng(7);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 2 + rng.index(49);
    const auto y = gen::random_labels(rng, n);
    const auto s = gen::random_scores(rng, n);
    const double a = auroc(s, y);
    ASSERT_NEAR(a, oracle::auroc_pairs(s, y), 1e-12);
    std::vector<double> cube(s), ex(s);
    for (auto& v : cube) v = v * v * v;
    for (auto& v : ex) v = std::exp(v);
    ASSERT_EQ(auroc(cube, y), a);
    ASSERT_EQ(auroc(ex, y), a);
  }
}

TEST(AveragePrecision, ClosedForms) {
  EXPECT_EQ(average_precision(std::vector<double>{0.9, 0.1, 0.2}, std::vector<int>{1, 0, 0}), 1.0);
  const std::size_t n = 7;
  std::vector<double> s(n);
  std::vector<int> y(n, 0);
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<double>(n - i);
  y[n - 1] = 1;
  EXPECT_NEAR(average_precision(s, y), 1.0 / n, 1e-15);
}

TEST(AveragePrecision, ThresholdOracleAndPriorFloor) {
  Rng rng(8);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 2 + rng.index(49);
    const auto y = gen::random_labels(rng, n);
    const auto s = gen::random_scores(rng, n);
    const double ap = average_precision(s, y);
    ASSERT_NEAR(ap, oracle::ap_by_thresholds(s, y), 1e-12);
    const auto n_pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    const double pi1 = static_cast<double>(n_pos) / static_cast<double>(n);
    // Lowest attainable AP: every positive ranked below every negative.
    double worst = 0.0;
    for (std::size_t k = 1; k <= n_pos; ++k) worst += static_cast<double>(k) / static_cast<double>(n - n_pos + k);
    worst /= static_cast<double>(n_pos);
    ASSERT_GE(ap, worst - 1e-15);
    ASSERT_NEAR(average_precision(std::vector<double>(n, 0.4), y), pi1, 1e-15);
  }
}

TEST(AveragePrecision, CanFallBelowPrior) {
  // Two positives ranked last of four: AP = (1/3 + 2/4) / 2 < 1/2.
  const std::vector<double> s{0.9, 0.8, 0.2, 0.1};
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_NEAR(average_precision(s, y), (1.0 / 3.0 + 0.5) / 2.0, 1e-15);
}

TEST(Brier, HandCases) {
  EXPECT_EQ(brier(std::vector<double>{1, 0}, std::vector<int>{1, 0}), 0.0);
  EXPECT_EQ(brier(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}), 0.25);
  EXPECT_NEAR(brier(std::vector<double>{0.8, 0.3}, std::vector<int>{1, 0}), 0.065, 1e-15);
}

TEST(Ece, SingleSample) {
  const auto e = ece_mce(std::vector<double>{0.9}, std::vector<int>{0});
  EXPECT_NEAR(e.ece, 0.9, 1e-15);
  EXPECT_NEAR(e.mce, 0.9, 1e-15);
}

TEST(Ece, NeverExceedsMce) {
  Rng rng(9);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + rng.index(60);
    const auto p = gen::random_scores(rng, n);
    const auto y = gen::random_labels(rng, n);
    const auto e = ece_mce(p, y, 1 + rng.index(15));
    ASSERT_LE(e.ece, e.mce + 1e-15);
  }
}

TEST(Threshold, SeparatedScoresGiveMidpoint) {
  const std::vector<double> p{0.1, 0.2, 0.7, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  const auto op = select_threshold(p, y, 0.9);
  EXPECT_TRUE(op.feasible);
  EXPECT_DOUBLE_EQ(op.threshold, 0.45);
  EXPECT_EQ(op.precision, 1.0);
  EXPECT_EQ(op.recall, 1.0);
}

TEST(Threshold, InfeasibleFloorFallsBack) {
  const std::vector<double> p{0.9, 0.9, 0.2, 0.3};
  const std::vector<int> y{1, 0, 1, 0};
  const auto op = select_threshold(p, y, 0.99);
  EXPECT_FALSE(op.feasible);
  EXPECT_EQ(op.precision, 0.5);
}

TEST(Threshold, MatchesExhaustiveScan) {
  Rng rng(10);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 2 + rng.index(29);
    const auto y = gen::random_labels(rng, n);
    const auto p = rep % 2 ? gen::random_scores(rng, n) : gen::informative_scores(rng, y, 2.0);
    const double p0 = rep % 5 == 0 ? 0.99 : 0.5 + 0.45 * rng.uniform();
    const auto want = oracle::threshold_scan(p, y, p0);
    ASSERT_EQ(threshold_candidates(p), want.candidates);
    const auto got = select_threshold(p, y, p0);
    ASSERT_EQ(got.threshold, want.chosen.threshold) << "rep " << rep;
    ASSERT_EQ(got.feasible, want.chosen.feasible);
    ASSERT_EQ(got.precision, want.chosen.precision);
    ASSERT_EQ(got.recall, want.chosen.recall);
    if (got.feasible) {
      for (const double t : want.candidates) {
        const auto m = prf_metrics(confusion_at(p, y, t));
        ASSERT_FALSE(m.precision >= p0 && m.f1 > got.f1);
      }
    }
  }
}

TEST(Threshold, RejectsBadFloor) {
  const std::vector<double> p{0.1, 0.9};
  const std::vector<int> y{0, 1};
  EXPECT_THROW(select_threshold(p, y, 1.0), Error);
}

TEST(Bootstrap, ConstantStatisticCollapses) {
  Rng rng(11);
  const auto y = gen::random_labels(rng, 50);
  const auto p = gen::random_scores(rng, 50);
  const kernels::Statistic constant = [](auto, auto) { return 0.25; };
  const auto iv = bca_bootstrap(constant, p, y, BootstrapConfig{500, 0.95, 1, false});
  EXPECT_EQ(iv.lo, 0.25);
  EXPECT_EQ(iv.hi, 0.25);
  EXPECT_TRUE(iv.degenerate);
}

TEST(Bootstrap, NoBiasNoAccelerationIsPercentile) {
  Rng rng(12);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> reps(200 + rng.index(300));
    for (auto& v : reps) v = rng.normal();
    const double conf = 0.8 + 0.19 * rng.uniform();
    const auto bca = bca_with_parameters(reps, 0.0, 0.0, conf);
    const auto pct = percentile_interval(reps, conf);
    ASSERT_EQ(bca.lo, pct.lo);
    ASSERT_EQ(bca.hi, pct.hi);
  }
}

TEST(Bootstrap, IntervalContainsPointForSmoothStatistic) {
  Rng rng(13);
  const auto y = gen::random_labels(rng, 300, 0.3);
  const auto p = gen::informative_scores(rng, y);
  const kernels::Statistic stat = [](std::span<const double> s, std::span<const int> l) { return auroc(s, l); };
  const auto iv = bca_bootstrap(stat, p, y, BootstrapConfig{1000, 0.95, 7, true});
  const double point = auroc(p, y);
  EXPECT_LT(iv.lo, point);
  EXPECT_GT(iv.hi, point);
  EXPECT_FALSE(iv.few_resamples);
}

TEST(DeLong, IdenticalScoresGiveUnitPValue) {
  Rng rng(14);
  const auto y = gen::random_labels(rng, 80);
  const auto s = gen::informative_scores(rng, y);
  EXPECT_EQ(delong_test(s, s, y).p_value, 1.0);
}

TEST(DeLong, PerfectVersusRandomAgreesWithPermutation) {
  Rng rng(15);
  const auto y = gen::random_labels(rng, 200);
  std::vector<double> perfect(200), noise(200);
  for (std::size_t i = 0; i < 200; ++i) {
    perfect[i] = y[i] + 0.1 * rng.uniform();
    noise[i] = rng.uniform();
  }
  const auto r = delong_test(perfect, noise, y);
  EXPECT_LT(r.p_value, 0.001);

  // Paired permutation: swap the two scorers per sample at random.
  const double observed = std::abs(auroc(perfect, y) - auroc(noise, y));
  std::size_t extreme = 0;
  const std::size_t n_perm = 2000;
  for (std::size_t b = 0; b < n_perm; ++b) {
    std::vector<double> a(perfect), c(noise);
    for (std::size_t i = 0; i < 200; ++i)
      if (rng.uniform() < 0.5) std::swap(a[i], c[i]);
    if (std::abs(auroc(a, y) - auroc(c, y)) >= observed) ++extreme;
  }
  EXPECT_LT(static_cast<double>(extreme + 1) / (n_perm + 1), 0.001);
}

TEST(MetricReport, ScalarsCoverEveryBeta) {
  Rng rng(16);
  const auto y = gen::random_labels(rng, 60);
  const auto p = gen::informative_scores(rng, y);
  const std::vector<double> betas{1.0, 2.0};
  const auto r = evaluate_at(p, y, 0.5, betas);
  const auto s = r.scalars();
  EXPECT_TRUE(s.count("f_beta_" + beta_key(1.0)));
  EXPECT_TRUE(s.count("f_beta_" + beta_key(2.0)));
  EXPECT_EQ(s.at("auroc"), auroc(p, y));
}
