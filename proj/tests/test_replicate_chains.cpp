#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "gibbsgap/data_io.hpp"
#include "gibbsgap/errors.hpp"
#include "gibbsgap/replicate_chains.hpp"
#include "support/stat_oracles.hpp"

namespace gibbsgap {
namespace {

using testing::moments;
using testing::within_se;

SharedNoise quiet_noise(std::size_t n, double J) {
  return SharedNoise{J, std::vector<double>(n + 1, 0.0)};
}

DataSummary flat_data(std::size_t n, std::size_t r, double level) {
  return summarize_group_means(std::vector<double>(n, level), r);
}

DataSummary simulated_replicated(std::size_t n, std::size_t r, std::uint64_t seed) {
  SimConfig cfg;
  cfg.n = n;
  cfg.r = r;
  cfg.seed = seed;
  cfg.group_means_only = true;
  return simulate(cfg).summary;
}

TEST(EtaMap, FixedNoiseHandValues) {
  const std::size_t n = 6;
  const DataSummary d = flat_data(n, 3, 1.5);
  const Hyperparams h{1.0, 2.0, 1.0, {}};
  const EtaState zero{std::vector<double>(n + 1, 0.0)};
  const EtaState out = eta_map(zero, quiet_noise(n, h.a + 0.5 * n), d, h);
  EXPECT_DOUBLE_EQ(out.eta[0], std::sqrt(6.0) * 1.5);
  for (std::size_t i = 1; i <= n; ++i) EXPECT_NEAR(out.eta[i], 0.0, 1e-15);
}

TEST(EtaMap, DeterministicGivenNoise) {
  const DataSummary d = simulated_replicated(8, 5, 1);
  const Hyperparams h{1.0, 1.0, 1.0, {}};
  Rng rng(2);
  const SharedNoise noise = draw_shared_noise(8, h, rng);
  const EtaState x{std::vector<double>{0.3, -1.0, 0.5, 0.2, 0.0, 1.0, -0.4, 0.7, 0.1}};
  const EtaState a = eta_map(x, noise, d, h);
  const EtaState b = eta_map(x, noise, d, h);
  EXPECT_EQ(a.eta, b.eta);
}

TEST(EtaMap, UnbiasedLocation) {
  const std::size_t n = 10;
  const DataSummary d = simulated_replicated(n, 4, 3);
  const Hyperparams h{1.0, 1.0, 1.0, {}};
  const EtaState x{std::vector<double>(n + 1, 0.5)};
  Rng rng(4);
  std::vector<double> eta0(100000);
  for (double& v : eta0) v = eta_map(x, draw_shared_noise(n, h, rng), d, h).eta[0];
  const auto m = moments(eta0);
  EXPECT_TRUE(within_se(m.mean, std::sqrt(10.0) * d.y_bar, m.mean_se)) << m.mean;
}

TEST(EtaMap, MatchesSequentialConditionals) {
  const std::size_t n = 10;
  const DataSummary d = simulated_replicated(n, 3, 5);
  const Hyperparams h{1.5, 1.0, 2.0, {}};
  const EtaState x{std::vector<double>{1.0, 0.4, -0.3, 0.8, 0.0, -1.1, 0.6, 0.2, -0.5, 0.9, 0.1}};
  Rng map_rng(6);
  Rng seq_rng(7);
  const std::size_t reps = 100000;
  std::vector<double> map_eta0(reps), seq_eta0(reps), map_norm(reps), seq_norm(reps);
  auto sq_norm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return s;
  };
  for (std::size_t k = 0; k < reps; ++k) {
    const EtaState a = eta_map(x, draw_shared_noise(n, h, map_rng), d, h);
    const EtaState b = eta_step_sequential(x, d, h, seq_rng);
    map_eta0[k] = a.eta[0];
    seq_eta0[k] = b.eta[0];
    map_norm[k] = sq_norm(a.eta);
    seq_norm[k] = sq_norm(b.eta);
  }
  EXPECT_GT(testing::ks_two_sample_p(map_eta0, seq_eta0), 1e-3);
  EXPECT_GT(testing::ks_two_sample_p(map_norm, seq_norm), 1e-3);
}

TEST(BetaMap, FixedNoiseHandValues) {
  const std::size_t n = 5;
  const DataSummary d = flat_data(n, 2, -0.75);
  const Hyperparams h{1.0, 1.0, 1.0, Shrinkage{-0.75, 3.0}};
  const BetaState zero{std::vector<double>(n, 0.0)};
  double mu = 0.0;
  std::vector<double> out(n);
  beta_map(zero.beta, quiet_noise(n, 2.0), d, h, out, &mu);
  EXPECT_NEAR(mu, -0.75, 1e-15);
  for (double b : out) EXPECT_NEAR(b, 0.0, 1e-15);
}

TEST(BetaMap, PriorDominantLimit) {
  const std::size_t n = 12;
  const DataSummary d = simulated_replicated(n, 4, 8);
  const Hyperparams h{1.0, 1.0, 1.0, Shrinkage{2.5, 1.0e12}};
  Rng rng(9);
  const std::vector<double> beta(n, 0.3);
  std::vector<double> out(n);
  for (int k = 0; k < 1000; ++k) {
    SharedNoise noise = draw_shared_noise(n, h, rng);
    noise.normals[0] = std::clamp(noise.normals[0], -5.0, 5.0);
    double mu = 0.0;
    beta_map(beta, noise, d, h, out, &mu);
    ASSERT_NEAR(mu, 2.5, 1e-4);
  }
}

TEST(BetaMap, DeterministicAndRequiresShrinkage) {
  const std::size_t n = 4;
  const DataSummary d = simulated_replicated(n, 2, 10);
  Hyperparams h{1.0, 1.0, 1.0, Shrinkage{0.0, 5.0}};
  Rng rng(11);
  const SharedNoise noise = draw_shared_noise(n, h, rng);
  const BetaState x{{0.1, 0.2, -0.3, 0.4}};
  EXPECT_EQ(beta_map(x, noise, d, h).beta, beta_map(x, noise, d, h).beta);
  h.shrinkage.reset();
  EXPECT_THROW(beta_map(x, noise, d, h), InvalidParameter);
  EXPECT_THROW(ShrinkageBetaMapping(d, h), InvalidParameter);
}

TEST(BetaMap, MatchesSequentialConditionals) {
  const std::size_t n = 10;
  const DataSummary d = simulated_replicated(n, 3, 12);
  const Hyperparams h{1.5, 1.0, 2.0, Shrinkage{0.2, 4.0}};
  const BetaState x{{0.4, -0.3, 0.8, 0.0, -1.1, 0.6, 0.2, -0.5, 0.9, 0.1}};
  Rng map_rng(13);
  Rng seq_rng(14);
  const std::size_t reps = 100000;
  std::vector<double> map_first(reps), seq_first(reps), map_norm(reps), seq_norm(reps);
  for (std::size_t k = 0; k < reps; ++k) {
    const BetaState a = beta_map(x, draw_shared_noise(n, h, map_rng), d, h);
    const BetaState b = beta_step_sequential(x, d, h, seq_rng);
    map_first[k] = a.beta[0];
    seq_first[k] = b.beta[0];
    map_norm[k] = euclidean_distance(a.beta, std::vector<double>(n, 0.0));
    seq_norm[k] = euclidean_distance(b.beta, std::vector<double>(n, 0.0));
  }
  EXPECT_GT(testing::ks_two_sample_p(map_first, seq_first), 1e-3);
  EXPECT_GT(testing::ks_two_sample_p(map_norm, seq_norm), 1e-3);
}

TEST(GammaFlat, DirectEvaluations) {
  const Hyperparams h{1.0, 1.0, 1.0, {}};
  EXPECT_NEAR(gamma_flat(2, 1, 0.0, h), std::sqrt(6.5), 1e-14);
  EXPECT_NEAR(gamma_flat(100, 10000, 0.0, h), std::sqrt(0.115), 1e-14);
  EXPECT_NEAR(gamma_flat(100, 10000, 0.0, h), 0.3391, 1e-4);
  EXPECT_THROW(gamma_flat(1, 1, 0.0, h), PreconditionError);
}

TEST(GammaFlat, DecreasingInR) {
  for (const Hyperparams& h : {Hyperparams{1.0, 1.0, 1.0, {}}, Hyperparams{3.0, 0.5, 2.0, {}}}) {
    for (std::size_t n : {5u, 50u, 500u}) {
      double previous = gamma_flat(n, 1, 0.7 * n, h);
      for (std::size_t r = 2; r < 100000; r *= 3) {
        const double g = gamma_flat(n, r, 0.7 * n, h);
        EXPECT_LT(g, previous) << n << " " << r;
        previous = g;
      }
    }
  }
}

TEST(GammaFlat, QuadraticReplicationRegime) {
  const Hyperparams h{1.0, 1.0, 1.0, {}};
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t n : {10u, 100u, 1000u}) {
    const double g = gamma_flat(n, n * n, static_cast<double>(n), h);
    EXPECT_LT(g, previous);
    previous = g;
  }
  EXPECT_LT(previous, 0.15);
  EXPECT_NEAR(previous, 0.11, 0.005);
}

TEST(GammaShrink, DirectEvaluation) {
  const Hyperparams h{1.0, 1.0, 1.0, Shrinkage{0.4, 1.0}};
  EXPECT_NEAR(gamma_shrink(2, 1, 0.0, 0.4, h), std::sqrt(323.0), 1e-12);
  EXPECT_NEAR(std::sqrt(323.0), 17.972, 1e-3);
}

TEST(GammaShrink, AddendStructure) {
  const Hyperparams base{1.2, 0.8, 1.5, Shrinkage{1.0, 30.0}};
  // (w - y_bar)^2 enters only through its own addend
  const double g_at = gamma_shrink(20, 4, 3.0, 1.0, base);
  const double g_off = gamma_shrink(20, 4, 3.0, 0.0, base);
  const double lead = std::pow(2.0 * 1.2 + 20.0 + 2.0, 2) / 4.0;
  const double U = 1.0 / 1.5;
  const double third = lead * 16.0 * 20.0 * 1.0 / (std::pow(0.8, 3) * 16.0 * U * U);
  EXPECT_NEAR(g_off * g_off - g_at * g_at, third, 1e-9 * third);
  // z -> infinity removes the prior addend
  Hyperparams wide = base;
  wide.shrinkage->z = 1.0e200;
  const double prior = 4.0 * 400.0 * 16.0 * U * U / (30.0 * 30.0);
  EXPECT_NEAR(g_at * g_at - std::pow(gamma_shrink(20, 4, 3.0, 1.0, wide), 2), prior, 1e-9);
  Hyperparams none = base;
  none.shrinkage.reset();
  EXPECT_THROW(gamma_shrink(20, 4, 3.0, 1.0, none), InvalidParameter);
}

TEST(GammaShrink, BelowOneInDominantRegime) {
  for (std::size_t n : {1000u, 3000u}) {
    const double nr = static_cast<double>(n) * static_cast<double>(n * n);
    const Hyperparams h{1.0, 1.0, 1.0, Shrinkage{0.0, nr * nr}};
    EXPECT_LT(gamma_shrink(n, n * n, static_cast<double>(n), 0.0, h), 1.0) << n;
  }
}

TEST(WassersteinBound, HandValues) {
  EXPECT_DOUBLE_EQ(wasserstein_bound(1.0, 0.5, 3), 0.25);
  EXPECT_DOUBLE_EQ(wasserstein_bound(2.0, 0.2, 0), 2.5);
  EXPECT_EQ(wasserstein_bound(3.0, 0.0, 1), 0.0);
  EXPECT_THROW(wasserstein_bound(1.0, 1.0, 3), PreconditionError);
  EXPECT_THROW(wasserstein_bound(1.0, -0.1, 3), PreconditionError);
}

TEST(ContractionCheck, CoupledIdenticalStatesCoincide) {
  const DataSummary d = simulated_replicated(6, 10, 15);
  const FlatEtaMapping map(d, Hyperparams{1.0, 1.0, 1.0, {}});
  Rng rng(16);
  const auto x = map.center();
  std::vector<double> fx(map.dimension()), fy(map.dimension());
  for (int k = 0; k < 100; ++k) {
    const SharedNoise noise = map.draw_noise(rng);
    map.apply(x, noise, fx);
    map.apply(x, noise, fy);
    ASSERT_EQ(euclidean_distance(fx, fy), 0.0);
  }
  const PairSampler same = [&](Rng&) { return StatePair{x, x}; };
  const auto report = contraction_check(map, {.num_pairs = 5, .reps_per_pair = 10}, 1, same);
  EXPECT_EQ(report.pairs_tested, 0u);
  EXPECT_EQ(report.pairs_skipped, 5u);
  EXPECT_EQ(report.violations, 0u);
}

TEST(ContractionCheck, FlatChainWithinFormula) {
  const std::size_t n = 20;
  const DataSummary d = flat_data(n, 10000, 0.0);
  const FlatEtaMapping map(d, Hyperparams{1.0, 1.0, 1.0, {}});
  const auto report = contraction_check(map, {.num_pairs = 20, .reps_per_pair = 2000}, 17);
  EXPECT_EQ(report.pairs_tested, 20u);
  EXPECT_EQ(report.violations, 0u);
  EXPECT_LE(report.gamma_empirical_mean, report.gamma_formula);
  EXPECT_NEAR(report.gamma_formula, gamma_flat(n, 10000, 0.0, Hyperparams{1.0, 1.0, 1.0, {}}),
              1e-15);
}

TEST(ContractionCheck, ShrinkageChainWithinFormula) {
  const std::size_t n = 30;
  const std::size_t r = 900;
  const DataSummary d = simulated_replicated(n, r, 18);
  const double nr = static_cast<double>(n * r);
  const ShrinkageBetaMapping map(d, Hyperparams{1.0, 1.0, 1.0, Shrinkage{d.y_bar, nr * nr}});
  const auto report = contraction_check(map, {.num_pairs = 10, .reps_per_pair = 2000}, 19);
  EXPECT_LT(report.gamma_formula, 1.0);
  EXPECT_EQ(report.violations, 0u);
  EXPECT_LE(report.gamma_empirical_mean, report.gamma_formula);
}

TEST(ContractionCheck, WorkerCountInvariant) {
  const DataSummary d = simulated_replicated(8, 50, 20);
  const FlatEtaMapping map(d, Hyperparams{1.0, 1.0, 1.0, {}});
  const auto a = contraction_check(map, {.num_pairs = 9, .reps_per_pair = 200, .workers = 1}, 3);
  const auto b = contraction_check(map, {.num_pairs = 9, .reps_per_pair = 200, .workers = 4}, 3);
  EXPECT_EQ(a.gamma_empirical_mean, b.gamma_empirical_mean);
  EXPECT_EQ(a.gamma_empirical_ci_halfwidth, b.gamma_empirical_ci_halfwidth);
  EXPECT_EQ(a.max_pair_ratio, b.max_pair_ratio);
}

TEST(EstimateCx, NonnegativeDeterministicAndSelfConsistent) {
  const DataSummary d = simulated_replicated(15, 100, 21);
  const FlatEtaMapping map(d, Hyperparams{1.0, 1.0, 1.0, {}});
  const auto x = map.center();
  const CxEstimate a = estimate_cx(map, x, 20000, 4);
  const CxEstimate a2 = estimate_cx(map, x, 20000, 4);
  const CxEstimate b = estimate_cx(map, x, 20000, 5);
  EXPECT_GE(a.mean, 0.0);
  EXPECT_EQ(a.mean, a2.mean);
  EXPECT_EQ(a.se, a2.se);
  EXPECT_TRUE(within_se(a.mean, b.mean, std::hypot(a.se, b.se), 4.0));
  EXPECT_THROW(estimate_cx(map, x, 1, 4), PreconditionError);
}

}  // namespace
}  // namespace gibbsgap
