#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gibbsgap/distributions.hpp"

namespace gibbsgap {

// Normal prior on the overall mean, mu ~ N(w, 1/z).
struct Shrinkage {
  double w = 0.0;
  double z = 1.0;
};

// Prior A ~ IG(a, b), known error variance V (precision U = 1/V).
struct Hyperparams {
  double a = 1.0;
  double b = 1.0;
  double V = 1.0;
  std::optional<Shrinkage> shrinkage;

  double U() const { return 1.0 / V; }
  // Throws InvalidParameter.
  void validate() const;
  const Shrinkage& require_shrinkage() const;
};

// Sufficient statistics of a dataset. For the simple model (r = 1)
// group_means holds the observations themselves and delta == delta_prime.
// For r > 1, delta is set equal to delta_prime (between-group sum of squares);
// the replicated chains only read delta_prime.
struct DataSummary {
  std::size_t n = 0;
  std::size_t r = 1;
  double y_bar = 0.0;
  std::vector<double> group_means;
  double delta = 0.0;
  double delta_prime = 0.0;
};

// Compressed state of the theta-chain.
struct ThetaStats {
  double theta_bar = 0.0;
  double ss = 0.0;  // sum of squared deviations from theta_bar
};

// Simple model: one observation per group.
DataSummary summarize(std::span<const double> y);
// Row-major n x r matrix of replicates.
DataSummary summarize(std::span<const double> y, std::size_t r);
// Ragged rows are rejected.
DataSummary summarize_rows(const std::vector<std::vector<double>>& rows);
// Builds a summary directly from per-group means, each averaging r replicates.
DataSummary summarize_group_means(std::vector<double> group_means, std::size_t r);

ThetaStats theta_stats_of(std::span<const double> theta);

// Conditionals of the simple model's (mu, A) block and theta block.
InverseGamma cond_A_given_theta(const ThetaStats& stats, const Hyperparams& h, std::size_t n);
Normal cond_mu_given_theta_A(const ThetaStats& stats, double A, std::size_t n);
Normal cond_theta_i(double mu, double A, double y_i, const Hyperparams& h);

// Half-noncentrality of (A+V)/(AV) * sum (theta_i - theta_bar)^2 given (mu, A).
double noncentrality(double A, const Hyperparams& h, const DataSummary& d);

// Replicated model, eta parametrisation (eta_0 = sqrt(n) mu, eta_i = theta_i - mu, B = 1/A).
Normal cond_eta0_given_B(double B, const Hyperparams& h, const DataSummary& d);
Normal cond_eta_i_given(double eta0, double B, std::size_t i, const Hyperparams& h,
                        const DataSummary& d);
// B given the random effects; sum_sq = sum_{i>=1} eta_i^2 (or sum beta_i^2).
Gamma cond_B_given(double sum_sq, std::size_t n, const Hyperparams& h);

// Shrinkage-prior model, beta parametrisation (beta_i = theta_i - mu).
Normal cond_mu_given_beta(double beta_bar, const Hyperparams& h, const DataSummary& d);
Normal cond_beta_i_given(double mu, double B, std::size_t i, const Hyperparams& h,
                         const DataSummary& d);

}  // namespace gibbsgap
