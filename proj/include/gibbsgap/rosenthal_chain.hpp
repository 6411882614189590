#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gibbsgap/model_core.hpp"
#include "gibbsgap/rng.hpp"

namespace gibbsgap {

// The (mu, A) block of the simple random-effects model.
struct MuA {
  double mu = 0.0;
  double A = 1.0;
};

// One draw used by the trace estimator: (mu*, A*) from the auxiliary density
// and the theta-chain state reached from it.
struct AuxSample {
  MuA mu_a;
  ThetaStats theta_stats;
};

// Exact draw from pi(mu, A | theta, y): A first, then mu given A.
MuA draw_muA_given_theta(const ThetaStats& stats, const Hyperparams& h, std::size_t n, Rng& rng);

// Sufficient-statistic draw of theta ~ pi(theta | mu, A, y): one normal for
// theta_bar and one noncentral chi-square for the sum of squares. O(1) in n.
// Requires d.r == 1.
ThetaStats draw_theta_stats(const MuA& mu_a, const DataSummary& d, const Hyperparams& h,
                            Rng& rng);

// Full-vector draw of theta; O(n). Kept as the reference for draw_theta_stats.
std::vector<double> draw_theta_full(const MuA& mu_a, std::span<const double> y,
                                    const Hyperparams& h, Rng& rng);

// One transition of the theta-marginal chain.
ThetaStats gibbs_step(const ThetaStats& stats, const DataSummary& d, const Hyperparams& h,
                      Rng& rng);

// Auxiliary density omega(mu, A) = IG(A; a, b) * N(mu; y_bar, (A+V)(A+4V)/(nA)).
MuA draw_auxiliary(const DataSummary& d, const Hyperparams& h, Rng& rng);
double log_auxiliary_density(const MuA& mu_a, const DataSummary& d, const Hyperparams& h);

// log pi(mu, A | theta, y), theta entering through its statistics.
double log_conditional_density(const MuA& mu_a, const ThetaStats& stats, const DataSummary& d,
                               const Hyperparams& h);

// log[ pi(mu*, A* | theta*) / omega(mu*, A*) ].
double log_weight(const AuxSample& s, const DataSummary& d, const Hyperparams& h);

// Draws (mu*, A*) ~ omega, theta' ~ pi(theta | mu*, A*, y), then runs l - 1
// Gibbs transitions from theta'. The returned sample keeps the original
// (mu*, A*). Throws PreconditionError unless l >= 1 and n >= 3 (the
// theta-chain kernel is trace-class only for n >= 3).
// If gibbs_steps is non-null it receives the number of transitions executed.
AuxSample draw_aux_sample(std::size_t l, const DataSummary& d, const Hyperparams& h, Rng& rng,
                          std::size_t* gibbs_steps = nullptr);

// Trace estimator adaptor for the theta-marginal chain of the simple model.
class ThetaChainTrace {
 public:
  using Sample = AuxSample;

  // Validates hyperparameters and the trace-class precondition n >= 3.
  // Only the scalar statistics of `data` are retained.
  ThetaChainTrace(const DataSummary& data, Hyperparams hyper);

  AuxSample draw(std::size_t l, Rng& rng) const { return draw_aux_sample(l, data_, hyper_, rng); }
  double log_weight(const AuxSample& s) const { return gibbsgap::log_weight(s, data_, hyper_); }

 private:
  DataSummary data_;
  Hyperparams hyper_;
};

}  // namespace gibbsgap
