#include "gibbsgap/rosenthal_chain.hpp"

#include <cmath>

#include "gibbsgap/errors.hpp"

namespace gibbsgap {

MuA draw_muA_given_theta(const ThetaStats& stats, const Hyperparams& h, std::size_t n, Rng& rng) {
  MuA out;
  out.A = sample(cond_A_given_theta(stats, h, n), rng);
  out.mu = sample(cond_mu_given_theta_A(stats, out.A, n), rng);
  return out;
}

ThetaStats draw_theta_stats(const MuA& mu_a, const DataSummary& d, const Hyperparams& h,
                            Rng& rng) {
  if (d.r != 1) throw PreconditionError("sufficient-statistic theta draw needs r = 1 data");
  const double A = mu_a.A;
  const double V = h.V;
  const double n = static_cast<double>(d.n);
  const double cond_var = A * V / (A + V);
  const Normal bar{(V * mu_a.mu + A * d.y_bar) / (A + V), cond_var / n};
  const NoncentralChiSq scaled_ss{n - 1.0, noncentrality(A, h, d)};
  ThetaStats out;
  out.theta_bar = sample(bar, rng);
  out.ss = cond_var * sample(scaled_ss, rng);
  return out;
}

std::vector<double> draw_theta_full(const MuA& mu_a, std::span<const double> y,
                                    const Hyperparams& h, Rng& rng) {
  std::vector<double> theta(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    theta[i] = sample(cond_theta_i(mu_a.mu, mu_a.A, y[i], h), rng);
  }
  return theta;
}

ThetaStats gibbs_step(const ThetaStats& stats, const DataSummary& d, const Hyperparams& h,
                      Rng& rng) {
  const MuA mu_a = draw_muA_given_theta(stats, h, d.n, rng);
  return draw_theta_stats(mu_a, d, h, rng);
}

namespace {

Normal aux_mu_given_A(double A, const DataSummary& d, const Hyperparams& h) {
  const double V = h.V;
  return {d.y_bar, (A + V) * (A + 4.0 * V) / (static_cast<double>(d.n) * A)};
}

}  // namespace

MuA draw_auxiliary(const DataSummary& d, const Hyperparams& h, Rng& rng) {
  MuA out;
  out.A = sample(InverseGamma{h.a, h.b}, rng);
  out.mu = sample(aux_mu_given_A(out.A, d, h), rng);
  return out;
}

double log_auxiliary_density(const MuA& mu_a, const DataSummary& d, const Hyperparams& h) {
  return log_pdf(InverseGamma{h.a, h.b}, mu_a.A) + log_pdf(aux_mu_given_A(mu_a.A, d, h), mu_a.mu);
}

double log_conditional_density(const MuA& mu_a, const ThetaStats& stats, const DataSummary& d,
                               const Hyperparams& h) {
  return log_pdf(cond_A_given_theta(stats, h, d.n), mu_a.A) +
         log_pdf(cond_mu_given_theta_A(stats, mu_a.A, d.n), mu_a.mu);
}

double log_weight(const AuxSample& s, const DataSummary& d, const Hyperparams& h) {
  return log_conditional_density(s.mu_a, s.theta_stats, d, h) -
         log_auxiliary_density(s.mu_a, d, h);
}

AuxSample draw_aux_sample(std::size_t l, const DataSummary& d, const Hyperparams& h, Rng& rng,
                          std::size_t* gibbs_steps) {
  if (l < 1) throw PreconditionError("l must be >= 1");
  if (d.n < 3) throw PreconditionError("trace-class condition requires n >= 3");
  AuxSample out;
  out.mu_a = draw_auxiliary(d, h, rng);
  if (gibbs_steps) *gibbs_steps = 0;
  ThetaStats state = draw_theta_stats(out.mu_a, d, h, rng);
  for (std::size_t step = 1; step < l; ++step) {
    state = gibbs_step(state, d, h, rng);
    if (gibbs_steps) ++*gibbs_steps;
  }
  out.theta_stats = state;
  return out;
}

ThetaChainTrace::ThetaChainTrace(const DataSummary& data, Hyperparams hyper)
    : hyper_(std::move(hyper)) {
  data_.n = data.n;
  data_.r = data.r;
  data_.y_bar = data.y_bar;
  data_.delta = data.delta;
  data_.delta_prime = data.delta_prime;
  hyper_.validate();
  if (data_.n < 3) throw PreconditionError("trace-class condition requires n >= 3");
  if (data_.r != 1) throw PreconditionError("the theta-chain estimator needs r = 1 data");
}

}  // namespace gibbsgap
