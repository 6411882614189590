#include "gibbsgap/replicate_chains.hpp"

#include <numeric>
#include <string>

#include "gibbsgap/distributions.hpp"
#include "gibbsgap/errors.hpp"

namespace gibbsgap {

namespace {

double sum_squares(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw InvalidParameter(std::string(what) + ": expected length " + std::to_string(want) +
                           ", got " + std::to_string(got));
  }
}

}  // namespace

SharedNoise draw_shared_noise(std::size_t n, const Hyperparams& h, Rng& rng) {
  SharedNoise noise;
  noise.J = sample_gamma(h.a + 0.5 * static_cast<double>(n), 1.0, rng);
  noise.normals.resize(n + 1);
  for (double& z : noise.normals) z = sample_std_normal(rng);
  return noise;
}

void eta_map(std::span<const double> eta, const SharedNoise& noise, const DataSummary& d,
             const Hyperparams& h, std::span<double> out) {
  const std::size_t n = d.n;
  require_size(eta.size(), n + 1, "eta_map state");
  require_size(out.size(), n + 1, "eta_map output");
  require_size(noise.normals.size(), n + 1, "eta_map noise");
  const double rU = static_cast<double>(d.r) * h.U();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double B = noise.J / (h.b + 0.5 * sum_squares(eta.subspan(1)));
  const double eta0 = sqrt_n * d.y_bar + std::sqrt((B + rU) / (rU * B)) * noise.normals[0];
  const double shrink = rU / (B + rU);
  const double sd = 1.0 / std::sqrt(B + rU);
  const double shift = eta0 / sqrt_n;
  out[0] = eta0;
  for (std::size_t i = 1; i <= n; ++i) {
    out[i] = shrink * (d.group_means[i - 1] - shift) + sd * noise.normals[i];
  }
}

EtaState eta_map(const EtaState& state, const SharedNoise& noise, const DataSummary& d,
                 const Hyperparams& h) {
  EtaState out;
  out.eta.resize(d.n + 1);
  eta_map(state.eta, noise, d, h, out.eta);
  return out;
}

void beta_map(std::span<const double> beta, const SharedNoise& noise, const DataSummary& d,
              const Hyperparams& h, std::span<double> out, double* mu_out) {
  const Shrinkage& s = h.require_shrinkage();
  const std::size_t n = d.n;
  require_size(beta.size(), n, "beta_map state");
  require_size(out.size(), n, "beta_map output");
  require_size(noise.normals.size(), n + 1, "beta_map noise");
  const double rU = static_cast<double>(d.r) * h.U();
  const double nrU = static_cast<double>(n) * rU;
  const double beta_bar = std::accumulate(beta.begin(), beta.end(), 0.0) / static_cast<double>(n);
  const double B = noise.J / (h.b + 0.5 * sum_squares(beta));
  const double mu = (nrU * (d.y_bar - beta_bar) + s.z * s.w) / (nrU + s.z) +
                    noise.normals[0] / std::sqrt(nrU + s.z);
  if (mu_out) *mu_out = mu;
  const double shrink = rU / (B + rU);
  const double sd = 1.0 / std::sqrt(B + rU);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = shrink * (d.group_means[i] - mu) + sd * noise.normals[i + 1];
  }
}

BetaState beta_map(const BetaState& state, const SharedNoise& noise, const DataSummary& d,
                   const Hyperparams& h) {
  BetaState out;
  out.beta.resize(d.n);
  beta_map(state.beta, noise, d, h, out.beta);
  return out;
}

EtaState eta_step_sequential(const EtaState& state, const DataSummary& d, const Hyperparams& h,
                             Rng& rng) {
  const std::span<const double> eta(state.eta);
  require_size(eta.size(), d.n + 1, "eta state");
  const double B = sample(cond_B_given(sum_squares(eta.subspan(1)), d.n, h), rng);
  EtaState out;
  out.eta.resize(d.n + 1);
  out.eta[0] = sample(cond_eta0_given_B(B, h, d), rng);
  for (std::size_t i = 0; i < d.n; ++i) {
    out.eta[i + 1] = sample(cond_eta_i_given(out.eta[0], B, i, h, d), rng);
  }
  return out;
}

BetaState beta_step_sequential(const BetaState& state, const DataSummary& d, const Hyperparams& h,
                               Rng& rng) {
  require_size(state.beta.size(), d.n, "beta state");
  const double beta_bar =
      std::accumulate(state.beta.begin(), state.beta.end(), 0.0) / static_cast<double>(d.n);
  const double B = sample(cond_B_given(sum_squares(state.beta), d.n, h), rng);
  const double mu = sample(cond_mu_given_beta(beta_bar, h, d), rng);
  BetaState out;
  out.beta.resize(d.n);
  for (std::size_t i = 0; i < d.n; ++i) out.beta[i] = sample(cond_beta_i_given(mu, B, i, h, d), rng);
  return out;
}

double gamma_flat(std::size_t n, std::size_t r, double delta_prime, const Hyperparams& h) {
  if (n < 2) throw PreconditionError("gamma_flat requires n >= 2");
  const double nd = static_cast<double>(n);
  const double rU = static_cast<double>(r) * h.U();
  const double a2n = 2.0 * h.a + nd;
  const double b = h.b;
  const double drift = (delta_prime / nd) * nd * a2n * (a2n + 2.0) / (2.0 * rU * rU * b * b * b);
  const double spread = nd / (2.0 * b * rU);
  const double scale = 11.0 / (a2n - 2.0);
  return std::sqrt(drift + spread + scale);
}

double gamma_flat(const DataSummary& d, const Hyperparams& h) {
  return gamma_flat(d.n, d.r, d.delta_prime, h);
}

double gamma_shrink(std::size_t n, std::size_t r, double delta_prime, double y_bar,
                    const Hyperparams& h) {
  const Shrinkage& s = h.require_shrinkage();
  const double nd = static_cast<double>(n);
  const double rd = static_cast<double>(r);
  const double U = h.U();
  const double b = h.b;
  const double lead = (2.0 * h.a + nd + 2.0) * (2.0 * h.a + nd + 2.0) / 4.0;
  const double r2U2 = rd * rd * U * U;
  const double dev = s.w - y_bar;
  const double bracket = 4.0 * delta_prime / (b * b * b * r2U2) + 32.0 / (b * b * r2U2) +
                         16.0 * nd * dev * dev / (b * b * b * r2U2) +
                         2.0 / (b * b * b * r2U2 * rd * U);
  const double prior = 4.0 * nd * nd * r2U2 / (s.z * s.z);
  const double spread = nd / (2.0 * b * rd * U);
  return std::sqrt(lead * bracket + prior + spread);
}

double gamma_shrink(const DataSummary& d, const Hyperparams& h) {
  return gamma_shrink(d.n, d.r, d.delta_prime, d.y_bar, h);
}

double wasserstein_bound(double c_x, double gamma, std::size_t m) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw PreconditionError("Wasserstein bound needs 0 <= gamma < 1");
  }
  if (!(c_x >= 0.0)) throw InvalidParameter("c(x) must be >= 0");
  return c_x * std::pow(gamma, static_cast<double>(m)) / (1.0 - gamma);
}

FlatEtaMapping::FlatEtaMapping(const DataSummary& d, Hyperparams h) : d_(d), h_(std::move(h)) {
  h_.validate();
  if (d_.n < 2) throw PreconditionError("replicated chains require n >= 2");
}

std::vector<double> FlatEtaMapping::center() const {
  std::vector<double> c(d_.n + 1, 0.0);
  c[0] = std::sqrt(static_cast<double>(d_.n)) * d_.y_bar;
  return c;
}

ShrinkageBetaMapping::ShrinkageBetaMapping(const DataSummary& d, Hyperparams h)
    : d_(d), h_(std::move(h)) {
  h_.validate();
  h_.require_shrinkage();
  if (d_.n < 2) throw PreconditionError("replicated chains require n >= 2");
}

std::vector<double> ShrinkageBetaMapping::center() const { return std::vector<double>(d_.n, 0.0); }

double euclidean_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

PairSampler default_pair_sampler(std::vector<double> center, double scale) {
  return [center = std::move(center), scale](Rng& rng) {
    StatePair pair{center, center};
    for (double& v : pair.first) v += scale * sample_std_normal(rng);
    for (double& v : pair.second) v += scale * sample_std_normal(rng);
    return pair;
  };
}

}  // namespace gibbsgap
