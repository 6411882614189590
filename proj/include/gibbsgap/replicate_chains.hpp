#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gibbsgap/errors.hpp"
#include "gibbsgap/model_core.hpp"
#include "gibbsgap/parallel.hpp"
#include "gibbsgap/rng.hpp"

namespace gibbsgap {

// Randomness of one transition of either replicated chain: J ~ Gamma(a + n/2, 1)
// and N_0..N_n iid standard normal. Feeding the same noise to two states is
// the coupling whose contraction the gamma formulas bound.
struct SharedNoise {
  double J = 1.0;
  std::vector<double> normals;
};

SharedNoise draw_shared_noise(std::size_t n, const Hyperparams& h, Rng& rng);

// (eta_0, ..., eta_n) with eta_0 = sqrt(n) mu and eta_i = theta_i - mu.
struct EtaState {
  std::vector<double> eta;
};

// (beta_1, ..., beta_n) with beta_i = theta_i - mu.
struct BetaState {
  std::vector<double> beta;
};

// Flat-prior chain transition as a deterministic function of (state, noise).
EtaState eta_map(const EtaState& state, const SharedNoise& noise, const DataSummary& d,
                 const Hyperparams& h);
void eta_map(std::span<const double> eta, const SharedNoise& noise, const DataSummary& d,
             const Hyperparams& h, std::span<double> out);

// Shrinkage-prior chain transition; requires h.shrinkage. The intermediate
// draw of mu is written to *mu_out when given.
BetaState beta_map(const BetaState& state, const SharedNoise& noise, const DataSummary& d,
                   const Hyperparams& h);
void beta_map(std::span<const double> beta, const SharedNoise& noise, const DataSummary& d,
              const Hyperparams& h, std::span<double> out, double* mu_out = nullptr);

// The same transitions realised by sequential conditional draws (B, then the
// location block). Independent reference for the mappings' marginal law.
EtaState eta_step_sequential(const EtaState& state, const DataSummary& d, const Hyperparams& h,
                             Rng& rng);
BetaState beta_step_sequential(const BetaState& state, const DataSummary& d, const Hyperparams& h,
                               Rng& rng);

// Contraction constant of the flat-prior eta-chain coupling. Unclamped: values
// >= 1 mean the bound says nothing for this (n, r).
double gamma_flat(std::size_t n, std::size_t r, double delta_prime, const Hyperparams& h);
double gamma_flat(const DataSummary& d, const Hyperparams& h);

// Contraction constant of the shrinkage-prior beta-chain coupling. Unclamped.
double gamma_shrink(std::size_t n, std::size_t r, double delta_prime, double y_bar,
                    const Hyperparams& h);
double gamma_shrink(const DataSummary& d, const Hyperparams& h);

// c / (1 - gamma) * gamma^m. Throws PreconditionError unless 0 <= gamma < 1.
double wasserstein_bound(double c_x, double gamma, std::size_t m);

// Random mapping bound to a dataset, usable by the coupling diagnostics.
template <class M>
concept RandomMapping = requires(const M& map, std::span<const double> x, const SharedNoise& noise,
                                 std::span<double> out, Rng& rng) {
  { map.dimension() } -> std::convertible_to<std::size_t>;
  { map.draw_noise(rng) } -> std::convertible_to<SharedNoise>;
  map.apply(x, noise, out);
  { map.center() } -> std::convertible_to<std::vector<double>>;
  { map.gamma() } -> std::convertible_to<double>;
};

// Mappings keep a reference to the data summary, which must outlive them.
class FlatEtaMapping {
 public:
  FlatEtaMapping(const DataSummary& d, Hyperparams h);
  std::size_t dimension() const { return d_.n + 1; }
  SharedNoise draw_noise(Rng& rng) const { return draw_shared_noise(d_.n, h_, rng); }
  void apply(std::span<const double> x, const SharedNoise& noise, std::span<double> out) const {
    eta_map(x, noise, d_, h_, out);
  }
  // (sqrt(n) y_bar, 0, ..., 0)
  std::vector<double> center() const;
  double gamma() const { return gamma_flat(d_, h_); }

 private:
  const DataSummary& d_;
  Hyperparams h_;
};

class ShrinkageBetaMapping {
 public:
  // Throws InvalidParameter without shrinkage parameters.
  ShrinkageBetaMapping(const DataSummary& d, Hyperparams h);
  std::size_t dimension() const { return d_.n; }
  SharedNoise draw_noise(Rng& rng) const { return draw_shared_noise(d_.n, h_, rng); }
  void apply(std::span<const double> x, const SharedNoise& noise, std::span<double> out) const {
    beta_map(x, noise, d_, h_, out);
  }
  // the zero vector
  std::vector<double> center() const;
  double gamma() const { return gamma_shrink(d_, h_); }

 private:
  const DataSummary& d_;
  Hyperparams h_;
};

double euclidean_distance(std::span<const double> x, std::span<const double> y);

using StatePair = std::pair<std::vector<double>, std::vector<double>>;
using PairSampler = std::function<StatePair(Rng&)>;

// Both states get iid N(0, scale^2) perturbations of `center` per coordinate.
PairSampler default_pair_sampler(std::vector<double> center, double scale = 1.0);

struct PairDiagnostic {
  double distance = 0.0;    // ||x - y||
  double mean_ratio = 0.0;  // mean of ||f(x) - f(y)|| / ||x - y|| over replicates
  double se = 0.0;
  bool violates = false;    // mean_ratio - 3 se > gamma_formula
};

// Monte Carlo check of E||f(x) - f(y)|| <= gamma ||x - y|| over finitely many
// pairs. A clean report is evidence, not a certificate: the bound is a
// statement about every pair.
struct ContractionReport {
  double gamma_formula = 0.0;
  double gamma_empirical_mean = 0.0;
  double gamma_empirical_ci_halfwidth = 0.0;  // 3 standard errors
  double max_pair_ratio = 0.0;
  std::size_t pairs_tested = 0;
  std::size_t pairs_skipped = 0;  // x == y
  std::size_t violations = 0;
  std::vector<PairDiagnostic> pairs;
};

struct ContractionOptions {
  std::size_t num_pairs = 100;
  std::size_t reps_per_pair = 10000;
  std::size_t workers = 1;
};

// Pair p uses make_substream(seed, p) both for the pair and for its replicates.
template <RandomMapping M>
ContractionReport contraction_check(const M& map, const ContractionOptions& options,
                                    std::uint64_t seed, const PairSampler& pair_sampler = {}) {
  if (options.num_pairs < 1 || options.reps_per_pair < 1) {
    throw PreconditionError("num_pairs and reps_per_pair must be >= 1");
  }
  const PairSampler sampler = pair_sampler ? pair_sampler : default_pair_sampler(map.center());
  ContractionReport report;
  report.gamma_formula = map.gamma();
  std::vector<std::optional<PairDiagnostic>> results(options.num_pairs);
  parallel_for_index(options.num_pairs, options.workers, [&](std::size_t p) {
    Rng rng = make_substream(seed, p);
    const auto [x, y] = sampler(rng);
    const double dist = euclidean_distance(x, y);
    if (!(dist > 0.0)) return;
    std::vector<double> fx(map.dimension());
    std::vector<double> fy(map.dimension());
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t k = 0; k < options.reps_per_pair; ++k) {
      const SharedNoise noise = map.draw_noise(rng);
      map.apply(x, noise, fx);
      map.apply(y, noise, fy);
      const double ratio = euclidean_distance(fx, fy) / dist;
      const double delta = ratio - mean;
      mean += delta / static_cast<double>(k + 1);
      m2 += delta * (ratio - mean);
    }
    PairDiagnostic diag;
    diag.distance = dist;
    diag.mean_ratio = mean;
    const double reps = static_cast<double>(options.reps_per_pair);
    diag.se = options.reps_per_pair > 1 ? std::sqrt(m2 / (reps - 1.0) / reps) : 0.0;
    diag.violates = diag.mean_ratio - 3.0 * diag.se > report.gamma_formula;
    results[p] = diag;
  });
  double sum = 0.0;
  double var_sum = 0.0;
  for (const auto& r : results) {
    if (!r) {
      ++report.pairs_skipped;
      continue;
    }
    report.pairs.push_back(*r);
    ++report.pairs_tested;
    if (r->violates) ++report.violations;
    sum += r->mean_ratio;
    var_sum += r->se * r->se;
    report.max_pair_ratio = std::max(report.max_pair_ratio, r->mean_ratio);
  }
  if (report.pairs_tested > 0) {
    const double p = static_cast<double>(report.pairs_tested);
    report.gamma_empirical_mean = sum / p;
    report.gamma_empirical_ci_halfwidth = 3.0 * std::sqrt(var_sum) / p;
  }
  return report;
}

struct CxEstimate {
  double mean = 0.0;
  double se = 0.0;
};

// Monte Carlo estimate of c(x) = E||x - f(x)|| over M independent noises.
template <RandomMapping M>
CxEstimate estimate_cx(const M& map, std::span<const double> x, std::size_t samples,
                       std::uint64_t seed) {
  if (samples < 2) throw PreconditionError("estimate_cx needs at least 2 samples");
  Rng rng = make_substream(seed, 0);
  std::vector<double> fx(map.dimension());
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    map.apply(x, map.draw_noise(rng), fx);
    const double dist = euclidean_distance(x, fx);
    const double delta = dist - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (dist - mean);
  }
  const double m = static_cast<double>(samples);
  return {mean, std::sqrt(m2 / (m - 1.0) / m)};
}

}  // namespace gibbsgap
