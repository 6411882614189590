#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gibbsgap/errors.hpp"
#include "gibbsgap/parallel.hpp"
#include "gibbsgap/rng.hpp"
#include "gibbsgap/weight_accumulator.hpp"

namespace gibbsgap {

enum class GapStatus { ok, s_not_above_one, high_variance };

std::string_view to_string(GapStatus status);
std::optional<GapStatus> parse_gap_status(std::string_view text);

struct GapEstimate {
  std::size_t l = 0;
  std::size_t N = 0;
  double s_hat = 0.0;
  double s_se = 0.0;
  std::optional<double> u_hat;  // defined iff s_hat > 1
  std::optional<double> u_se;
  GapStatus status = GapStatus::ok;
  double max_weight_share = 0.0;
};

struct BoundEstimate {
  double u_hat = 0.0;
  double u_se = 0.0;
};

// u = (s - 1)^(1/l) with a first-order delta-method standard error.
// Returns nullopt when s_hat <= 1 (no bound available).
std::optional<BoundEstimate> u_from_s(double s_hat, double s_se, std::size_t l);

// A chain whose l-step trace s_l = E[exp(log_weight(draw(l)))].
template <class C>
concept TraceChain = requires(const C& chain, std::size_t l, Rng& rng,
                              const typename C::Sample& sample) {
  { chain.draw(l, rng) } -> std::convertible_to<typename C::Sample>;
  { chain.log_weight(sample) } -> std::convertible_to<double>;
};

struct EstimateOptions {
  std::size_t workers = 1;
  // Replicates sharing one random substream. Part of the reproducibility
  // contract: changing it changes the draws.
  std::size_t block_size = 1024;
  // A single weight carrying more than this share of the sum marks the
  // estimate as high_variance.
  double dominance_threshold = 0.5;
};

// Monte Carlo estimate of s_l from N iid importance weights, and of the bound
// u_l on the second-largest eigenvalue. Block b of replicates draws from
// make_substream(seed, b); block accumulators are merged in a fixed tree
// order, so the result is bit-identical for any worker count.
template <TraceChain C>
GapEstimate estimate(const C& chain, std::size_t l, std::size_t N, std::uint64_t seed,
                     const EstimateOptions& options = {}) {
  if (l < 1) throw PreconditionError("l must be >= 1");
  if (N < 2) throw PreconditionError("N must be >= 2");
  if (options.block_size < 1) throw PreconditionError("block_size must be >= 1");
  const std::size_t blocks = (N + options.block_size - 1) / options.block_size;
  std::vector<WeightAccumulator> partial(blocks);
  parallel_for_index(blocks, options.workers, [&](std::size_t b) {
    Rng rng = make_substream(seed, b);
    const std::size_t begin = b * options.block_size;
    const std::size_t end = std::min(N, begin + options.block_size);
    WeightAccumulator acc;
    for (std::size_t i = begin; i < end; ++i) acc.add(chain.log_weight(chain.draw(l, rng)));
    partial[b] = acc;
  });
  const WeightAccumulator total =
      tree_reduce(std::move(partial), [](WeightAccumulator lhs, const WeightAccumulator& rhs) {
        lhs.merge(rhs);
        return lhs;
      });

  GapEstimate out;
  out.l = l;
  out.N = N;
  out.s_hat = total.mean();
  out.s_se = total.standard_error();
  out.max_weight_share = total.max_share();
  if (const auto bound = u_from_s(out.s_hat, out.s_se, l)) {
    out.u_hat = bound->u_hat;
    out.u_se = bound->u_se;
    out.status = GapStatus::ok;
  } else {
    out.status = GapStatus::s_not_above_one;
  }
  if (out.max_weight_share > options.dominance_threshold) out.status = GapStatus::high_variance;
  return out;
}

// Exact trace quantities of the stationary Gaussian AR(1) kernel
// x' = rho x + sqrt(1 - rho^2) Z, whose eigenvalues are rho^i.
struct ExactTrace {
  double s = 0.0;
  double u = 0.0;
};
ExactTrace ar1_exact_trace(double rho, std::size_t l);

// Trace estimator for the AR(1) kernel: x ~ N(0, proposal_sd^2), weight
// k^l(x | x) / N(x; 0, proposal_sd^2) with k^l(. | x) = N(rho^l x, 1 - rho^(2l)).
class Ar1TraceChain {
 public:
  struct Sample {
    std::size_t l = 1;
    double x = 0.0;
  };

  Ar1TraceChain(double rho, double proposal_sd);

  Sample draw(std::size_t l, Rng& rng) const;
  double log_weight(const Sample& s) const;

  double rho() const { return rho_; }
  double proposal_sd() const { return proposal_sd_; }

 private:
  double rho_;
  double proposal_sd_;
};

// Proposal scale giving a weight variance of about half the squared mean:
// sd^2 = 4 (1 + rho^l) / (1 - rho^l).
double ar1_default_proposal_sd(double rho, std::size_t l);

}  // namespace gibbsgap
