#pragma once

#include <cstdint>
#include <random>

namespace gibbsgap {

using Rng = std::mt19937_64;

// Independent stream `stream` derived from a master seed. The mapping only
// depends on (seed, stream), so work partitioned by index reproduces the same
// draws regardless of how many threads execute it.
Rng make_substream(std::uint64_t seed, std::uint64_t stream);

// Master seed for an independent purpose (e.g. data vs estimator) so two
// consumers of one user seed never share substreams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);

// Uniform draw on the open interval (0, 1).
inline double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace gibbsgap
