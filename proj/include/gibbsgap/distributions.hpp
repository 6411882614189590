#pragma once

#include <string>
#include <variant>

#include "gibbsgap/rng.hpp"

namespace gibbsgap {

struct Normal {
  double mean = 0.0;
  double variance = 1.0;
};

// Rate parameterisation: density proportional to x^(shape-1) exp(-rate x).
struct Gamma {
  double shape = 1.0;
  double rate = 1.0;
};

// Density proportional to x^(-shape-1) exp(-scale / x).
struct InverseGamma {
  double shape = 1.0;
  double scale = 1.0;
};

// Noncentral chi-square with the half-noncentrality convention: the law of
// a central chi-square with df + 2M degrees of freedom, M ~ Poisson(noncentrality).
// Mean df + 2*noncentrality, variance 2*df + 8*noncentrality.
struct NoncentralChiSq {
  double df = 1.0;
  double noncentrality = 0.0;
};

using DistSpec = std::variant<Normal, Gamma, InverseGamma, NoncentralChiSq>;

// Throws InvalidParameter when a parameter is outside its domain.
void validate(const DistSpec& spec);

double sample(const DistSpec& spec, Rng& rng);

// Fully normalised natural-log density; -inf outside the support.
double log_pdf(const DistSpec& spec, double x);

double mean(const DistSpec& spec);
// +inf where the variance does not exist (InverseGamma with shape <= 2).
double variance(const DistSpec& spec);

std::string describe(const DistSpec& spec);

// Raw samplers used on hot paths; parameters are not validated.
double sample_std_normal(Rng& rng);
// Marsaglia-Tsang squeeze/rejection, boosted by U^(1/shape) for shape < 1.
double sample_gamma(double shape, double rate, Rng& rng);
long long sample_poisson(double mean, Rng& rng);
double sample_noncentral_chisq(double df, double noncentrality, Rng& rng);

}  // namespace gibbsgap
