#include "gibbsgap/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "gibbsgap/errors.hpp"

namespace gibbsgap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

void require(bool ok, const char* family, const char* what) {
  if (!ok) throw InvalidParameter(std::string(family) + ": " + what);
}

}  // namespace

void validate(const DistSpec& spec) {
  std::visit(Overloaded{
                 [](const Normal& d) {
                   require(std::isfinite(d.mean), "Normal", "mean must be finite");
                   require(positive(d.variance), "Normal", "variance must be > 0");
                 },
                 [](const Gamma& d) {
                   require(positive(d.shape), "Gamma", "shape must be > 0");
                   require(positive(d.rate), "Gamma", "rate must be > 0");
                 },
                 [](const InverseGamma& d) {
                   require(positive(d.shape), "InverseGamma", "shape must be > 0");
                   require(positive(d.scale), "InverseGamma", "scale must be > 0");
                 },
                 [](const NoncentralChiSq& d) {
                   require(positive(d.df), "NoncentralChiSq", "df must be > 0");
                   require(std::isfinite(d.noncentrality) && d.noncentrality >= 0.0,
                           "NoncentralChiSq", "noncentrality must be >= 0");
                 },
             },
             spec);
}

double sample_std_normal(Rng& rng) {
  return boost::random::normal_distribution<double>(0.0, 1.0)(rng);
}

double sample_gamma(double shape, double rate, Rng& rng) {
  if (shape < 1.0) {
    const double boosted = sample_gamma(shape + 1.0, 1.0, rng);
    return boosted * std::pow(uniform_open01(rng), 1.0 / shape) / rate;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = sample_std_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open01(rng);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

long long sample_poisson(double mean, Rng& rng) {
  if (mean <= 0.0) return 0;
  // Boost switches to PTRS transformed rejection for mean >= 10.
  return boost::random::poisson_distribution<long long, double>(mean)(rng);
}

double sample_noncentral_chisq(double df, double noncentrality, Rng& rng) {
  const long long m = sample_poisson(noncentrality, rng);
  const double k = df + 2.0 * static_cast<double>(m);
  return 2.0 * sample_gamma(0.5 * k, 1.0, rng);
}

double sample(const DistSpec& spec, Rng& rng) {
  validate(spec);
  return std::visit(Overloaded{
                        [&](const Normal& d) {
                          return d.mean + std::sqrt(d.variance) * sample_std_normal(rng);
                        },
                        [&](const Gamma& d) { return sample_gamma(d.shape, d.rate, rng); },
                        [&](const InverseGamma& d) {
                          return 1.0 / sample_gamma(d.shape, d.scale, rng);
                        },
                        [&](const NoncentralChiSq& d) {
                          return sample_noncentral_chisq(d.df, d.noncentrality, rng);
                        },
                    },
                    spec);
}

double log_pdf(const DistSpec& spec, double x) {
  using boost::math::lgamma;
  validate(spec);
  return std::visit(
      Overloaded{
          [&](const Normal& d) {
            const double z = x - d.mean;
            return -0.5 * std::log(2.0 * std::numbers::pi * d.variance) - 0.5 * z * z / d.variance;
          },
          [&](const Gamma& d) {
            if (!(x > 0.0)) return kNegInf;
            return d.shape * std::log(d.rate) - lgamma(d.shape) + (d.shape - 1.0) * std::log(x) -
                   d.rate * x;
          },
          [&](const InverseGamma& d) {
            if (!(x > 0.0)) return kNegInf;
            return d.shape * std::log(d.scale) - lgamma(d.shape) - (d.shape + 1.0) * std::log(x) -
                   d.scale / x;
          },
          [&](const NoncentralChiSq& d) {
            if (!(x > 0.0)) return kNegInf;
            if (d.noncentrality == 0.0) {
              const double h = 0.5 * d.df;
              return -h * std::numbers::ln2 - lgamma(h) + (h - 1.0) * std::log(x) - 0.5 * x;
            }
            // Boost uses the full-noncentrality convention (mean df + lambda).
            const boost::math::non_central_chi_squared dist(d.df, 2.0 * d.noncentrality);
            const double p = boost::math::pdf(dist, x);
            return p > 0.0 ? std::log(p) : kNegInf;
          },
      },
      spec);
}

double mean(const DistSpec& spec) {
  validate(spec);
  return std::visit(Overloaded{
                        [](const Normal& d) { return d.mean; },
                        [](const Gamma& d) { return d.shape / d.rate; },
                        [](const InverseGamma& d) {
                          return d.shape > 1.0 ? d.scale / (d.shape - 1.0)
                                               : std::numeric_limits<double>::infinity();
                        },
                        [](const NoncentralChiSq& d) { return d.df + 2.0 * d.noncentrality; },
                    },
                    spec);
}

double variance(const DistSpec& spec) {
  validate(spec);
  return std::visit(Overloaded{
                        [](const Normal& d) { return d.variance; },
                        [](const Gamma& d) { return d.shape / (d.rate * d.rate); },
                        [](const InverseGamma& d) {
                          if (d.shape <= 2.0) return std::numeric_limits<double>::infinity();
                          const double m = d.scale / (d.shape - 1.0);
                          return m * m / (d.shape - 2.0);
                        },
                        [](const NoncentralChiSq& d) {
                          return 2.0 * d.df + 8.0 * d.noncentrality;
                        },
                    },
                    spec);
}

std::string describe(const DistSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const Normal& d) { os << "Normal{" << d.mean << ", " << d.variance << "}"; },
                 [&](const Gamma& d) { os << "Gamma{" << d.shape << ", " << d.rate << "}"; },
                 [&](const InverseGamma& d) {
                   os << "InverseGamma{" << d.shape << ", " << d.scale << "}";
                 },
                 [&](const NoncentralChiSq& d) {
                   os << "NoncentralChiSq{" << d.df << ", " << d.noncentrality << "}";
                 },
             },
             spec);
  return os.str();
}

}  // namespace gibbsgap
