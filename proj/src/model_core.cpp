#include "gibbsgap/model_core.hpp"

#include <cmath>
#include <string>

#include "gibbsgap/errors.hpp"

namespace gibbsgap {

namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_mean(std::span<const double> x) {
  CompensatedSum s;
  for (double v : x) s.add(v);
  return s.value() / static_cast<double>(x.size());
}

double sum_sq_dev(std::span<const double> x, double center) {
  CompensatedSum s;
  for (double v : x) {
    const double d = v - center;
    s.add(d * d);
  }
  return s.value();
}

void require_positive(double x, const char* name) {
  if (!(std::isfinite(x) && x > 0.0)) {
    throw InvalidParameter(std::string(name) + " must be finite and > 0");
  }
}

}  // namespace

void Hyperparams::validate() const {
  require_positive(a, "a");
  require_positive(b, "b");
  require_positive(V, "V");
  if (shrinkage) {
    if (!std::isfinite(shrinkage->w)) throw InvalidParameter("w must be finite");
    require_positive(shrinkage->z, "z");
  }
}

const Shrinkage& Hyperparams::require_shrinkage() const {
  if (!shrinkage) throw InvalidParameter("shrinkage parameters (w, z) are required");
  return *shrinkage;
}

DataSummary summarize_group_means(std::vector<double> group_means, std::size_t r) {
  if (group_means.empty()) throw InvalidParameter("empty dataset");
  if (group_means.size() < 2) throw InvalidParameter("need at least n = 2 groups");
  if (r < 1) throw InvalidParameter("r must be >= 1");
  DataSummary d;
  d.n = group_means.size();
  d.r = r;
  d.y_bar = compensated_mean(group_means);
  d.delta_prime = sum_sq_dev(group_means, d.y_bar);
  d.delta = d.delta_prime;
  d.group_means = std::move(group_means);
  return d;
}

DataSummary summarize(std::span<const double> y) {
  return summarize_group_means(std::vector<double>(y.begin(), y.end()), 1);
}

DataSummary summarize(std::span<const double> y, std::size_t r) {
  if (r < 1) throw InvalidParameter("r must be >= 1");
  if (y.empty()) throw InvalidParameter("empty dataset");
  if (y.size() % r != 0) throw InvalidParameter("data length is not a multiple of r");
  if (r == 1) return summarize(y);
  const std::size_t n = y.size() / r;
  std::vector<double> means(n);
  for (std::size_t i = 0; i < n; ++i) means[i] = compensated_mean(y.subspan(i * r, r));
  return summarize_group_means(std::move(means), r);
}

DataSummary summarize_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw InvalidParameter("empty dataset");
  const std::size_t r = rows.front().size();
  std::vector<double> means;
  means.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != r) {
      throw InvalidParameter("ragged matrix: row " + std::to_string(i + 1) + " has " +
                             std::to_string(rows[i].size()) + " entries, expected " +
                             std::to_string(r));
    }
    means.push_back(compensated_mean(rows[i]));
  }
  return summarize_group_means(std::move(means), r);
}

ThetaStats theta_stats_of(std::span<const double> theta) {
  ThetaStats s;
  s.theta_bar = compensated_mean(theta);
  s.ss = sum_sq_dev(theta, s.theta_bar);
  return s;
}

InverseGamma cond_A_given_theta(const ThetaStats& stats, const Hyperparams& h, std::size_t n) {
  if (n < 2) throw PreconditionError("conditional of A requires n >= 2");
  return {h.a + 0.5 * static_cast<double>(n - 1), h.b + 0.5 * stats.ss};
}

Normal cond_mu_given_theta_A(const ThetaStats& stats, double A, std::size_t n) {
  require_positive(A, "A");
  return {stats.theta_bar, A / static_cast<double>(n)};
}

Normal cond_theta_i(double mu, double A, double y_i, const Hyperparams& h) {
  require_positive(A, "A");
  const double V = h.V;
  return {(V * mu + A * y_i) / (A + V), A * V / (A + V)};
}

double noncentrality(double A, const Hyperparams& h, const DataSummary& d) {
  require_positive(A, "A");
  return A * d.delta / (2.0 * h.V * (A + h.V));
}

Normal cond_eta0_given_B(double B, const Hyperparams& h, const DataSummary& d) {
  require_positive(B, "B");
  const double rU = static_cast<double>(d.r) * h.U();
  return {std::sqrt(static_cast<double>(d.n)) * d.y_bar, (B + rU) / (rU * B)};
}

Normal cond_eta_i_given(double eta0, double B, std::size_t i, const Hyperparams& h,
                        const DataSummary& d) {
  require_positive(B, "B");
  const double rU = static_cast<double>(d.r) * h.U();
  const double shift = eta0 / std::sqrt(static_cast<double>(d.n));
  return {rU / (B + rU) * (d.group_means.at(i) - shift), 1.0 / (B + rU)};
}

Gamma cond_B_given(double sum_sq, std::size_t n, const Hyperparams& h) {
  return {h.a + 0.5 * static_cast<double>(n), h.b + 0.5 * sum_sq};
}

Normal cond_mu_given_beta(double beta_bar, const Hyperparams& h, const DataSummary& d) {
  const Shrinkage& s = h.require_shrinkage();
  const double nrU = static_cast<double>(d.n) * static_cast<double>(d.r) * h.U();
  return {(nrU * (d.y_bar - beta_bar) + s.z * s.w) / (nrU + s.z), 1.0 / (nrU + s.z)};
}

Normal cond_beta_i_given(double mu, double B, std::size_t i, const Hyperparams& h,
                         const DataSummary& d) {
  require_positive(B, "B");
  const double rU = static_cast<double>(d.r) * h.U();
  return {rU / (B + rU) * (d.group_means.at(i) - mu), 1.0 / (B + rU)};
}

}  // namespace gibbsgap
