#include "gibbsgap/spectral_estimator.hpp"

#include <numbers>

#include "gibbsgap/distributions.hpp"

namespace gibbsgap {

std::string_view to_string(GapStatus status) {
  switch (status) {
    case GapStatus::ok:
      return "ok";
    case GapStatus::s_not_above_one:
      return "s_not_above_one";
    case GapStatus::high_variance:
      return "high_variance";
  }
  return "ok";
}

std::optional<GapStatus> parse_gap_status(std::string_view text) {
  for (GapStatus s : {GapStatus::ok, GapStatus::s_not_above_one, GapStatus::high_variance}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::optional<BoundEstimate> u_from_s(double s_hat, double s_se, std::size_t l) {
  if (l < 1) throw PreconditionError("l must be >= 1");
  if (!(s_hat > 1.0)) return std::nullopt;
  const double excess = s_hat - 1.0;
  const double ld = static_cast<double>(l);
  BoundEstimate out;
  out.u_hat = std::pow(excess, 1.0 / ld);
  out.u_se = out.u_hat / (ld * excess) * s_se;
  return out;
}

namespace {

void require_rho(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidParameter("rho must lie in (0, 1)");
}

}  // namespace

ExactTrace ar1_exact_trace(double rho, std::size_t l) {
  require_rho(rho);
  if (l < 1) throw PreconditionError("l must be >= 1");
  const double rl = std::pow(rho, static_cast<double>(l));
  ExactTrace out;
  out.s = 1.0 / (1.0 - rl);
  out.u = rho / std::pow(1.0 - rl, 1.0 / static_cast<double>(l));
  return out;
}

Ar1TraceChain::Ar1TraceChain(double rho, double proposal_sd) : rho_(rho), proposal_sd_(proposal_sd) {
  require_rho(rho);
  if (!(proposal_sd > 0.0 && std::isfinite(proposal_sd))) {
    throw InvalidParameter("proposal_sd must be finite and > 0");
  }
}

Ar1TraceChain::Sample Ar1TraceChain::draw(std::size_t l, Rng& rng) const {
  return {l, proposal_sd_ * sample_std_normal(rng)};
}

double Ar1TraceChain::log_weight(const Sample& s) const {
  const double rl = std::pow(rho_, static_cast<double>(s.l));
  const double kernel = log_pdf(Normal{rl * s.x, 1.0 - rl * rl}, s.x);
  const double proposal = log_pdf(Normal{0.0, proposal_sd_ * proposal_sd_}, s.x);
  return kernel - proposal;
}

double ar1_default_proposal_sd(double rho, std::size_t l) {
  require_rho(rho);
  const double rl = std::pow(rho, static_cast<double>(l));
  return 2.0 * std::sqrt((1.0 + rl) / (1.0 - rl));
}

}  // namespace gibbsgap
