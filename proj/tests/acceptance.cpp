// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "gibbsgap/data_io.hpp"
#include "gibbsgap/distributions.hpp"
#include "gibbsgap/replicate_chains.hpp"
#include "gibbsgap/rosenthal_chain.hpp"
#include "gibbsgap/spectral_estimator.hpp"
#include "support/stat_oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gibbsgap;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "gibbsgap_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

Outcome oracle_exactness() {
  const fs::path dir = scratch() / "ac1";
  std::string err;
  const int code = run_cli({"oracle", "--N", "100000", "--workers", "1", "--seed", "2024", "--out",
                            dir.string()},
                           &err);
  if (code != 0 && code != 3) return {false, "oracle command failed: " + err};
  const json doc = json::parse(slurp(dir / "oracle.json"));
  int ok = 0;
  double worst = 0.0;
  for (const auto& rec : doc["records"]) {
    ok += rec["pass"].get<bool>();
    worst = std::max(worst, std::abs(rec["z"].get<double>()));
  }
  const int cells = static_cast<int>(doc["records"].size());
  return {ok == 9 && cells == 9 && code == 0,
          std::to_string(ok) + "/" + std::to_string(cells) + " cells within 3 SE, max |z| " +
              fmt(worst, 3)};
}

Outcome fast_path_equivalence() {
  SimConfig cfg;
  cfg.n = 50;
  cfg.seed = 2025;
  const DataSummary d = simulate(cfg).summary;
  const Hyperparams h{2.0, 1.0, 1.0, {}};
  const MuA mu_a{0.3, 1.0};
  const std::size_t reps = 100000;
  Rng fast_rng = make_substream(2025, 1);
  Rng full_rng = make_substream(2025, 2);
  std::vector<double> fast_bar(reps), fast_ss(reps), full_bar(reps), full_ss(reps);
  for (std::size_t k = 0; k < reps; ++k) {
    const ThetaStats f = draw_theta_stats(mu_a, d, h, fast_rng);
    const ThetaStats g = theta_stats_of(draw_theta_full(mu_a, d.group_means, h, full_rng));
    fast_bar[k] = f.theta_bar;
    fast_ss[k] = f.ss;
    full_bar[k] = g.theta_bar;
    full_ss[k] = g.ss;
  }
  const double p_bar = testing::ks_two_sample_p(fast_bar, full_bar);
  const double p_ss = testing::ks_two_sample_p(fast_ss, full_ss);
  bool moments_ok = true;
  double worst_z = 0.0;
  for (const auto& [x, y] : {std::pair{&fast_bar, &full_bar}, std::pair{&fast_ss, &full_ss}}) {
    const auto a = testing::moments(*x);
    const auto b = testing::moments(*y);
    const double z_mean = (a.mean - b.mean) / std::hypot(a.mean_se, b.mean_se);
    const double z_var = (a.var - b.var) / std::hypot(a.var_se, b.var_se);
    worst_z = std::max({worst_z, std::abs(z_mean), std::abs(z_var)});
    moments_ok = moments_ok && std::abs(z_mean) < 3.0 && std::abs(z_var) < 3.0;
  }
  return {p_bar > 1e-3 && p_ss > 1e-3 && moments_ok,
          "KS p(theta_bar)=" + fmt(p_bar, 3) + " p(SS)=" + fmt(p_ss, 3) +
              ", max moment |z| " + fmt(worst_z, 3)};
}

Outcome desk_scale_reproduction() {
  const fs::path dir = scratch() / "ac3";
  std::string err;
  const int code = run_cli({"estimate-gap", "--preset", "A1_V1", "--a", "2", "--b", "1", "--n",
                            "100,1000,10000", "--N", "100000", "--l-scan", "1..16", "--seed", "2026",
                            "--out", dir.string()},
                           &err);
  if (code != 0) return {false, "estimate-gap failed: " + err};
  const json doc = json::parse(slurp(dir / "gap.json"));
  std::string detail;
  bool pass = true;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    const json* chosen = nullptr;
    for (const auto& rec : doc["records"]) {
      if (rec["n"] == n && rec["selected"].get<bool>()) chosen = &rec;
    }
    if (!chosen) {
      pass = false;
      detail += " n=" + std::to_string(n) + ": no status-ok l";
      continue;
    }
    const double u = (*chosen)["u_hat"], se = (*chosen)["u_se"];
    const bool ok = (*chosen)["status"] == "ok" && u + 3.0 * se < 1.0;
    pass = pass && ok;
    detail += " n=" + std::to_string(n) + ": l=" + std::to_string((*chosen)["l"].get<int>()) +
              " u=" + fmt(u, 3) + "+3*" + fmt(se, 2) + (ok ? "" : " (not < 1)");
  }
  return {pass, "selected l per n:" + detail};
}

Outcome noncentral_chisq() {
  Rng rng = make_substream(2027, 0);
  bool pass = true;
  std::string detail;
  for (double phi : {0.0, 1.0, 50.0}) {
    std::vector<double> x(100000);
    for (double& v : x) v = sample_noncentral_chisq(99.0, phi, rng);
    const auto m = testing::moments(x);
    const double z_mean = (m.mean - (99.0 + 2.0 * phi)) / m.mean_se;
    const double z_var = (m.var - (198.0 + 8.0 * phi)) / m.var_se;
    pass = pass && std::abs(z_mean) < 3.0 && std::abs(z_var) < 3.0;
    detail += " phi=" + fmt(phi) + ": z_mean=" + fmt(z_mean, 2) + " z_var=" + fmt(z_var, 2);
  }
  return {pass, detail.substr(1)};
}

bool same_12_digits(double x, double target) {
  return std::abs(x - target) <= 5e-13 * std::abs(target);
}

Outcome flat_rate() {
  const Hyperparams h{1.0, 1.0, 1.0, {}};
  const double g2 = gamma_flat(2, 1, 0.0, h);
  const double g100 = gamma_flat(100, 10000, 0.0, h);
  std::vector<double> seq;
  for (std::size_t n : {10u, 100u, 1000u}) seq.push_back(gamma_flat(n, n * n, double(n), h));
  const bool decreasing = seq[0] > seq[1] && seq[1] > seq[2];
  const bool pass = same_12_digits(g2, std::sqrt(6.5)) && same_12_digits(g100, std::sqrt(0.115)) &&
                    decreasing && seq[2] < 0.15;
  return {pass, "gamma(2,1)=" + fmt(g2, 15) + " gamma(100,1e4)=" + fmt(g100, 15) +
                    ", r=n^2: " + fmt(seq[0]) + " > " + fmt(seq[1]) + " > " + fmt(seq[2])};
}

Outcome shrink_rate() {
  const Hyperparams h{1.0, 1.0, 1.0, Shrinkage{0.0, 1.0}};
  const double g = gamma_shrink(2, 1, 0.0, 0.0, h);
  return {same_12_digits(g, std::sqrt(323.0)), "gamma_shrink=" + fmt(g, 15) +
                                                   " vs sqrt(323)=" + fmt(std::sqrt(323.0), 15)};
}

Outcome coupling_contraction() {
  const std::size_t n = 20;
  const DataSummary d = summarize_group_means(std::vector<double>(n, 0.4), 10000);
  const FlatEtaMapping map(d, Hyperparams{1.0, 1.0, 1.0, {}});
  ContractionOptions o;
  o.num_pairs = 100;
  o.reps_per_pair = 10000;
  const ContractionReport rep = contraction_check(map, o, 2028);
  return {rep.violations == 0 && rep.pairs_tested == 100,
          std::to_string(rep.violations) + " violations over " + std::to_string(rep.pairs_tested) +
              " pairs; gamma_formula=" + fmt(rep.gamma_formula) + " empirical mean " +
              fmt(rep.gamma_empirical_mean) + ", max pair ratio " + fmt(rep.max_pair_ratio)};
}

Outcome determinism() {
  const std::vector<std::vector<std::string>> commands{
      {"simulate", "--n", "9000", "--r", "2", "--seed", "5"},
      {"estimate-gap", "--n", "30,300", "--l-scan", "1..4", "--N", "5000", "--seed", "5"},
      {"oracle", "--N", "20000", "--seed", "5"},
      {"contraction", "--n", "10,40", "--check-pairs", "6", "--reps", "500", "--cx-samples",
       "300", "--seed", "5"},
      {"contraction", "--model", "shrinkage", "--w", "ybar", "--z", "(nr)^2", "--n", "10,40",
       "--check-pairs", "6", "--reps", "500", "--seed", "5"}};
  std::size_t files = 0;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::vector<fs::path> dirs;
    for (const char* workers : {"1", "4", "1"}) {
      const fs::path dir = scratch() / ("ac8_" + std::to_string(c) + "_" + std::to_string(dirs.size()));
      auto args = commands[c];
      args.insert(args.end(), {"--workers", workers, "--out", dir.string()});
      if (run_cli(args) != 0) return {false, "command failed: " + commands[c][0]};
      dirs.push_back(dir);
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      if (entry.path().extension() != ".csv") continue;
      const std::string reference = slurp(entry.path());
      for (std::size_t k = 1; k < dirs.size(); ++k) {
        if (slurp(dirs[k] / entry.path().filename()) != reference) {
          return {false, commands[c][0] + ": " + entry.path().filename().string() + " differs"};
        }
      }
      ++files;
    }
  }
  return {files >= 6, std::to_string(files) +
                          " CSV files byte-identical across workers=1, 4 and a rerun"};
}

Outcome ci_coverage() {
  const Ar1TraceChain chain(0.5, ar1_default_proposal_sd(0.5, 2));
  const double exact = ar1_exact_trace(0.5, 2).s;
  int covered = 0;
  for (std::uint64_t run = 0; run < 200; ++run) {
    const GapEstimate g = estimate(chain, 2, 10000, derive_seed(2029, run));
    covered += std::abs(g.s_hat - exact) <= 1.96 * g.s_se;
  }
  return {covered >= 184, std::to_string(covered) + "/200 intervals cover s = " + fmt(exact)};
}

struct Criterion {
  const char* name;
  double limit_seconds;  // 0: no runtime limit
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"AC1 oracle exactness", 60.0, oracle_exactness},
      {"AC2 fast-path equivalence", 60.0, fast_path_equivalence},
      {"AC3 desk-scale u_l below 1", 600.0, desk_scale_reproduction},
      {"AC4 noncentral chi-square moments", 0.0, noncentral_chisq},
      {"AC5 flat-prior contraction rate", 0.0, flat_rate},
      {"AC6 shrinkage-prior contraction rate", 0.0, shrink_rate},
      {"AC7 coupling contraction check", 300.0, coupling_contraction},
      {"AC8 determinism across workers", 0.0, determinism},
      {"AC9 confidence-interval coverage", 0.0, ci_coverage},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0.0 && secs > c.limit_seconds) {
      o.pass = false;
      o.detail += "; over the " + fmt(c.limit_seconds) + " s limit";
    }
    failures += !o.pass;
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  fs::remove_all(scratch());
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
