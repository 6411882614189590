#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gibbsgap/data_io.hpp"
#include "gibbsgap/errors.hpp"
#include "gibbsgap/model_core.hpp"
#include "gibbsgap/replicate_chains.hpp"
#include "gibbsgap/rng.hpp"
#include "gibbsgap/rosenthal_chain.hpp"
#include "gibbsgap/spectral_estimator.hpp"

namespace gibbsgap::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// seed purposes; data always uses the user seed itself
constexpr std::uint64_t kEstimatorPurpose = 1;
constexpr std::uint64_t kPairsPurpose = 2;
constexpr std::uint64_t kCxPurpose = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Preset {
  double A;
  double V;
};

// Simulation settings of the growing-n study: A = V at three scales plus
// four unequal pairs.
const std::map<std::string, Preset>& presets() {
  static const std::map<std::string, Preset> table{
      {"A1_V1", {1.0, 1.0}},     {"A10_V10", {10.0, 10.0}}, {"A100_V100", {100.0, 100.0}},
      {"A10_V1", {10.0, 1.0}},   {"A100_V10", {100.0, 10.0}}, {"A1_V10", {1.0, 10.0}},
      {"A10_V100", {10.0, 100.0}},
  };
  return table;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, p] : presets()) names.push_back(name);
  return names;
}

// JSON config files: a flat object of option-name -> value, or any document
// with such an object under "config" (our own sidecars). Keys are routed to
// the selected subcommand when it owns the option, otherwise to the top level.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    throw CLI::ConfigError("writing JSON configs through CLI11 is not supported");
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json doc;
    try {
      doc = json::parse(input);
    } catch (const json::parse_error& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (doc.is_object() && doc.contains("config") && doc["config"].is_object()) doc = doc["config"];
    if (!doc.is_object()) throw CLI::ConversionError("config must be a JSON object");

    const CLI::App* sub = nullptr;
    if (const auto subs = app_->get_subcommands(); !subs.empty()) sub = subs.front();

    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      if (value.is_null() || value.is_object()) continue;
      CLI::ConfigItem item;
      item.name = key;
      if (sub && sub->get_option_no_throw("--" + key) != nullptr) item.parents = {sub->get_name()};
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar_text(v));
      } else {
        item.inputs.push_back(scalar_text(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_float()) {
      // 1e5 in a hand-written file should still fill an integer option
      const double x = v.get<double>();
      if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 0x1p53) {
        return std::to_string(static_cast<long long>(x));
      }
      return format_double(x);
    }
    if (v.is_number() ) return v.dump();
    throw CLI::ConversionError("unsupported config value: " + v.dump());
  }

  const CLI::App* app_;
};

struct Common {
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::string out = ".";
  std::string format = "csv";
};

json common_echo(const Common& c) {
  return {{"seed", c.seed}, {"workers", c.workers}, {"out", c.out}, {"format", c.format}};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Small auxiliary tables (oracle comparison, bound curves).
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  std::string csv() const {
    std::string s;
    for (std::size_t j = 0; j < columns.size(); ++j) s += (j ? "," : "") + columns[j];
    s += '\n';
    for (const auto& row : rows) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) s += ',';
        const json& v = row[j];
        if (v.is_number_float()) {
          s += format_double(v.get<double>());
        } else if (v.is_string()) {
          s += v.get<std::string>();
        } else if (!v.is_null()) {
          s += v.dump();
        }
      }
      s += '\n';
    }
    return s;
  }

  json to_json() const {
    json arr = json::array();
    for (const auto& row : rows) {
      json obj;
      for (std::size_t j = 0; j < columns.size(); ++j) obj[columns[j]] = row[j];
      arr.push_back(obj);
    }
    return arr;
  }
};

// csv: <stem>.csv plus <stem>.json sidecar (and one csv per extra table);
// json: <stem>.json only, with extra tables embedded.
void emit(const Common& c, const std::string& stem, const std::vector<ResultRecord>& records,
          json meta, const std::map<std::string, Table>& tables, std::ostream& out) {
  const fs::path dir(c.out);
  fs::create_directories(dir);
  for (const auto& [name, table] : tables) meta[name] = table.to_json();
  if (c.format == "csv") {
    write_results(records, dir / (stem + ".csv"), meta);
    for (const auto& [name, table] : tables) write_text(dir / (name + ".csv"), table.csv());
  } else {
    write_results_json(records, dir / (stem + ".json"), meta);
  }
  out << to_csv(records);
}

json make_meta(const std::string& command, const json& config,
               std::chrono::steady_clock::time_point start) {
  return {{"program", "gibbsgap"},
          {"command", command},
          {"config", config},
          {"elapsed_seconds", seconds_since(start)}};
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError("cannot parse " + what + " '" + text + "'");
  }
  return v;
}

double parse_real(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError("cannot parse " + what + " '" + text + "'");
  }
  return v;
}

std::vector<std::size_t> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw UsageError("--l-scan expects lo..hi, got '" + text + "'");
  const std::size_t lo = parse_count(text.substr(0, dots), "--l-scan bound");
  const std::size_t hi = parse_count(text.substr(dots + 2), "--l-scan bound");
  if (lo < 1 || hi < lo) throw UsageError("--l-scan needs 1 <= lo <= hi, got '" + text + "'");
  std::vector<std::size_t> out;
  for (std::size_t l = lo; l <= hi; ++l) out.push_back(l);
  return out;
}

EstimateOptions estimate_options(const Common& c, double dominance) {
  EstimateOptions o;
  o.workers = c.workers;
  o.dominance_threshold = dominance;
  return o;
}

void fill_estimate(ResultRecord& rec, const GapEstimate& g) {
  rec.l = g.l;
  rec.N = g.N;
  rec.s_hat = g.s_hat;
  rec.s_se = g.s_se;
  rec.u_hat = g.u_hat;
  rec.u_se = g.u_se;
  rec.status = std::string(to_string(g.status));
  rec.extra["max_weight_share"] = g.max_weight_share;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::size_t n = 1000;
  std::size_t r = 1;
  std::string preset;
  double A = 1.0;
  double V = 1.0;
  bool group_means_only = false;
  CLI::Option* A_opt = nullptr;
  CLI::Option* V_opt = nullptr;
};

void setup_simulate(CLI::App& sub, SimulateArgs& a) {
  sub.add_option("--n", a.n, "number of groups")->capture_default_str()->check(CLI::Range(2ul, std::numeric_limits<std::size_t>::max()));
  sub.add_option("--r", a.r, "replicates per group")->capture_default_str()->check(CLI::PositiveNumber);
  sub.add_option("--preset", a.preset, "named (A, V) setting")->check(CLI::IsMember(preset_names()));
  a.A_opt = sub.add_option("--A", a.A, "true random-effect variance (overrides preset)")->capture_default_str();
  a.V_opt = sub.add_option("--V", a.V, "true error variance (overrides preset)")->capture_default_str();
  sub.add_flag("--group-means-only", a.group_means_only,
               "draw group means directly; no replicate-level data is written");
}

void resolve_preset(const std::string& preset, CLI::Option* A_opt, double& A, CLI::Option* V_opt,
                    double& V) {
  if (preset.empty()) return;
  const Preset p = presets().at(preset);
  if (A_opt->count() == 0) A = p.A;
  if (V_opt->count() == 0) V = p.V;
}

int cmd_simulate(const Common& c, SimulateArgs a, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  resolve_preset(a.preset, a.A_opt, a.A, a.V_opt, a.V);
  SimConfig cfg;
  cfg.n = a.n;
  cfg.r = a.r;
  cfg.A_true = a.A;
  cfg.V_true = a.V;
  cfg.seed = c.seed;
  cfg.group_means_only = a.group_means_only;
  const bool raw = !(a.group_means_only && a.r > 1);
  const SimulatedData sim = simulate(cfg, raw, c.workers);

  const fs::path dir(c.out);
  fs::create_directories(dir);
  if (raw) {
    write_dataset(dir / "dataset.csv", sim.raw, a.r);
  } else {
    write_dataset(dir / "dataset.csv", sim.summary.group_means, 1);
  }

  json config = common_echo(c);
  config.update({{"n", a.n}, {"r", a.r}, {"A", a.A}, {"V", a.V}, {"group-means-only", a.group_means_only}});
  if (!a.preset.empty()) config["preset"] = a.preset;
  json meta = make_meta("simulate", config, start);
  const DataSummary& d = sim.summary;
  meta["summary"] = {{"n", d.n}, {"r", d.r}, {"y_bar", d.y_bar}, {"delta", d.delta},
                     {"delta_prime", d.delta_prime}};
  // prior used by estimate-gap for this setting: b / (a - 1) = A
  meta["default_hyperparameters"] = {{"a", 2.0}, {"b", a.A}, {"V", a.V}};
  meta["dataset_layout"] = raw ? "groups x replicates" : "group means, one per line";
  write_text(dir / "summary.json", meta.dump(2) + "\n");

  out << "n=" << d.n << " r=" << d.r << " y_bar=" << format_double(d.y_bar)
      << " delta=" << format_double(d.delta) << " delta_prime=" << format_double(d.delta_prime)
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- estimate-gap

struct GapArgs {
  std::vector<std::size_t> n{100, 1000, 10000};
  std::string preset = "A1_V1";
  double A = 1.0;
  double V = 1.0;
  double a = 2.0;
  double b = 1.0;
  std::string data;
  std::vector<std::size_t> l;
  std::string l_scan = "1..16";
  std::size_t N = 100000;
  double dominance = 0.5;
  CLI::Option* A_opt = nullptr;
  CLI::Option* V_opt = nullptr;
  CLI::Option* b_opt = nullptr;
  CLI::Option* n_opt = nullptr;
};

void setup_gap(CLI::App& sub, GapArgs& a) {
  a.n_opt = sub.add_option("--n", a.n, "sample sizes; nested prefixes of one simulated dataset")
                ->delimiter(',')
                ->capture_default_str();
  sub.add_option("--preset", a.preset, "named (A, V) setting for simulated data")
      ->capture_default_str()
      ->check(CLI::IsMember(preset_names()));
  a.A_opt = sub.add_option("--A", a.A, "true random-effect variance (overrides preset)");
  a.V_opt = sub.add_option("--V", a.V, "error variance, known to the model (overrides preset)");
  sub.add_option("--a", a.a, "inverse-gamma prior shape")->capture_default_str();
  a.b_opt = sub.add_option("--b", a.b, "inverse-gamma prior scale (default A * (a - 1))");
  sub.add_option("--data", a.data, "read observations from a file instead of simulating")
      ->check(CLI::ExistingFile);
  sub.add_option("--l", a.l, "explicit chain lengths (disables --l-scan)")->delimiter(',');
  sub.add_option("--l-scan", a.l_scan, "scan l over lo..hi and pick the best bound per n")
      ->capture_default_str();
  sub.add_option("--N", a.N, "importance samples per estimate")->capture_default_str();
  sub.add_option("--dominance", a.dominance,
                 "flag high_variance when one weight exceeds this share of the sum")
      ->capture_default_str();
}

int cmd_estimate_gap(const Common& c, GapArgs a, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  resolve_preset(a.preset, a.A_opt, a.A, a.V_opt, a.V);
  if (a.b_opt->count() == 0) a.b = a.A * (a.a - 1.0);
  const Hyperparams h{a.a, a.b, a.V, {}};
  h.validate();
  const std::vector<std::size_t> ls = a.l.empty() ? parse_range(a.l_scan) : a.l;
  for (std::size_t l : ls) {
    if (l < 1) throw UsageError("--l values must be >= 1");
  }

  auto require_trace_class = [](std::size_t n) {
    if (n < 3) {
      throw PreconditionError("n = " + std::to_string(n) +
                              ": the theta-chain Gibbs kernel is trace-class only for n >= 3, "
                              "so its eigenvalue sums are not available");
    }
  };
  std::vector<DataSummary> datasets;
  if (!a.data.empty()) {
    if (a.n_opt->count() > 0) throw UsageError("--n cannot be combined with --data");
    datasets.push_back(read_dataset(a.data, 1));
    require_trace_class(datasets.front().n);
  } else {
    if (a.n.empty()) throw UsageError("--n needs at least one sample size");
    for (std::size_t n : a.n) require_trace_class(n);
    SimConfig cfg;
    cfg.n = *std::max_element(a.n.begin(), a.n.end());
    cfg.A_true = a.A;
    cfg.V_true = a.V;
    cfg.seed = c.seed;
    const DataSummary master = simulate(cfg, false, c.workers).summary;
    for (std::size_t n : a.n) {
      datasets.push_back(summarize(std::span<const double>(master.group_means).first(n)));
    }
  }

  const std::uint64_t est_seed = derive_seed(c.seed, kEstimatorPurpose);
  const EstimateOptions opts = estimate_options(c, a.dominance);
  std::vector<ResultRecord> records;
  for (const DataSummary& d : datasets) {
    const ThetaChainTrace chain(d, h);
    const std::size_t first = records.size();
    std::optional<std::size_t> best;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t l : ls) {
      const GapEstimate g = estimate(chain, l, a.N, est_seed, opts);
      ResultRecord rec;
      rec.run_id = "gap-n" + std::to_string(d.n) + "-l" + std::to_string(l);
      rec.model = "simple";
      rec.n = d.n;
      rec.r = 1;
      rec.a = h.a;
      rec.b = h.b;
      rec.V = h.V;
      rec.seed = c.seed;
      fill_estimate(rec, g);
      rec.extra["estimator_seed"] = est_seed;
      // relative error of the excess trace s - 1; u_se / u_hat = volatility / l
      rec.extra["volatility"] =
          g.s_hat > 1.0 ? json(g.s_se / (g.s_hat - 1.0)) : json(nullptr);
      if (g.status == GapStatus::ok && g.u_hat) {
        const double score = *g.u_hat + 3.0 * *g.u_se;
        if (score < best_score) {
          best_score = score;
          best = records.size();
        }
      }
      records.push_back(std::move(rec));
    }
    for (std::size_t k = first; k < records.size(); ++k) {
      records[k].extra["selected"] = best && *best == k;
    }
  }

  json config = common_echo(c);
  config.update({{"A", a.A}, {"V", a.V}, {"a", a.a}, {"b", a.b}, {"N", a.N},
                 {"dominance", a.dominance}});
  if (a.data.empty()) {
    config["n"] = a.n;
    config["preset"] = a.preset;
  } else {
    config["data"] = a.data;
  }
  if (a.l.empty()) {
    config["l-scan"] = a.l_scan;
  } else {
    config["l"] = a.l;
  }
  emit(c, "gap", records, make_meta("estimate-gap", config, start), {}, out);
  for (const auto& rec : records) {
    if (rec.extra.value("selected", false)) {
      out << "selected n=" << *rec.n << " l=" << *rec.l << " u_hat=" << format_double(*rec.u_hat)
          << " u_se=" << format_double(*rec.u_se) << "\n";
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- oracle

struct OracleArgs {
  std::vector<double> rho{0.25, 0.5, 0.9};
  std::vector<std::size_t> l{1, 2, 5};
  std::size_t N = 100000;
  double proposal_sd = 0.0;
  CLI::Option* sd_opt = nullptr;
};

void setup_oracle(CLI::App& sub, OracleArgs& a) {
  sub.add_option("--rho", a.rho, "AR(1) autocorrelations")->delimiter(',')->capture_default_str();
  sub.add_option("--l", a.l, "chain lengths")->delimiter(',')->capture_default_str();
  sub.add_option("--N", a.N, "importance samples per cell")->capture_default_str();
  a.sd_opt = sub.add_option("--proposal-sd", a.proposal_sd,
                            "fixed proposal standard deviation (default depends on rho, l)");
}

int cmd_oracle(const Common& c, const OracleArgs& a, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  // one seed per cell: with the default proposal every cell's normalised
  // weight is the same function of the draws, so a shared seed would make
  // the cells perfectly correlated
  const std::uint64_t base_seed = derive_seed(c.seed, kEstimatorPurpose);
  std::uint64_t cell = 0;
  std::vector<ResultRecord> records;
  Table exact{{"rho", "l", "N", "proposal_sd", "s_exact", "s_hat", "s_se", "z", "u_exact", "u_hat",
               "u_se", "pass"},
              {}};
  std::size_t failures = 0;
  for (double rho : a.rho) {
    for (std::size_t l : a.l) {
      const double sd = a.sd_opt->count() ? a.proposal_sd : ar1_default_proposal_sd(rho, l);
      const Ar1TraceChain chain(rho, sd);
      const std::uint64_t est_seed = derive_seed(base_seed, cell++);
      const GapEstimate g = estimate(chain, l, a.N, est_seed, estimate_options(c, 0.5));
      const ExactTrace truth = ar1_exact_trace(rho, l);
      const double z = (g.s_hat - truth.s) / g.s_se;
      const bool pass = std::abs(g.s_hat - truth.s) < 3.0 * g.s_se;
      if (!pass) ++failures;

      ResultRecord rec;
      rec.run_id = "oracle-rho" + format_double(rho) + "-l" + std::to_string(l);
      rec.model = "ar1";
      rec.seed = c.seed;
      fill_estimate(rec, g);
      rec.extra.update({{"rho", rho}, {"proposal_sd", sd}, {"s_exact", truth.s},
                        {"u_exact", truth.u}, {"z", z}, {"pass", pass},
                        {"estimator_seed", est_seed}});
      records.push_back(std::move(rec));
      exact.rows.push_back({rho, l, a.N, sd, truth.s, g.s_hat, g.s_se, z, truth.u,
                            g.u_hat ? json(*g.u_hat) : json(nullptr),
                            g.u_se ? json(*g.u_se) : json(nullptr), pass});
    }
  }
  json config = common_echo(c);
  config.update({{"rho", a.rho}, {"l", a.l}, {"N", a.N}});
  if (a.sd_opt->count()) config["proposal-sd"] = a.proposal_sd;
  json meta = make_meta("oracle", config, start);
  meta["failures"] = failures;
  emit(c, "oracle", records, meta, {{"oracle_exact", exact}}, out);
  const std::size_t cells = a.rho.size() * a.l.size();
  out << "oracle: " << cells - failures << "/" << cells << " cells within 3 standard errors\n";
  if (failures > 0) {
    err << "oracle validation failed in " << failures << " cell(s)\n";
    return kExitValidation;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- contraction

struct ContractionArgs {
  std::string model = "flat";
  std::vector<std::size_t> n{10, 100, 1000};
  std::string r_rule = "n^2";
  std::string w;
  std::string z;
  double a = 1.0;
  double b = 1.0;
  double V = 1.0;
  double A = 1.0;
  bool degenerate = false;
  std::size_t check_pairs = 0;
  std::size_t reps = 10000;
  double pair_scale = 1.0;
  std::size_t cx_samples = 0;
  double bound_gamma = 0.0;
  double bound_c = 0.0;
  std::size_t m_max = 20;
  CLI::Option* bound_gamma_opt = nullptr;
  CLI::Option* bound_c_opt = nullptr;
};

void setup_contraction(CLI::App& sub, ContractionArgs& a) {
  sub.add_option("--model", a.model, "flat (eta chain) or shrinkage (beta chain)")
      ->capture_default_str()
      ->check(CLI::IsMember({"flat", "shrinkage"}));
  sub.add_option("--n", a.n, "numbers of groups")->delimiter(',')->capture_default_str();
  sub.add_option("--r-rule", a.r_rule, "replicates per group: n^2, n, or a fixed integer")
      ->capture_default_str();
  sub.add_option("--w", a.w, "shrinkage prior mean: a number or ybar");
  sub.add_option("--z", a.z, "shrinkage prior precision: a number or (nr)^2");
  sub.add_option("--a", a.a, "inverse-gamma prior shape")->capture_default_str();
  sub.add_option("--b", a.b, "inverse-gamma prior scale")->capture_default_str();
  sub.add_option("--V", a.V, "error variance, known to the model; also used to simulate")
      ->capture_default_str();
  sub.add_option("--A", a.A, "random-effect variance used to simulate group means")
      ->capture_default_str();
  sub.add_flag("--degenerate", a.degenerate, "use identical group means (delta' = 0)");
  sub.add_option("--check-pairs", a.check_pairs, "random state pairs for the coupling check")
      ->capture_default_str();
  sub.add_option("--reps", a.reps, "shared-noise replicates per pair")->capture_default_str();
  sub.add_option("--pair-scale", a.pair_scale, "spread of sampled pairs around the chain center")
      ->capture_default_str();
  sub.add_option("--cx-samples", a.cx_samples, "samples for the starting-point constant c(x)")
      ->capture_default_str();
  a.bound_gamma_opt = sub.add_option("--bound-gamma", a.bound_gamma, "rate for an explicit bound curve");
  a.bound_c_opt = sub.add_option("--bound-c", a.bound_c, "constant for an explicit bound curve");
  sub.add_option("--m-max", a.m_max, "last iteration of bound curves")->capture_default_str();
}

std::size_t apply_r_rule(const std::string& rule, std::size_t n) {
  if (rule == "n^2") return n * n;
  if (rule == "n") return n;
  const std::size_t r = parse_count(rule, "--r-rule");
  if (r < 1) throw UsageError("--r-rule must give r >= 1");
  return r;
}

void add_curve(Table& curve, const std::string& source, double c_x, double gamma,
               std::size_t m_max) {
  for (std::size_t m = 0; m <= m_max; ++m) {
    curve.rows.push_back({source, gamma, c_x, m, wasserstein_bound(c_x, gamma, m)});
  }
}

template <RandomMapping M>
void run_checks(const M& map, const Common& c, const ContractionArgs& a, ResultRecord& rec,
                Table& curve) {
  if (a.check_pairs > 0) {
    ContractionOptions o;
    o.num_pairs = a.check_pairs;
    o.reps_per_pair = a.reps;
    o.workers = c.workers;
    const ContractionReport rep =
        contraction_check(map, o, derive_seed(c.seed, kPairsPurpose),
                          default_pair_sampler(map.center(), a.pair_scale));
    rec.gamma_empirical = rep.gamma_empirical_mean;
    rec.extra.update({{"gamma_empirical_ci_halfwidth", rep.gamma_empirical_ci_halfwidth},
                      {"max_pair_ratio", rep.max_pair_ratio},
                      {"pairs_tested", rep.pairs_tested},
                      {"pairs_skipped", rep.pairs_skipped},
                      {"violations", rep.violations}});
  }
  if (a.cx_samples > 0) {
    const auto x = map.center();
    const CxEstimate cx = estimate_cx(map, x, a.cx_samples, derive_seed(c.seed, kCxPurpose));
    rec.extra.update({{"c_x", cx.mean}, {"c_x_se", cx.se}});
    if (*rec.gamma_formula < 1.0) add_curve(curve, rec.run_id, cx.mean, *rec.gamma_formula, a.m_max);
  }
}

int cmd_contraction(const Common& c, const ContractionArgs& a, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const bool shrink = a.model == "shrinkage";
  if (shrink && (a.w.empty() || a.z.empty())) {
    throw PreconditionError("the shrinkage model needs its prior: pass both --w and --z");
  }
  if ((a.bound_gamma_opt->count() > 0) != (a.bound_c_opt->count() > 0)) {
    throw UsageError("--bound-gamma and --bound-c go together");
  }
  Table curve{{"source", "gamma", "c_x", "m", "bound"}, {}};
  if (a.bound_gamma_opt->count() > 0) add_curve(curve, "explicit", a.bound_c, a.bound_gamma, a.m_max);

  std::vector<ResultRecord> records;
  for (std::size_t n : a.n) {
    const std::size_t r = apply_r_rule(a.r_rule, n);
    DataSummary d;
    if (a.degenerate) {
      d = summarize_group_means(std::vector<double>(n, 0.0), r);
    } else {
      SimConfig cfg;
      cfg.n = n;
      cfg.r = r;
      cfg.A_true = a.A;
      cfg.V_true = a.V;
      cfg.seed = c.seed;
      cfg.group_means_only = true;
      d = simulate(cfg, false, c.workers).summary;
    }
    Hyperparams h{a.a, a.b, a.V, {}};
    if (shrink) {
      const double nr = static_cast<double>(n) * static_cast<double>(r);
      const double w = a.w == "ybar" ? d.y_bar : parse_real(a.w, "--w");
      const double z = a.z == "(nr)^2" ? nr * nr : parse_real(a.z, "--z");
      h.shrinkage = Shrinkage{w, z};
    }
    h.validate();

    ResultRecord rec;
    rec.run_id = "contraction-" + a.model + "-n" + std::to_string(n);
    rec.model = a.model;
    rec.n = n;
    rec.r = r;
    rec.a = h.a;
    rec.b = h.b;
    rec.V = h.V;
    if (shrink) {
      rec.w = h.shrinkage->w;
      rec.z = h.shrinkage->z;
    }
    rec.seed = c.seed;
    rec.status = std::string(to_string(GapStatus::ok));
    rec.extra.update({{"y_bar", d.y_bar}, {"delta_prime", d.delta_prime}});
    if (shrink) {
      const ShrinkageBetaMapping map(d, h);
      rec.gamma_formula = map.gamma();
      run_checks(map, c, a, rec, curve);
    } else {
      const FlatEtaMapping map(d, h);
      rec.gamma_formula = map.gamma();
      run_checks(map, c, a, rec, curve);
    }
    records.push_back(std::move(rec));
  }

  json config = common_echo(c);
  config.update({{"model", a.model}, {"n", a.n}, {"r-rule", a.r_rule}, {"a", a.a}, {"b", a.b},
                 {"V", a.V}, {"A", a.A}, {"degenerate", a.degenerate},
                 {"check-pairs", a.check_pairs}, {"reps", a.reps}, {"pair-scale", a.pair_scale},
                 {"cx-samples", a.cx_samples}, {"m-max", a.m_max}});
  if (!a.w.empty()) config["w"] = a.w;
  if (!a.z.empty()) config["z"] = a.z;
  if (a.bound_gamma_opt->count() > 0) {
    config["bound-gamma"] = a.bound_gamma;
    config["bound-c"] = a.bound_c;
  }
  std::map<std::string, Table> tables;
  if (!curve.rows.empty()) tables.emplace("bound_curve", curve);
  emit(c, "contraction", records, make_meta("contraction", config, start), tables, out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral-gap bounds and Wasserstein contraction rates for Gibbs samplers of "
               "Bayesian random-effects models",
               "gibbsgap"};
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::ignore);
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON option file (command-line flags win); sidecars work too");

  Common common;
  app.add_option("--seed", common.seed, "master seed")->capture_default_str();
  app.add_option("--workers", common.workers, "worker threads; never changes results")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--out", common.out, "output directory")->capture_default_str();
  app.add_option("--format", common.format, "result format")
      ->capture_default_str()
      ->check(CLI::IsMember({"csv", "json"}));

  SimulateArgs sim_args;
  GapArgs gap_args;
  OracleArgs oracle_args;
  ContractionArgs contraction_args;
  auto* sim = app.add_subcommand("simulate", "simulate a random-effects dataset");
  auto* gap = app.add_subcommand("estimate-gap", "bound the theta-chain spectral gap");
  auto* oracle = app.add_subcommand("oracle", "validate the estimator on AR(1) chains");
  auto* contraction = app.add_subcommand("contraction", "coupling contraction rates and bounds");
  setup_simulate(*sim, sim_args);
  setup_gap(*gap, gap_args);
  setup_oracle(*oracle, oracle_args);
  setup_contraction(*contraction, contraction_args);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(common, sim_args, out);
    if (gap->parsed()) return cmd_estimate_gap(common, gap_args, out);
    if (oracle->parsed()) return cmd_oracle(common, oracle_args, out, err);
    return cmd_contraction(common, contraction_args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPrecondition;
  }
}

}  // namespace gibbsgap::cli
