#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gibbsgap/model_core.hpp"

namespace gibbsgap {

// theta_i ~ N(0, A_true), y_ij ~ N(theta_i, V_true).
struct SimConfig {
  std::size_t n = 100;
  std::size_t r = 1;
  double A_true = 1.0;
  double V_true = 1.0;
  std::uint64_t seed = 0;
  // For r > 1, draw each group mean directly as N(theta_i, V_true / r)
  // instead of summing r replicates. Same law, O(n) instead of O(nr);
  // raw replicates are then unavailable.
  bool group_means_only = false;
};

struct SimulatedData {
  DataSummary summary;
  std::vector<double> raw;  // row-major n x r; empty unless requested
};

// Groups are simulated in fixed blocks with one substream per block, so the
// first m groups of a size-n simulation equal an m-group simulation with the
// same seed (nested datasets for n-sweeps).
SimulatedData simulate(const SimConfig& cfg, bool keep_raw = false, std::size_t workers = 1);

constexpr std::size_t kSimulationBlock = 4096;

// r = 1: every CSV cell on every line is one observation.
// r > 1: each line is one group with exactly r comma-separated replicates.
// Throws ParseError (with line number) or InvalidParameter.
DataSummary read_dataset(const std::filesystem::path& path, std::size_t r = 1);

// Writes raw data in the layout read_dataset accepts.
void write_dataset(const std::filesystem::path& path, std::span<const double> raw, std::size_t r);

// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

// One row of the results table; absent fields serialise as empty cells.
struct ResultRecord {
  std::string run_id;
  std::string model;
  std::optional<std::size_t> n, r;
  std::optional<double> a, b, V, w, z;
  std::optional<std::size_t> l, N;
  std::optional<std::uint64_t> seed;
  std::optional<double> s_hat, s_se, u_hat, u_se;
  std::optional<double> gamma_formula, gamma_empirical;
  std::optional<std::string> status;
  nlohmann::json extra = nlohmann::json::object();  // JSON sidecar only
};

inline constexpr const char* kResultsHeader =
    "run_id,model,n,r,a,b,V,w,z,l,N,seed,s_hat,s_se,u_hat,u_se,gamma_formula,gamma_empirical,"
    "status";

std::string to_csv(std::span<const ResultRecord> records);
std::vector<ResultRecord> parse_results_csv(const std::string& text);
nlohmann::json to_json(const ResultRecord& record);

// Writes `csv_path` and a JSON sidecar next to it (same stem, .json) holding
// every record field plus `meta` (config echo, timing).
void write_results(std::span<const ResultRecord> records, const std::filesystem::path& csv_path,
                   const nlohmann::json& meta = nlohmann::json::object());
// JSON only, at `json_path`.
void write_results_json(std::span<const ResultRecord> records,
                        const std::filesystem::path& json_path,
                        const nlohmann::json& meta = nlohmann::json::object());

}  // namespace gibbsgap
