#include "gibbsgap/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <type_traits>
#include <sstream>
#include <string_view>

#include "gibbsgap/distributions.hpp"
#include "gibbsgap/errors.hpp"
#include "gibbsgap/parallel.hpp"
#include "gibbsgap/rng.hpp"

namespace gibbsgap {

SimulatedData simulate(const SimConfig& cfg, bool keep_raw, std::size_t workers) {
  if (!(cfg.A_true > 0.0 && std::isfinite(cfg.A_true))) throw InvalidParameter("A_true must be > 0");
  if (!(cfg.V_true > 0.0 && std::isfinite(cfg.V_true))) throw InvalidParameter("V_true must be > 0");
  if (cfg.n < 2) throw InvalidParameter("n must be >= 2");
  if (cfg.r < 1) throw InvalidParameter("r must be >= 1");
  if (keep_raw && cfg.group_means_only && cfg.r > 1) {
    throw InvalidParameter("raw replicates are not simulated with group_means_only");
  }
  const std::size_t n = cfg.n;
  const std::size_t r = cfg.r;
  const bool direct_means = cfg.group_means_only && r > 1;
  const double sd_A = std::sqrt(cfg.A_true);
  const double sd_V = std::sqrt(cfg.V_true);
  const double sd_mean = std::sqrt(cfg.V_true / static_cast<double>(r));

  std::vector<double> means(n);
  std::vector<double> raw;
  if (keep_raw) raw.resize(n * r);
  const std::size_t blocks = (n + kSimulationBlock - 1) / kSimulationBlock;
  parallel_for_index(blocks, workers, [&](std::size_t blk) {
    Rng rng = make_substream(cfg.seed, blk);
    const std::size_t end = std::min(n, (blk + 1) * kSimulationBlock);
    for (std::size_t i = blk * kSimulationBlock; i < end; ++i) {
      const double theta = sd_A * sample_std_normal(rng);
      if (direct_means) {
        means[i] = theta + sd_mean * sample_std_normal(rng);
        continue;
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < r; ++j) {
        const double y = theta + sd_V * sample_std_normal(rng);
        if (keep_raw) raw[i * r + j] = y;
        sum += y;
      }
      means[i] = sum / static_cast<double>(r);
    }
  });
  SimulatedData out;
  out.summary = keep_raw ? summarize(raw, r) : summarize_group_means(std::move(means), r);
  out.raw = std::move(raw);
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view cell, std::size_t line_no) {
  cell = trim(cell);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(cell) +
                     "' as a finite real number");
  }
  return value;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

}  // namespace

DataSummary read_dataset(const std::filesystem::path& path, std::size_t r) {
  if (r < 1) throw InvalidParameter("r must be >= 1");
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view content = trim(line);
    if (content.empty()) continue;
    const auto cells = split_commas(content);
    if (r > 1 && cells.size() != r) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(r) +
                       " values, found " + std::to_string(cells.size()));
    }
    for (auto cell : cells) values.push_back(parse_double(cell, line_no));
  }
  if (values.empty()) throw ParseError(path.string() + ": no data");
  if (values.size() / r < 2) throw InvalidParameter(path.string() + ": need at least n = 2 groups");
  return summarize(values, r);
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

void write_dataset(const std::filesystem::path& path, std::span<const double> raw, std::size_t r) {
  if (r < 1 || raw.size() % r != 0) throw InvalidParameter("data length is not a multiple of r");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < raw.size(); i += r) {
    for (std::size_t j = 0; j < r; ++j) {
      if (j) out << ',';
      out << format_double(raw[i + j]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

template <class T>
std::string cell(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_same_v<T, double>) {
    return format_double(*v);
  } else if constexpr (std::is_same_v<T, std::string>) {
    return *v;
  } else {
    return std::to_string(*v);
  }
}

template <class T>
std::optional<T> parse_cell(std::string_view s, std::size_t line_no) {
  if (s.empty()) return std::nullopt;
  if constexpr (std::is_same_v<T, std::string>) {
    return std::string(s);
  } else if constexpr (std::is_same_v<T, double>) {
    // non-finite values (e.g. inf) are legitimate in results
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return parse_double(s, line_no);
  } else {
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": bad integer '" + std::string(s) + "'");
    }
    return value;
  }
}

template <class T>
void put(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  if (!v) {
    j[key] = nullptr;
  } else if constexpr (std::is_same_v<T, double>) {
    j[key] = std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json(format_double(*v));
  } else {
    j[key] = *v;
  }
}

}  // namespace

std::string to_csv(std::span<const ResultRecord> records) {
  std::string out = kResultsHeader;
  out += '\n';
  for (const auto& rec : records) {
    const std::string cells[] = {rec.run_id,
                                 rec.model,
                                 cell(rec.n),
                                 cell(rec.r),
                                 cell(rec.a),
                                 cell(rec.b),
                                 cell(rec.V),
                                 cell(rec.w),
                                 cell(rec.z),
                                 cell(rec.l),
                                 cell(rec.N),
                                 cell(rec.seed),
                                 cell(rec.s_hat),
                                 cell(rec.s_se),
                                 cell(rec.u_hat),
                                 cell(rec.u_se),
                                 cell(rec.gamma_formula),
                                 cell(rec.gamma_empirical),
                                 cell(rec.status)};
    bool first = true;
    for (const auto& c : cells) {
      if (c.find_first_of(",\n\"") != std::string::npos) {
        throw InvalidParameter("result field contains a CSV delimiter: " + c);
      }
      if (!first) out += ',';
      out += c;
      first = false;
    }
    out += '\n';
  }
  return out;
}

std::vector<ResultRecord> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw ParseError("line 1: unexpected results header");
  }
  std::vector<ResultRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = split_commas(line);
    if (c.size() != 19) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 19 fields, found " +
                       std::to_string(c.size()));
    }
    ResultRecord rec;
    rec.run_id = std::string(c[0]);
    rec.model = std::string(c[1]);
    rec.n = parse_cell<std::size_t>(c[2], line_no);
    rec.r = parse_cell<std::size_t>(c[3], line_no);
    rec.a = parse_cell<double>(c[4], line_no);
    rec.b = parse_cell<double>(c[5], line_no);
    rec.V = parse_cell<double>(c[6], line_no);
    rec.w = parse_cell<double>(c[7], line_no);
    rec.z = parse_cell<double>(c[8], line_no);
    rec.l = parse_cell<std::size_t>(c[9], line_no);
    rec.N = parse_cell<std::size_t>(c[10], line_no);
    rec.seed = parse_cell<std::uint64_t>(c[11], line_no);
    rec.s_hat = parse_cell<double>(c[12], line_no);
    rec.s_se = parse_cell<double>(c[13], line_no);
    rec.u_hat = parse_cell<double>(c[14], line_no);
    rec.u_se = parse_cell<double>(c[15], line_no);
    rec.gamma_formula = parse_cell<double>(c[16], line_no);
    rec.gamma_empirical = parse_cell<double>(c[17], line_no);
    rec.status = parse_cell<std::string>(c[18], line_no);
    records.push_back(std::move(rec));
  }
  return records;
}

nlohmann::json to_json(const ResultRecord& rec) {
  nlohmann::json j;
  j["run_id"] = rec.run_id;
  j["model"] = rec.model;
  put(j, "n", rec.n);
  put(j, "r", rec.r);
  put(j, "a", rec.a);
  put(j, "b", rec.b);
  put(j, "V", rec.V);
  put(j, "w", rec.w);
  put(j, "z", rec.z);
  put(j, "l", rec.l);
  put(j, "N", rec.N);
  put(j, "seed", rec.seed);
  put(j, "s_hat", rec.s_hat);
  put(j, "s_se", rec.s_se);
  put(j, "u_hat", rec.u_hat);
  put(j, "u_se", rec.u_se);
  put(j, "gamma_formula", rec.gamma_formula);
  put(j, "gamma_empirical", rec.gamma_empirical);
  put(j, "status", rec.status);
  for (const auto& [key, value] : rec.extra.items()) j[key] = value;
  return j;
}

void write_results_json(std::span<const ResultRecord> records,
                        const std::filesystem::path& json_path, const nlohmann::json& meta) {
  nlohmann::json doc = meta.is_object() ? meta : nlohmann::json::object();
  doc["records"] = nlohmann::json::array();
  for (const auto& rec : records) doc["records"].push_back(to_json(rec));
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + json_path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + json_path.string());
}

void write_results(std::span<const ResultRecord> records, const std::filesystem::path& csv_path,
                   const nlohmann::json& meta) {
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + csv_path.string());
    out << to_csv(records);
    if (!out) throw std::runtime_error("write failed: " + csv_path.string());
  }
  auto sidecar = csv_path;
  sidecar.replace_extension(".json");
  write_results_json(records, sidecar, meta);
}

}  // namespace gibbsgap
