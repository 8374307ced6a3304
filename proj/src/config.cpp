#include "thpi/config.hpp"

#include "thpi/error.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <charconv>
#include <fstream>
#include <sstream>

namespace thpi {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view text, std::string_view key) {
  text = trim(text);
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc{} || ptr != last) {
    throw ConfigError(fmt::format("config: '{}' is not a valid value for {}", text, key));
  }
  return value;
}

bool parse_bool(std::string_view text, std::string_view key) {
  text = trim(text);
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw ConfigError(fmt::format("config: '{}' is not a boolean for {}", text, key));
}

template <typename T>
std::vector<T> split_list(std::string_view text, std::string_view key) {
  std::vector<T> out;
  std::size_t pos = 0;
  text = trim(text);
  if (text.empty()) return out;
  while (true) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view item =
        text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if constexpr (std::is_same_v<T, Method>) {
      out.push_back(parse_method(trim(item)));
    } else {
      out.push_back(parse_number<T>(item, key));
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

void require(bool ok, std::string_view what) {
  if (!ok) throw ConfigError(fmt::format("config: {}", what));
}

}  // namespace

template <typename T>
std::vector<T> parse_list(std::string_view text) {
  return split_list<T>(text, "list");
}

template std::vector<Index> parse_list<Index>(std::string_view);
template std::vector<std::uint64_t> parse_list<std::uint64_t>(std::string_view);
template std::vector<Method> parse_list<Method>(std::string_view);

std::string_view to_string(ThresholdMode mode) {
  return mode == ThresholdMode::database ? "database" : "queries";
}

const std::vector<double>& lambda_grid() {
  static const std::vector<double> grid{0.0, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 2.0};
  return grid;
}

void RunConfig::validate() const {
  require(!methods.empty(), "at least one method is required");
  require(!bits.empty(), "at least one code length is required");
  for (Index b : bits) require(b >= 1 && b <= 1024, fmt::format("bits {} outside [1, 1024]", b));
  require(alpha > 0.0 && alpha <= 1.0, fmt::format("alpha {} outside (0, 1]", alpha));
  require(test_fraction >= 0.0 && test_fraction < 1.0,
          fmt::format("test_fraction {} outside [0, 1)", test_fraction));
  require(lambda1 >= 0.0, fmt::format("lambda1 {} is negative", lambda1));
  require(lambda2 >= 0.0, fmt::format("lambda2 {} is negative", lambda2));
  require(k_graph >= 1, "k must be >= 1");
  require(iters >= 1, "iters must be >= 1");
  require(inner_iters >= 1, "inner_iters must be >= 1");
  require(rel_tol >= 0.0, "rel_tol must be >= 0");
  require(!seeds.empty(), "at least one seed is required");
  require(pca_energy >= 0.0 && pca_energy <= 1.0,
          fmt::format("pca_energy {} outside [0, 1]", pca_energy));
  require(r_groundtruth >= 1, "r_groundtruth must be >= 1");
  for (Index k : ks) require(k >= 1, "every K must be >= 1");
  require(workers >= 1, "workers must be >= 1");
  require(format.empty() || format == "csv" || format == "thpi-bin",
          fmt::format("unknown format '{}'", format));
}

void apply_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "method" || key == "methods") c.methods = split_list<Method>(value, key);
  else if (key == "bits") c.bits = split_list<Index>(value, key);
  else if (key == "alpha") c.alpha = parse_number<double>(value, key);
  else if (key == "test_fraction") c.test_fraction = parse_number<double>(value, key);
  else if (key == "lambda1") c.lambda1 = parse_number<double>(value, key);
  else if (key == "lambda2") c.lambda2 = parse_number<double>(value, key);
  else if (key == "k") c.k_graph = parse_number<Index>(value, key);
  else if (key == "iters") c.iters = parse_number<std::uint32_t>(value, key);
  else if (key == "inner_iters") c.inner_iters = parse_number<std::uint32_t>(value, key);
  else if (key == "rel_tol") c.rel_tol = parse_number<double>(value, key);
  else if (key == "seed") c.seeds = {parse_number<std::uint64_t>(value, key)};
  else if (key == "seeds") c.seeds = split_list<std::uint64_t>(value, key);
  else if (key == "pca_energy") c.pca_energy = parse_number<double>(value, key);
  else if (key == "pca_to_bits") c.pca_to_bits = parse_bool(value, key);
  else if (key == "r_groundtruth") c.r_groundtruth = parse_number<Index>(value, key);
  else if (key == "ks") c.ks = split_list<Index>(value, key);
  else if (key == "workers") c.workers = parse_number<std::uint32_t>(value, key);
  else if (key == "rebalance") c.rebalance = parse_bool(value, key);
  else if (key == "threshold_mode") {
    if (value == "database") c.threshold_mode = ThresholdMode::database;
    else if (value == "queries") c.threshold_mode = ThresholdMode::queries;
    else throw ConfigError(fmt::format("config: threshold_mode '{}' (expected database|queries)", value));
  }
  else if (key == "target") c.target = std::string(value);
  else if (key == "source") c.source = std::string(value);
  else if (key == "source_extra") c.source_extra = std::string(value);
  else if (key == "out") c.out = std::string(value);
  else if (key == "format") c.format = std::string(value);
  else throw ConfigError(fmt::format("config: unknown key '{}'", key));
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("config line {}: expected key=value", line_no));
    }
    try {
      apply_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("config line {}: {}", line_no, e.what()));
    }
  }
  return base;
}

std::string to_config_text(const RunConfig& c) {
  std::vector<std::string_view> methods;
  for (Method m : c.methods) methods.push_back(to_string(m));
  std::string out;
  out += fmt::format("method={}\n", fmt::join(methods, ","));
  out += fmt::format("bits={}\n", fmt::join(c.bits, ","));
  out += fmt::format("alpha={}\n", c.alpha);
  out += fmt::format("test_fraction={}\n", c.test_fraction);
  out += fmt::format("lambda1={}\n", c.lambda1);
  out += fmt::format("lambda2={}\n", c.lambda2);
  out += fmt::format("k={}\n", c.k_graph);
  out += fmt::format("iters={}\n", c.iters);
  out += fmt::format("inner_iters={}\n", c.inner_iters);
  out += fmt::format("rel_tol={}\n", c.rel_tol);
  out += fmt::format("seeds={}\n", fmt::join(c.seeds, ","));
  out += fmt::format("pca_energy={}\n", c.pca_energy);
  out += fmt::format("pca_to_bits={}\n", c.pca_to_bits ? "true" : "false");
  out += fmt::format("r_groundtruth={}\n", c.r_groundtruth);
  out += fmt::format("ks={}\n", fmt::join(c.ks, ","));
  out += fmt::format("workers={}\n", c.workers);
  out += fmt::format("rebalance={}\n", c.rebalance ? "true" : "false");
  out += fmt::format("threshold_mode={}\n", to_string(c.threshold_mode));
  out += fmt::format("target={}\n", c.target);
  out += fmt::format("source={}\n", c.source);
  out += fmt::format("source_extra={}\n", c.source_extra);
  out += fmt::format("out={}\n", c.out);
  out += fmt::format("format={}\n", c.format);
  return out;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace thpi
