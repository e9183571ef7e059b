#include "lpembed/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <type_traits>

#include "lpembed/stable.hpp"

namespace lpembed {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

template <typename T>
T parse_scalar(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T value{};
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
    throw std::runtime_error("config: cannot parse " + key + " = '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw std::runtime_error("config: cannot parse " + key + " = '" + text + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const std::string& item : split_list(text))
    out.push_back(parse_scalar<T>(key, item));
  return out;
}

template <typename T>
std::string join_list(const std::vector<T>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>)
      s += format_f64(values[i]);
    else
      s += std::to_string(values[i]);
  }
  return s;
}

}  // namespace

std::string format_f64(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void apply_config_assignment(ExperimentConfig& c, const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos)
    throw std::runtime_error("config: expected 'key = value', got '" + line + "'");
  const std::string key = trim(line.substr(0, eq));
  const std::string value = trim(line.substr(eq + 1));

  if (key == "experiment") c.experiment = value;
  else if (key == "n") c.n = parse_scalar<int>(key, value);
  else if (key == "eta") c.eta = parse_scalar<double>(key, value);
  else if (key == "eta_grid") c.eta_grid = parse_list<double>(key, value);
  else if (key == "p") c.p = parse_scalar<double>(key, value);
  else if (key == "r") c.r = parse_scalar<double>(key, value);
  else if (key == "J") c.depth = parse_scalar<std::int64_t>(key, value);
  else if (key == "trials") c.trials = parse_scalar<std::int64_t>(key, value);
  else if (key == "samples") c.samples = parse_scalar<std::int64_t>(key, value);
  else if (key == "supports_per_trial")
    c.supports_per_trial = parse_scalar<int>(key, value);
  else if (key == "seed") c.seed = parse_scalar<std::uint64_t>(key, value);
  else if (key == "c_prime") c.c_prime = parse_scalar<double>(key, value);
  else if (key == "m_rule") {
    if (value != "eq1" && value != "explicit")
      throw std::runtime_error("config: m_rule must be eq1 or explicit");
    c.m_rule = value;
  }
  else if (key == "m") c.m = parse_scalar<int>(key, value);
  else if (key == "m_coeff") c.m_coeff = parse_scalar<double>(key, value);
  else if (key == "theta_trials") c.theta_trials = parse_scalar<int>(key, value);
  else if (key == "normalize") c.normalize = parse_bool(key, value);
  else if (key == "k") c.k = parse_scalar<int>(key, value);
  else if (key == "s_grid") c.s_grid = parse_list<int>(key, value);
  else if (key == "n_grid") c.n_grid = parse_list<int>(key, value);
  else if (key == "p_grid") c.p_grid = parse_list<double>(key, value);
  else if (key == "t_grid") c.t_grid = parse_list<double>(key, value);
  else if (key == "phase_trials")
    c.phase_trials = parse_scalar<std::int64_t>(key, value);
  else if (key == "out") c.out = value;
  else if (key == "threads") c.threads = parse_scalar<int>(key, value);
  else throw std::runtime_error("config: unknown key '" + key + "'");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    apply_config_assignment(c, line);
  }
  return c;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string emit_config(const ExperimentConfig& c) {
  std::string s;
  const auto line = [&s](const std::string& key, const std::string& value) {
    if (!value.empty()) s += key + " = " + value + "\n";
  };
  line("experiment", c.experiment);
  line("n", std::to_string(c.n));
  line("eta", format_f64(c.eta));
  line("eta_grid", join_list(c.eta_grid));
  line("p", format_f64(c.p));
  line("r", format_f64(c.r));
  line("J", std::to_string(c.depth));
  line("trials", std::to_string(c.trials));
  line("samples", std::to_string(c.samples));
  line("supports_per_trial", std::to_string(c.supports_per_trial));
  line("seed", std::to_string(c.seed));
  line("c_prime", format_f64(c.c_prime));
  line("m_rule", c.m_rule);
  line("m", std::to_string(c.m));
  line("m_coeff", format_f64(c.m_coeff));
  line("theta_trials", std::to_string(c.theta_trials));
  line("normalize", c.normalize ? "true" : "false");
  line("k", std::to_string(c.k));
  line("s_grid", join_list(c.s_grid));
  line("n_grid", join_list(c.n_grid));
  line("p_grid", join_list(c.p_grid));
  line("t_grid", join_list(c.t_grid));
  line("phase_trials", std::to_string(c.phase_trials));
  line("out", c.out);
  line("threads", std::to_string(c.threads));
  return s;
}

int block_size_eq1(double coeff, double eta, int n) {
  if (!(coeff > 0) || !(eta > 0) || n < 1)
    throw std::domain_error("block size rule needs coeff > 0, eta > 0, n >= 1");
  const double value = coeff * (eta / std::log1p(1.0 / eta)) * n;
  return std::max(1, static_cast<int>(std::floor(value)));
}

int resolved_block_size(const ExperimentConfig& c, double eta, int n) {
  if (c.m_rule == "explicit") {
    if (c.m < 1) throw std::runtime_error("config: m_rule = explicit needs m >= 1");
    return c.m;
  }
  return block_size_eq1(c.m_coeff, eta, n);
}

int resolved_depth(const ExperimentConfig& c) {
  if (c.depth > 0) return static_cast<int>(c.depth);
  return default_truncation_depth(c.p);
}

std::vector<double> resolved_eta_grid(const ExperimentConfig& c) {
  if (!c.eta_grid.empty()) return c.eta_grid;
  return {0.0625, 0.125, 0.25, 0.5, 1.0};
}

std::vector<int> resolved_s_grid(const ExperimentConfig& c) {
  if (!c.s_grid.empty()) return c.s_grid;
  return {1, 2, 4, 8, 12, 16, 24, 32};
}

std::vector<int> resolved_n_grid(const ExperimentConfig& c) {
  if (!c.n_grid.empty()) return c.n_grid;
  return {128, 256, 512};
}

std::vector<double> resolved_p_grid(const ExperimentConfig& c) {
  if (!c.p_grid.empty()) return c.p_grid;
  return {0.5, 1.0, 1.5, 2.0};
}

std::vector<double> resolved_t_grid(const ExperimentConfig& c) {
  if (!c.t_grid.empty()) return c.t_grid;
  return {0.25, 0.5, 1.0, 2.0};
}

}  // namespace lpembed
