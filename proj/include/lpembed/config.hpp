#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

// Experiment configuration: plain `key = value` text, `#` comments, lists
// comma-separated.  emit_config produces a canonical form whose parse is a
// fixpoint, so configs echo losslessly into run manifests.
namespace lpembed {

struct ExperimentConfig {
  std::string experiment = "certify";
  int n = 256;
  double eta = 0.25;
  std::vector<double> eta_grid;  // distortion study; empty = default grid
  double p = 1.5;
  double r = 1.0;
  std::int64_t depth = 0;  // config key "J"; 0 = derived from p
  std::int64_t trials = 10000;
  std::int64_t samples = 10000;
  int supports_per_trial = 1;
  std::uint64_t seed = 1;
  double c_prime = 1.0;
  std::string m_rule = "eq1";  // "eq1" or "explicit"
  int m = 0;                   // used when m_rule = explicit
  double m_coeff = 0.1;
  int theta_trials = 10000;
  bool normalize = false;  // certify with the norm-calibrated operator
  int k = 0;               // measurement rows for phase/gelfand; 0 = n/2
  std::vector<int> s_grid;       // phase study; empty = default grid
  std::vector<int> n_grid;       // gelfand study; empty = default grid
  std::vector<double> p_grid;    // stable validation; empty = default grid
  std::vector<double> t_grid;    // stable validation; empty = default grid
  std::int64_t phase_trials = 100;
  std::string out;  // output directory; empty = no files written
  int threads = 1;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

// Applies one `key = value` (or `key=value`) assignment in place; used both
// by the parser and by command-line overrides.
void apply_config_assignment(ExperimentConfig& config, const std::string& line);

// Canonical text form; parse_config_text(emit_config(c)) reproduces c.
std::string emit_config(const ExperimentConfig& config);

// Block size rule: max(1, floor(coeff * eta / log(1 + 1/eta) * n)).
int block_size_eq1(double coeff, double eta, int n);

// Resolved block size for the given aspect ratio under config.m_rule.
int resolved_block_size(const ExperimentConfig& config, double eta, int n);

// Config depth if set, else the tail-driven default for p.
int resolved_depth(const ExperimentConfig& config);

// Grids with defaults substituted for empty values.
std::vector<double> resolved_eta_grid(const ExperimentConfig& config);
std::vector<int> resolved_s_grid(const ExperimentConfig& config);
std::vector<int> resolved_n_grid(const ExperimentConfig& config);
std::vector<double> resolved_p_grid(const ExperimentConfig& config);
std::vector<double> resolved_t_grid(const ExperimentConfig& config);

// Shortest text that round-trips the double exactly (17 significant digits).
std::string format_f64(double v);

}  // namespace lpembed
