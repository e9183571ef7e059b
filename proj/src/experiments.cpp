#include "lpembed/experiments.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "lpembed/quasinorm.hpp"
#include "lpembed/rng.hpp"
#include "lpembed/stable.hpp"
#include "lpembed/version.hpp"

namespace lpembed {

namespace {

using ordered_json = nlohmann::ordered_json;
constexpr double slack = 1e-9;

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) { return format_f64(v); }
std::string fmt(std::int64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::filesystem::path prepare_out_dir(const ExperimentConfig& config) {
  std::filesystem::path dir(config.out);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ",";
    s += cells[i];
  }
  s += "\n";
  return s;
}

// Manifest layout: summary key=value lines, the elapsed line (the only
// nondeterministic byte range), then the canonical config echo.
std::string manifest_text(const std::string& experiment, bool pass,
                          const std::vector<std::pair<std::string, std::string>>& summary,
                          double elapsed_seconds, const ExperimentConfig& config) {
  std::string s;
  s += "tool=lpembed " + std::string(version) + "\n";
  s += "experiment=" + experiment + "\n";
  s += "pass=" + fmt(pass) + "\n";
  for (const auto& [key, value] : summary) s += key + "=" + value + "\n";
  s += "elapsed_seconds=" + fmt(elapsed_seconds) + "\n";
  s += "config:\n";
  s += emit_config(config);
  return s;
}

ordered_json to_json(const PropertyCertificate& cert) {
  ordered_json j;
  j["property"] = cert.property;
  j["n"] = cert.n;
  j["rows"] = cert.rows;
  j["m"] = cert.m;
  j["kappa"] = cert.kappa;
  j["p"] = cert.p;
  j["r"] = cert.r;
  j["trials"] = cert.trials;
  j["support_samples"] = cert.support_samples;
  j["seed"] = cert.seed;
  j["alpha_hat"] = cert.alpha_hat;
  j["beta_hat"] = cert.beta_hat;
  j["violations"] = cert.violations;
  j["pass"] = cert.pass();
  return j;
}

ordered_json to_json(const KashinReport& rep) {
  ordered_json j;
  j["samples"] = rep.samples;
  j["gamma"] = rep.gamma;
  j["lower_bound_coefficient"] = rep.lower_bound_coefficient;
  j["min_ratio"] = rep.min_ratio;
  j["max_ratio"] = rep.max_ratio;
  j["min_ratio_in_sigma"] = rep.min_ratio_in_sigma;
  j["sigma_count"] = rep.sigma_count;
  j["upper_violations"] = rep.upper_violations;
  j["lower_violations"] = rep.lower_violations;
  j["upper_violations_with_valid_premises"] =
      rep.upper_violations_with_valid_premises;
  return j;
}

ordered_json to_json(const DistortionReport& rep) {
  ordered_json j;
  j["samples"] = rep.samples;
  j["min_ratio"] = rep.min_ratio;
  j["max_ratio"] = rep.max_ratio;
  j["upper_bound"] = rep.upper_bound;
  j["sandwich_violations"] = rep.sandwich_violations;
  j["bin_edges"] = rep.bin_edges;
  j["bin_counts"] = rep.bin_counts;
  return j;
}

void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// Least-squares slope of ys on xs.
double fitted_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx == 0 ? 0.0 : sxy / sxx;
}

}  // namespace

Eigen::VectorXd sparse_signal(std::uint64_t seed, std::int64_t index, int n, int s) {
  if (n < 1 || s < 0 || s > n)
    throw std::domain_error("sparse_signal: need 0 <= s <= n");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  if (s == 0) return y;
  const rng::Stream structure(seed, 2 * static_cast<std::uint64_t>(index));
  const rng::Stream values(seed, 2 * static_cast<std::uint64_t>(index) + 1);
  const std::vector<int> supp = sample_support(structure, 0, n, s);
  for (int k = 0; k < s; ++k)
    y[supp[static_cast<std::size_t>(k)]] = (values.bits(k) & 1) ? 1.0 : -1.0;
  return y;
}

CertifyResult run_certify(const ExperimentConfig& config) {
  Timer timer;
  CertifyResult res;
  res.config = config;
  const int n = config.n;
  const double eta = config.eta;
  const double p = config.p;
  const double r = config.r;
  res.depth = resolved_depth(config);
  res.m = resolved_block_size(config, eta, n);
  res.kappa = 1.0 / res.m;

  EmbeddingOperator A;
  if (config.normalize) {
    A = build_T(n, row_count(eta, n), p, r, res.depth, config.theta_trials,
                config.seed, config.threads);
    res.theta_scale = 1.0 / A.normalization;
  } else {
    A = build_S(n, eta, p, res.depth, config.seed, config.threads);
  }
  const EmbeddingOperator B = build_id_p2(n, res.m, p, r);

  res.p1 = check_p1(A, res.m, p, r, config.trials, config.supports_per_trial,
                    rng::derive_seed(config.seed, 1), config.threads);
  res.p2 = check_p2(B, res.kappa, res.m, p, r, config.trials,
                    rng::derive_seed(config.seed, 2), config.threads);

  if (res.p1.pass() && res.p2.pass()) {
    const auto [U, V] = kashin_normalize(A, res.p1, B, res.p2, res.m, res.kappa);
    res.kashin = check_kashin(U, V, p, r, res.m, res.kappa, res.p1.alpha_hat,
                              res.p1.beta_hat, config.samples,
                              rng::derive_seed(config.seed, 3), config.threads);
    res.composed = true;
  }

  const EmbeddingOperator W =
      build_W(n, eta, p, r, res.depth, config.c_prime,
              rng::derive_seed(config.seed, 4), config.threads);
  res.distortion = measure_distortion(W, p, r, config.samples,
                                      rng::derive_seed(config.seed, 5),
                                      config.threads);

  res.pass = res.composed && res.kashin.upper_violations == 0 &&
             res.kashin.lower_violations == 0 &&
             res.distortion.sandwich_violations == 0 &&
             res.distortion.min_ratio > 0 &&
             res.distortion.max_ratio <= res.distortion.upper_bound * (1 + slack);
  res.elapsed_seconds = timer.seconds();
  return res;
}

DistortionStudyResult run_distortion_study(const ExperimentConfig& config) {
  Timer timer;
  DistortionStudyResult res;
  res.config = config;
  res.depth = resolved_depth(config);
  const ExponentTriple e = ExponentTriple::make(config.p, config.r);
  res.upper_bound = 3 * std::pow(2.0, 1.0 / config.r);

  const std::vector<double> grid = resolved_eta_grid(config);
  std::vector<double> log_scale, log_min;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const double eta = grid[c];
    const EmbeddingOperator W =
        build_W(config.n, eta, config.p, config.r, res.depth, config.c_prime,
                rng::derive_seed(config.seed, 100 + c), config.threads);
    const DistortionReport rep =
        measure_distortion(W, config.p, config.r, config.samples,
                           rng::derive_seed(config.seed, 200 + c), config.threads);
    DistortionRow row;
    row.eta = eta;
    row.m = block_size_eq1(config.m_coeff, eta, config.n);
    row.samples = rep.samples;
    row.min_ratio = rep.min_ratio;
    row.max_ratio = rep.max_ratio;
    row.predicted_scale = std::pow(eta / std::log1p(1.0 / eta), e.inv_q);
    row.sandwich_violations = rep.sandwich_violations;
    res.rows.push_back(row);
    if (row.min_ratio > 0) {
      log_scale.push_back(std::log(eta / std::log1p(1.0 / eta)));
      log_min.push_back(std::log(row.min_ratio));
    }
  }

  if (e.inv_q > 0 && log_scale.size() >= 2) {
    res.slope_raw = fitted_slope(log_scale, log_min);
    res.slope_scaled = res.slope_raw / e.inv_q;
  }

  bool ok = !res.rows.empty();
  for (const DistortionRow& row : res.rows)
    ok = ok && row.sandwich_violations == 0 && row.min_ratio > 0 &&
         row.max_ratio <= res.upper_bound * (1 + slack);
  if (ok && e.inv_q > 0 && res.rows.size() >= 2) {
    ok = res.slope_scaled >= 0.75 && res.slope_scaled <= 1.25;
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      if (res.rows[i].eta < res.rows[lo].eta) lo = i;
      if (res.rows[i].eta > res.rows[hi].eta) hi = i;
    }
    ok = ok && res.rows[hi].min_ratio > res.rows[lo].min_ratio;
  }
  res.pass = ok;
  res.elapsed_seconds = timer.seconds();
  return res;
}

PhaseTransitionResult run_phase_transition(const ExperimentConfig& config) {
  Timer timer;
  PhaseTransitionResult res;
  res.config = config;
  res.depth = resolved_depth(config);
  const int n = config.n;
  res.k = config.k > 0 ? config.k : n / 2;
  if (res.k < 1 || res.k >= n)
    throw std::domain_error("phase study needs 1 <= k < n");
  const double eta = static_cast<double>(res.k) / n;
  res.m = resolved_block_size(config, eta, n);

  const EmbeddingOperator S =
      build_S(n, eta, config.p, res.depth, config.seed, config.threads);
  res.p1 = check_p1(S, res.m, config.p, config.r, config.trials,
                    config.supports_per_trial, rng::derive_seed(config.seed, 1),
                    config.threads);
  res.calibrated_s = res.p1.pass()
                         ? calibrated_sparsity(res.m, config.p, config.r,
                                               res.p1.alpha_hat, res.p1.beta_hat)
                         : 0;

  const DeltaRSolver solver(S);
  const double fp_tol = 1e-9 * std::pow(static_cast<double>(n), 1.0 / config.r);
  for (int s : resolved_s_grid(config)) {
    if (s < 0 || s > n)
      throw std::domain_error("phase study: sparsity out of range");
    PhaseRow row;
    row.s = s;
    row.trials = config.phase_trials;
    double err_sum = 0, iter_sum = 0;
    std::int64_t successes = 0;
    const std::uint64_t cell_seed =
        rng::derive_seed(config.seed, 300 + static_cast<std::uint64_t>(s));
    for (std::int64_t t = 0; t < config.phase_trials; ++t) {
      const Eigen::VectorXd y = sparse_signal(cell_seed, t, n, s);
      DeltaROptions options;
      options.sparsity_hint = s;
      const RecoveryOutcome outcome = solver.solve(y, config.r, options);
      successes += outcome.exact;
      err_sum += quasi_norm(y - outcome.estimate, config.r);
      iter_sum += outcome.iterations;
      // Exactly s-sparse input: the instance-optimality bound degenerates to
      // demanding (near-)exact recovery.
      row.bound_failures +=
          quasi_norm(y - outcome.estimate, config.r) > fp_tol;
    }
    row.success_rate = static_cast<double>(successes) / config.phase_trials;
    row.mean_error = err_sum / config.phase_trials;
    row.mean_iterations = iter_sum / config.phase_trials;
    res.rows.push_back(row);
  }

  bool ok = res.p1.pass();
  for (const PhaseRow& row : res.rows)
    if (row.s >= 1 && row.s <= res.calibrated_s)
      ok = ok && row.success_rate >= 0.9;
  res.pass = ok;
  res.elapsed_seconds = timer.seconds();
  return res;
}

GelfandStudyResult run_gelfand_study(const ExperimentConfig& config) {
  Timer timer;
  GelfandStudyResult res;
  res.config = config;
  res.depth = resolved_depth(config);
  res.log_factor_note = config.r == 1.0;

  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  const std::vector<int> grid = resolved_n_grid(config);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const int n = grid[i];
    const int k = n / 2;  // fixed aspect ratio across the grid
    const EmbeddingOperator S =
        build_S(n, 0.5, config.p, res.depth,
                rng::derive_seed(config.seed, 400 + i), config.threads);
    const GelfandEstimate est =
        gelfand_ratio(S, config.p, config.r, config.samples,
                      rng::derive_seed(config.seed, 500 + i), config.threads);
    GelfandRow row;
    row.n = n;
    row.k = k;
    row.samples = est.samples;
    row.max_ratio = est.max_ratio;
    row.reference_scale = est.reference_scale;
    row.c_hat = est.c_hat;
    res.rows.push_back(row);
    lo = std::min(lo, est.c_hat);
    hi = std::max(hi, est.c_hat);
  }
  res.min_c_hat = lo;
  res.max_c_hat = hi;
  res.pass = !res.rows.empty() && lo > 0 && std::isfinite(hi);
  res.elapsed_seconds = timer.seconds();
  return res;
}

StableValidationResult run_stable_validation(const ExperimentConfig& config) {
  Timer timer;
  StableValidationResult res;
  res.config = config;
  const std::vector<double> ps = resolved_p_grid(config);
  const std::vector<double> ts = resolved_t_grid(config);
  const double critical =
      ks_critical(config.samples, config.samples, 0.001);

  for (std::size_t ip = 0; ip < ps.size(); ++ip) {
    const double p = ps[ip];
    StableSampler sampler{p, rng::derive_seed(config.seed, 600 + ip), 0};
    const Eigen::VectorXd draws =
        sample_stable(sampler, static_cast<int>(config.samples));
    Eigen::VectorXd alpha(2);
    alpha << 1.0, 1.0;
    const double ks = stability_identity_ks(
        p, alpha, static_cast<int>(config.samples),
        rng::derive_seed(config.seed, 700 + ip));
    for (double t : ts) {
      StableRow row;
      row.p = p;
      row.t = t;
      row.samples = config.samples;
      row.cf_error = characteristic_function_error(draws, p, t);
      row.ks_statistic = ks;
      row.ks_critical = critical;
      res.rows.push_back(row);
      res.max_cf_error = std::max(res.max_cf_error, row.cf_error);
    }
    res.max_ks_ratio = std::max(res.max_ks_ratio, ks / critical);
  }
  res.pass = res.max_cf_error <= 0.02 && res.max_ks_ratio < 1.0;
  res.elapsed_seconds = timer.seconds();
  return res;
}

void write_outputs(const CertifyResult& res) {
  const auto dir = prepare_out_dir(res.config);
  std::string csv = csv_line(
      {"n", "eta", "p", "r", "J", "m", "kappa", "seed", "alpha_hat", "beta_hat",
       "p1_violations", "p2_violations", "gamma", "lower_bound_coefficient",
       "kashin_min_ratio", "kashin_max_ratio", "kashin_upper_violations",
       "kashin_lower_violations", "kashin_sigma_count", "distortion_min_ratio",
       "distortion_max_ratio", "distortion_upper_bound", "sandwich_violations",
       "pass"});
  csv += csv_line(
      {fmt(res.config.n), fmt(res.config.eta), fmt(res.config.p),
       fmt(res.config.r), fmt(static_cast<std::int64_t>(res.depth)), fmt(res.m),
       fmt(res.kappa), fmt(res.config.seed), fmt(res.p1.alpha_hat),
       fmt(res.p1.beta_hat), fmt(res.p1.violations), fmt(res.p2.violations),
       fmt(res.kashin.gamma), fmt(res.kashin.lower_bound_coefficient),
       fmt(res.kashin.min_ratio), fmt(res.kashin.max_ratio),
       fmt(res.kashin.upper_violations), fmt(res.kashin.lower_violations),
       fmt(res.kashin.sigma_count), fmt(res.distortion.min_ratio),
       fmt(res.distortion.max_ratio), fmt(res.distortion.upper_bound),
       fmt(res.distortion.sandwich_violations), fmt(res.pass)});
  write_text_file(dir / "certify.csv", csv);

  std::vector<std::pair<std::string, std::string>> summary = {
      {"J", fmt(static_cast<std::int64_t>(res.depth))},
      {"m", fmt(res.m)},
      {"kappa", fmt(res.kappa)},
      {"theta_scale", fmt(res.theta_scale)},
      {"alpha_hat", fmt(res.p1.alpha_hat)},
      {"beta_hat", fmt(res.p1.beta_hat)},
      {"composed", fmt(res.composed)},
      {"kashin_min_ratio", fmt(res.kashin.min_ratio)},
      {"kashin_max_ratio", fmt(res.kashin.max_ratio)},
      {"min_ratio_in_sigma", fmt(res.kashin.min_ratio_in_sigma)},
      {"distortion_min_ratio", fmt(res.distortion.min_ratio)},
      {"distortion_max_ratio", fmt(res.distortion.max_ratio)},
  };
  write_text_file(dir / "manifest.txt",
                  manifest_text("certify", res.pass, summary, res.elapsed_seconds,
                                res.config));
  write_json_file(dir / "p1_certificate.json", to_json(res.p1));
  write_json_file(dir / "p2_certificate.json", to_json(res.p2));
  write_json_file(dir / "kashin_report.json", to_json(res.kashin));
  write_json_file(dir / "distortion_report.json", to_json(res.distortion));
}

void write_outputs(const DistortionStudyResult& res) {
  const auto dir = prepare_out_dir(res.config);
  std::string csv = csv_line({"eta", "m", "samples", "min_ratio", "max_ratio",
                              "predicted_scale", "sandwich_violations"});
  for (const DistortionRow& row : res.rows)
    csv += csv_line({fmt(row.eta), fmt(row.m), fmt(row.samples),
                     fmt(row.min_ratio), fmt(row.max_ratio),
                     fmt(row.predicted_scale), fmt(row.sandwich_violations)});
  write_text_file(dir / "distortion.csv", csv);

  std::vector<std::pair<std::string, std::string>> summary = {
      {"J", fmt(static_cast<std::int64_t>(res.depth))},
      {"upper_bound", fmt(res.upper_bound)},
      {"slope_raw", fmt(res.slope_raw)},
      {"slope_scaled", fmt(res.slope_scaled)},
  };
  write_text_file(dir / "manifest.txt",
                  manifest_text("distortion", res.pass, summary,
                                res.elapsed_seconds, res.config));
}

void write_outputs(const PhaseTransitionResult& res) {
  const auto dir = prepare_out_dir(res.config);
  std::string csv = csv_line({"s", "trials", "success_rate", "mean_error",
                              "mean_iterations", "bound_failures"});
  for (const PhaseRow& row : res.rows)
    csv += csv_line({fmt(row.s), fmt(row.trials), fmt(row.success_rate),
                     fmt(row.mean_error), fmt(row.mean_iterations),
                     fmt(row.bound_failures)});
  write_text_file(dir / "phase.csv", csv);

  std::vector<std::pair<std::string, std::string>> summary = {
      {"J", fmt(static_cast<std::int64_t>(res.depth))},
      {"k", fmt(res.k)},
      {"m", fmt(res.m)},
      {"alpha_hat", fmt(res.p1.alpha_hat)},
      {"beta_hat", fmt(res.p1.beta_hat)},
      {"calibrated_s", fmt(res.calibrated_s)},
  };
  write_text_file(dir / "manifest.txt",
                  manifest_text("phase", res.pass, summary, res.elapsed_seconds,
                                res.config));
  write_json_file(dir / "p1_certificate.json", to_json(res.p1));
}

void write_outputs(const GelfandStudyResult& res) {
  const auto dir = prepare_out_dir(res.config);
  std::string csv = csv_line(
      {"n", "k", "samples", "max_ratio", "reference_scale", "c_hat"});
  for (const GelfandRow& row : res.rows)
    csv += csv_line({fmt(row.n), fmt(row.k), fmt(row.samples), fmt(row.max_ratio),
                     fmt(row.reference_scale), fmt(row.c_hat)});
  write_text_file(dir / "gelfand.csv", csv);

  std::vector<std::pair<std::string, std::string>> summary = {
      {"J", fmt(static_cast<std::int64_t>(res.depth))},
      {"min_c_hat", fmt(res.min_c_hat)},
      {"max_c_hat", fmt(res.max_c_hat)},
      {"reference_omits_log_factor", fmt(res.log_factor_note)},
  };
  write_text_file(dir / "manifest.txt",
                  manifest_text("gelfand", res.pass, summary, res.elapsed_seconds,
                                res.config));
}

void write_outputs(const StableValidationResult& res) {
  const auto dir = prepare_out_dir(res.config);
  std::string csv = csv_line(
      {"p", "t", "samples", "cf_error", "ks_statistic", "ks_critical"});
  for (const StableRow& row : res.rows)
    csv += csv_line({fmt(row.p), fmt(row.t), fmt(row.samples), fmt(row.cf_error),
                     fmt(row.ks_statistic), fmt(row.ks_critical)});
  write_text_file(dir / "stable.csv", csv);

  std::vector<std::pair<std::string, std::string>> summary = {
      {"max_cf_error", fmt(res.max_cf_error)},
      {"max_ks_ratio", fmt(res.max_ks_ratio)},
  };
  write_text_file(dir / "manifest.txt",
                  manifest_text("stable", res.pass, summary, res.elapsed_seconds,
                                res.config));
}

}  // namespace lpembed
