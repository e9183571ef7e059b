#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lpembed/checkers.hpp"
#include "lpembed/config.hpp"
#include "lpembed/recovery.hpp"

// Experiment drivers.  Each run_* consumes a config, performs the study
// deterministically in config.seed, and returns a result struct; when
// config.out is non-empty, write_outputs(result) lays down
//   <out>/<experiment>.csv   fixed column schema, 17-digit floats
//   <out>/manifest.txt       summary + canonical config echo
//   <out>/*.json             certificates and reports, where applicable
// Repeated runs with identical configs produce identical bytes except for the
// manifest's elapsed_seconds line.
namespace lpembed {

struct CertifyResult {
  ExperimentConfig config;
  int depth = 0;
  int m = 0;
  double kappa = 0;
  double theta_scale = 0;  // calibration scale when config.normalize
  PropertyCertificate p1;
  PropertyCertificate p2;
  bool composed = false;  // false when a certificate failed; kashin is empty
  KashinReport kashin;
  DistortionReport distortion;
  double elapsed_seconds = 0;
  bool pass = false;
};

CertifyResult run_certify(const ExperimentConfig& config);

struct DistortionRow {
  double eta = 0;
  int m = 0;
  std::int64_t samples = 0;
  double min_ratio = 0;
  double max_ratio = 0;
  double predicted_scale = 0;  // (eta / log(1 + 1/eta))^(1/q)
  std::int64_t sandwich_violations = 0;
};

struct DistortionStudyResult {
  ExperimentConfig config;
  int depth = 0;
  double upper_bound = 0;  // 3 * 2^(1/r)
  std::vector<DistortionRow> rows;
  double slope_raw = 0;     // d log(min_ratio) / d log(eta / log(1 + 1/eta))
  double slope_scaled = 0;  // slope_raw * q (1 when scaling matches exactly)
  double elapsed_seconds = 0;
  bool pass = false;
};

DistortionStudyResult run_distortion_study(const ExperimentConfig& config);

struct PhaseRow {
  int s = 0;
  std::int64_t trials = 0;
  double success_rate = 0;
  double mean_error = 0;  // mean |y - estimate|_r
  double mean_iterations = 0;
  std::int64_t bound_failures = 0;  // instance-optimality bound violations
};

struct PhaseTransitionResult {
  ExperimentConfig config;
  int depth = 0;
  int k = 0;
  int m = 0;
  PropertyCertificate p1;
  int calibrated_s = 0;
  std::vector<PhaseRow> rows;
  double elapsed_seconds = 0;
  bool pass = false;
};

PhaseTransitionResult run_phase_transition(const ExperimentConfig& config);

struct GelfandRow {
  int n = 0;
  int k = 0;
  std::int64_t samples = 0;
  double max_ratio = 0;
  double reference_scale = 0;
  double c_hat = 0;
};

struct GelfandStudyResult {
  ExperimentConfig config;
  int depth = 0;
  std::vector<GelfandRow> rows;
  double min_c_hat = 0;
  double max_c_hat = 0;
  bool log_factor_note = false;  // r == 1: reference omits a log factor
  double elapsed_seconds = 0;
  bool pass = false;
};

GelfandStudyResult run_gelfand_study(const ExperimentConfig& config);

struct StableRow {
  double p = 0;
  double t = 0;
  std::int64_t samples = 0;
  double cf_error = 0;      // empirical characteristic function error at t
  double ks_statistic = 0;  // stability-identity KS for this p (same all t)
  double ks_critical = 0;
};

struct StableValidationResult {
  ExperimentConfig config;
  std::vector<StableRow> rows;
  double max_cf_error = 0;
  double max_ks_ratio = 0;  // max statistic / critical
  double elapsed_seconds = 0;
  bool pass = false;
};

StableValidationResult run_stable_validation(const ExperimentConfig& config);

void write_outputs(const CertifyResult& result);
void write_outputs(const DistortionStudyResult& result);
void write_outputs(const PhaseTransitionResult& result);
void write_outputs(const GelfandStudyResult& result);
void write_outputs(const StableValidationResult& result);

// Random exactly-s-sparse signal with unit-magnitude random-sign entries;
// deterministic in (seed, index).
Eigen::VectorXd sparse_signal(std::uint64_t seed, std::int64_t index, int n, int s);

}  // namespace lpembed
