#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lpembed/operators.hpp"
#include "lpembed/rng.hpp"

// Empirical certification of the two operator properties behind the
// two-operator composition bound, the composition itself, and distortion
// measurement.
//
// All checks are randomized but fully deterministic in (seed, parameters);
// inequality comparisons carry a 1e-9 relative slack so that floating-point
// noise on theorem-backed bounds never counts as a violation.
namespace lpembed {

struct PropertyCertificate {
  std::string property;  // "P1" or "P2"
  int n = 0;
  int rows = 0;
  int m = 0;
  double kappa = 0;  // 0 for P1 certificates
  double p = 0;
  double r = 0;
  std::int64_t trials = 0;
  std::int64_t support_samples = 0;
  std::uint64_t seed = 0;
  double alpha_hat = 0;  // observed lower frame bound
  double beta_hat = 0;   // observed upper frame bound
  std::int64_t violations = 0;

  bool pass() const;
};

// Lower/upper frame bounds of x -> |op x|_r over unit vectors of the m-sparse
// p-sphere.  Each of trials * supports_per_trial evaluations draws a fresh
// support and one of four coefficient profiles (flat, one-hot, Gaussian,
// heavy-tailed).  m == 1 is evaluated exhaustively over all signed columns
// instead.  Violations count evaluations with a non-finite or zero image.
PropertyCertificate check_p1(const EmbeddingOperator& op, int m, double p, double r,
                             std::int64_t trials, int supports_per_trial,
                             std::uint64_t seed, int threads = 1);

// Two-sided block-tail property: for every sample x,
//   (sum_{k>=2} |x_{I_k}|_p^r)^(1/r) <= |op x|_r <= (kappa n)^(1/q) |x|_p.
// Violations count samples breaking either side; alpha_hat/beta_hat record
// the observed range of |op x|_r / |x|_p.
PropertyCertificate check_p2(const EmbeddingOperator& op, double kappa, int m,
                             double p, double r, std::int64_t trials,
                             std::uint64_t seed, int threads = 1);

// Rescales a certified pair into the composition normal form
//   U = (1/beta_hat) (m/n)^(1/q) A,   V = (kappa n)^(-1/q) B.
// Throws std::invalid_argument unless both certificates pass.
std::pair<EmbeddingOperator, EmbeddingOperator> kashin_normalize(
    const EmbeddingOperator& A, const PropertyCertificate& cert_a,
    const EmbeddingOperator& B, const PropertyCertificate& cert_b, int m,
    double kappa);

struct KashinReport {
  std::int64_t samples = 0;
  double gamma = 0;                   // threshold splitting the two lower-bound cases
  double lower_bound_coefficient = 0; // 4^(-1/r) (alpha/beta) (min(m,1/kappa)/n)^(1/q)
  double min_ratio = 0;
  double max_ratio = 0;
  bool min_ratio_in_sigma = false;  // |Vx|_r <= gamma |x|_p at the minimizing sample
  std::int64_t sigma_count = 0;
  std::int64_t upper_violations = 0;  // ratio > 3
  std::int64_t lower_violations = 0;  // ratio below the coefficient
  // Upper violations whose per-block and block-tail premises all verified;
  // the premises provably force the bound, so nonzero means a bug.
  std::int64_t upper_violations_with_valid_premises = 0;
};

// Samples ratio (|Ux|_r + |Vx|_r) / |x|_p for normalized U, V.  alpha/beta
// are the P1 frame bounds of the pre-normalized A (so alpha/beta <= 1 scale
// factors the lower coefficient).
KashinReport check_kashin(const EmbeddingOperator& U, const EmbeddingOperator& V,
                          double p, double r, int m, double kappa, double alpha,
                          double beta, std::int64_t samples, std::uint64_t seed,
                          int threads = 1);

struct DistortionReport {
  std::int64_t samples = 0;
  double min_ratio = 0;
  double max_ratio = 0;
  double upper_bound = 0;  // 3 * 2^(1/r)
  std::vector<double> bin_edges;
  std::vector<std::int64_t> bin_counts;  // last bin collects overflow
  std::int64_t sandwich_violations = 0;  // stacked-norm identity failures
};

// Ratio |Wx|_r / |x|_p over the sample mixture.  For stacked operators each
// sample additionally verifies n^(1/q)|Wx|_r = (|x|_r^r + |Bx|_r^r)^(1/r)
// and the two-term comparison a+b <= (a^r+b^r)^(1/r) <= 2^(1/r)(a+b).
DistortionReport measure_distortion(const EmbeddingOperator& W, double p, double r,
                                    std::int64_t samples, std::uint64_t seed,
                                    int threads = 1);

// Shared randomized test-vector mixture: cycles Gaussian, sparse sign
// patterns, heavy-tailed, block-flat and one-hot shapes; deterministic in
// (seed, index).  block_hint sizes the sparse/flat supports.
Eigen::VectorXd mixed_sample(std::uint64_t seed, std::int64_t index, int n,
                             int block_hint);

// Uniform support of `size` distinct indices in [0, n); consumes counters
// [counter0, counter0 + size) of the stream.
std::vector<int> sample_support(const rng::Stream& st, std::uint64_t counter0,
                                int n, int size);

}  // namespace lpembed
