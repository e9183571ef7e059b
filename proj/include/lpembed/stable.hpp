#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

// Symmetric p-stable sampling (0 < p <= 2) and the truncated shot-noise
// series used to build random embedding columns.
//
// Counter layout inside one (seed, stream): term j (0-based) draws its signed
// coordinate direction at counter 2j and its arrival increment at counter
// 2j+1.  Deterministic- and stochastic-weight columns therefore share the
// same direction sequence, and sample_arrivals reproduces exactly the
// arrivals a stochastic column consumes.
namespace lpembed {

struct StableSampler {
  double p = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

// iid draws from the standard symmetric p-stable law, characteristic function
// exp(-|t|^p).  Draw k consumes counters 2k and 2k+1.
Eigen::VectorXd sample_stable(const StableSampler& sampler, int count);

// Poisson arrival times: cumulative sums of iid Exp(1) increments, increment
// j read at counter 2j+1 (see layout note above).
Eigen::VectorXd sample_arrivals(std::uint64_t seed, std::uint64_t stream, int count);

struct SignedIndex {
  int index = 0;
  double sign = 1.0;
};

// Uniform draw over the 2*dim signed coordinate directions.
SignedIndex sample_direction(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t counter, int dim);

enum class WeightMode {
  deterministic,  // term j weighted j^(-1/p) (1-based j)
  stochastic,     // term j weighted Gamma_j^(-1/p), Gamma the arrival times
};

// j^(-1/p) for j = 1..count.
std::vector<double> deterministic_weights(double p, int count);

// One shot-noise column: sum of `depth` weighted signed coordinate vectors.
Eigen::VectorXd shot_noise_column(double p, int dim, int depth, std::uint64_t seed,
                                  std::uint64_t stream, WeightMode mode);

// Same, accumulated into a caller-provided column with precomputed
// deterministic weights (the hot path when building whole operators).
void shot_noise_column_into(Eigen::Ref<Eigen::VectorXd> out,
                            const std::vector<double>& weights, std::uint64_t seed,
                            std::uint64_t stream);

// Truncation depth J such that the neglected series tail has mean square
// sum_{j>J} j^(-2/p) <= tol^2; capped (the series is summable only for p < 2,
// and even then the cap keeps p near 1 tractable).
int default_truncation_depth(double p, double tol = 1e-3, int cap = 1000000);

struct ThetaNormEstimate {
  double value = 0;          // (mean of |column|_r^r over trials)^(1/r)
  double rth_moment_sem = 0; // standard error of the r-th moment mean
  int trials = 0;
};

// Monte-Carlo estimate of (E |Theta~|_r^r)^(1/r) for the stochastic column of
// given dimension and depth.  Trial t uses stream t of the provided seed.
ThetaNormEstimate estimate_theta_norm(double p, double r, int dim, int depth,
                                      int trials, std::uint64_t seed);

// Two-sample Kolmogorov-Smirnov statistic between sum_i alpha_i theta_i and
// (sum |alpha_i|^p)^(1/p) theta for iid standard p-stable theta; both sides
// sampled `trials` times.  These distributions agree exactly, so the
// statistic should sit below ks_critical(trials, trials, level).
double stability_identity_ks(double p, const Eigen::VectorXd& alpha, int trials,
                             std::uint64_t seed);

// Large-sample critical value of the two-sample KS statistic.
double ks_critical(std::int64_t n1, std::int64_t n2, double level);

// Empirical characteristic function error |mean cos(t X) - exp(-|t|^p)|.
double characteristic_function_error(const Eigen::VectorXd& draws, double p, double t);

}  // namespace lpembed
