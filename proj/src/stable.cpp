#include "lpembed/stable.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lpembed/quasinorm.hpp"
#include "lpembed/rng.hpp"

namespace lpembed {

namespace {

constexpr double pi = 3.141592653589793238462643;

void require(bool cond, const char* msg) {
  if (!cond) throw std::domain_error(msg);
}

void check_stable_exponent(double p, bool allow_two) {
  require(std::isfinite(p) && p > 0 && (allow_two ? p <= 2.0 : p < 2.0),
          "stability exponent out of range");
}

// Chambers-Mallows-Stuck draw for the symmetric case from one uniform angle
// U in (-pi/2, pi/2) and one Exp(1) variable W.
double cms_draw(double p, double u01, double w) {
  const double u = pi * (u01 - 0.5);
  if (p == 1.0) return std::tan(u);
  const double a = std::sin(p * u) / std::pow(std::cos(u), 1.0 / p);
  const double b = std::pow(std::cos((1.0 - p) * u) / w, (1.0 - p) / p);
  return a * b;
}

}  // namespace

Eigen::VectorXd sample_stable(const StableSampler& sampler, int count) {
  check_stable_exponent(sampler.p, /*allow_two=*/true);
  require(count >= 0, "count must be >= 0");
  const rng::Stream st(sampler.seed, sampler.stream);
  Eigen::VectorXd out(count);
  for (int k = 0; k < count; ++k) {
    const std::uint64_t c = static_cast<std::uint64_t>(k);
    out[k] = cms_draw(sampler.p, st.uniform01(2 * c), st.exponential(2 * c + 1));
  }
  return out;
}

Eigen::VectorXd sample_arrivals(std::uint64_t seed, std::uint64_t stream, int count) {
  require(count >= 0, "count must be >= 0");
  const rng::Stream st(seed, stream);
  Eigen::VectorXd out(count);
  double acc = 0;
  for (int j = 0; j < count; ++j) {
    acc += st.exponential(2 * static_cast<std::uint64_t>(j) + 1);
    out[j] = acc;
  }
  return out;
}

SignedIndex sample_direction(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t counter, int dim) {
  require(dim >= 1, "dimension must be >= 1");
  const rng::Stream st(seed, stream);
  const std::uint64_t cell = st.below(counter, 2 * static_cast<std::uint64_t>(dim));
  SignedIndex d;
  d.index = static_cast<int>(cell < static_cast<std::uint64_t>(dim)
                                 ? cell
                                 : cell - static_cast<std::uint64_t>(dim));
  d.sign = cell < static_cast<std::uint64_t>(dim) ? 1.0 : -1.0;
  return d;
}

std::vector<double> deterministic_weights(double p, int count) {
  check_stable_exponent(p, /*allow_two=*/false);
  require(count >= 1, "truncation depth must be >= 1");
  std::vector<double> w(count);
  const double e = -1.0 / p;
  for (int j = 0; j < count; ++j)
    w[j] = std::exp(e * std::log(static_cast<double>(j + 1)));
  return w;
}

void shot_noise_column_into(Eigen::Ref<Eigen::VectorXd> out,
                            const std::vector<double>& weights, std::uint64_t seed,
                            std::uint64_t stream) {
  const int dim = static_cast<int>(out.size());
  require(dim >= 1, "dimension must be >= 1");
  const rng::Stream st(seed, stream);
  const std::uint64_t two_dim = 2 * static_cast<std::uint64_t>(dim);
  out.setZero();
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const std::uint64_t cell = st.below(2 * j, two_dim);
    if (cell < static_cast<std::uint64_t>(dim))
      out[static_cast<int>(cell)] += weights[j];
    else
      out[static_cast<int>(cell - dim)] -= weights[j];
  }
}

Eigen::VectorXd shot_noise_column(double p, int dim, int depth, std::uint64_t seed,
                                  std::uint64_t stream, WeightMode mode) {
  check_stable_exponent(p, /*allow_two=*/false);
  require(depth >= 1, "truncation depth must be >= 1");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
  if (mode == WeightMode::deterministic) {
    shot_noise_column_into(out, deterministic_weights(p, depth), seed, stream);
    return out;
  }
  const rng::Stream st(seed, stream);
  const std::uint64_t two_dim = 2 * static_cast<std::uint64_t>(dim);
  const double e = -1.0 / p;
  double arrival = 0;
  for (int j = 0; j < depth; ++j) {
    const std::uint64_t c = static_cast<std::uint64_t>(j);
    arrival += st.exponential(2 * c + 1);
    const double w = std::exp(e * std::log(arrival));
    const std::uint64_t cell = st.below(2 * c, two_dim);
    if (cell < static_cast<std::uint64_t>(dim))
      out[static_cast<int>(cell)] += w;
    else
      out[static_cast<int>(cell - dim)] -= w;
  }
  return out;
}

int default_truncation_depth(double p, double tol, int cap) {
  check_stable_exponent(p, /*allow_two=*/false);
  require(tol > 0 && cap >= 1, "invalid truncation parameters");
  const double a = 2.0 / p - 1.0;  // tail integral sum_{j>J} j^(-2/p) ~ J^(-a)/a
  if (a <= 0) return cap;
  const double j = std::pow(tol * tol * a, -1.0 / a);
  if (!(j < static_cast<double>(cap))) return cap;
  return std::max(1, static_cast<int>(std::ceil(j)));
}

ThetaNormEstimate estimate_theta_norm(double p, double r, int dim, int depth,
                                      int trials, std::uint64_t seed) {
  check_stable_exponent(p, /*allow_two=*/false);
  require(r > 0, "norm exponent must be positive");
  require(trials >= 1, "trials must be >= 1");
  double sum = 0, sumsq = 0;
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd col = shot_noise_column(p, dim, depth, seed, t,
                                                  WeightMode::stochastic);
    const double nr = quasi_norm(col, r);
    const double v = std::pow(nr, r);
    sum += v;
    sumsq += v * v;
  }
  ThetaNormEstimate est;
  est.trials = trials;
  const double mean = sum / trials;
  est.value = std::pow(mean, 1.0 / r);
  if (trials > 1) {
    const double var = std::max(0.0, (sumsq - trials * mean * mean) / (trials - 1));
    est.rth_moment_sem = std::sqrt(var / trials);
  }
  return est;
}

double stability_identity_ks(double p, const Eigen::VectorXd& alpha, int trials,
                             std::uint64_t seed) {
  check_stable_exponent(p, /*allow_two=*/true);
  require(trials >= 2, "trials must be >= 2");
  const int n = static_cast<int>(alpha.size());
  require(n >= 1, "alpha must be non-empty");
  const double scale = quasi_norm(alpha, p);
  require(scale > 0, "alpha must be nonzero");

  std::vector<double> lhs(trials), rhs(trials);
  for (int t = 0; t < trials; ++t) {
    StableSampler vec{p, seed, 2 * static_cast<std::uint64_t>(t)};
    lhs[t] = alpha.dot(sample_stable(vec, n));
    StableSampler one{p, seed, 2 * static_cast<std::uint64_t>(t) + 1};
    rhs[t] = scale * sample_stable(one, 1)[0];
  }
  std::sort(lhs.begin(), lhs.end());
  std::sort(rhs.begin(), rhs.end());

  // sup_x |F_lhs(x) - F_rhs(x)| by merging the two sorted samples.
  double d = 0;
  std::size_t i = 0, k = 0;
  while (i < lhs.size() && k < rhs.size()) {
    if (lhs[i] <= rhs[k])
      ++i;
    else
      ++k;
    d = std::max(d, std::abs(static_cast<double>(i) / trials -
                             static_cast<double>(k) / trials));
  }
  return d;
}

double ks_critical(std::int64_t n1, std::int64_t n2, double level) {
  require(n1 > 0 && n2 > 0 && level > 0 && level < 1, "invalid KS parameters");
  const double c = std::sqrt(-0.5 * std::log(level / 2.0));
  return c * std::sqrt(static_cast<double>(n1 + n2) /
                       (static_cast<double>(n1) * static_cast<double>(n2)));
}

double characteristic_function_error(const Eigen::VectorXd& draws, double p, double t) {
  check_stable_exponent(p, /*allow_two=*/true);
  require(draws.size() > 0, "draws must be non-empty");
  const double emp = (t * draws.array()).cos().mean();
  return std::abs(emp - std::exp(-std::pow(std::abs(t), p)));
}

}  // namespace lpembed
