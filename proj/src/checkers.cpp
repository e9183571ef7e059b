#include "lpembed/checkers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lpembed/parallel.hpp"
#include "lpembed/quasinorm.hpp"
#include "lpembed/rng.hpp"

namespace lpembed {

namespace {

constexpr double pi = 3.141592653589793238462643;
constexpr double slack = 1e-9;  // relative slack on theorem-backed inequalities

void require(bool cond, const char* msg) {
  if (!cond) throw std::domain_error(msg);
}

}  // namespace

// Floyd's algorithm: each subset of the given size is equally likely.
std::vector<int> sample_support(const rng::Stream& st, std::uint64_t counter0,
                                int n, int size) {
  require(size >= 0 && size <= n, "support size out of range");
  std::vector<int> supp;
  supp.reserve(static_cast<std::size_t>(size));
  for (int i = n - size; i < n; ++i) {
    const int j = static_cast<int>(st.below(counter0++, i + 1));
    if (std::find(supp.begin(), supp.end(), j) != supp.end())
      supp.push_back(i);
    else
      supp.push_back(j);
  }
  return supp;
}

Eigen::VectorXd mixed_sample(std::uint64_t seed, std::int64_t index, int n,
                             int block_hint) {
  require(n >= 1, "dimension must be >= 1");
  block_hint = std::clamp(block_hint, 1, n);
  const rng::Stream structure(seed, 2 * static_cast<std::uint64_t>(index));
  const rng::Stream values(seed, 2 * static_cast<std::uint64_t>(index) + 1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  switch (index % 5) {
    case 0:  // iid Gaussian
      for (int i = 0; i < n; ++i) x[i] = values.normal(i);
      break;
    case 1: {  // random sign pattern on a sparse support
      const int cap = std::min(n, std::max(2, 2 * block_hint));
      const int s = 1 + static_cast<int>(structure.below(0, cap));
      const std::vector<int> supp = sample_support(structure, 1, n, s);
      for (int k = 0; k < s; ++k)
        x[supp[k]] = (values.bits(k) & 1) ? 1.0 : -1.0;
      break;
    }
    case 2:  // iid heavy-tailed (Cauchy)
      for (int i = 0; i < n; ++i)
        x[i] = std::tan(pi * (values.uniform01(i) - 0.5));
      break;
    case 3: {  // flat on a whole number of blocks
      const int max_blocks = std::max(1, n / block_hint);
      const int blocks = 1 + static_cast<int>(structure.below(0, max_blocks));
      const int s = std::min(n, blocks * block_hint);
      const std::vector<int> supp = sample_support(structure, 1, n, s);
      for (int k = 0; k < s; ++k)
        x[supp[k]] = (values.bits(k) & 1) ? 1.0 : -1.0;
      break;
    }
    default: {  // signed one-hot
      const int i = static_cast<int>(structure.below(0, n));
      x[i] = (values.bits(0) & 1) ? 1.0 : -1.0;
      break;
    }
  }
  return x;
}

bool PropertyCertificate::pass() const {
  return violations == 0 && std::isfinite(alpha_hat) && std::isfinite(beta_hat) &&
         alpha_hat > 0 && beta_hat >= alpha_hat;
}

PropertyCertificate check_p1(const EmbeddingOperator& op, int m, double p, double r,
                             std::int64_t trials, int supports_per_trial,
                             std::uint64_t seed, int threads) {
  require(m >= 1 && m <= op.n, "need 1 <= m <= n");
  require(trials >= 1 && supports_per_trial >= 1, "need positive trial counts");
  ExponentTriple::make(p, r);  // validates exponent ordering

  PropertyCertificate cert;
  cert.property = "P1";
  cert.n = op.n;
  cert.rows = op.rows;
  cert.m = m;
  cert.p = p;
  cert.r = r;
  cert.seed = seed;

  std::vector<double> values;
  if (m == 1) {
    // |A(t e_i)|_r / |t e_i|_p is independent of t, so the sparse sphere
    // reduces to the n signed columns, and signs do not change the norm.
    values.resize(op.n);
    parallel_for(op.n, threads, [&](std::int64_t i) {
      values[static_cast<std::size_t>(i)] =
          std::abs(op.normalization) * quasi_norm(op.matrix.col(i), r);
    });
    cert.trials = op.n;
    cert.support_samples = op.n;
  } else {
    const std::int64_t evals = trials * supports_per_trial;
    values.resize(static_cast<std::size_t>(evals));
    const double flat = std::pow(static_cast<double>(m), -1.0 / p);
    parallel_for(evals, threads, [&](std::int64_t e) {
      const rng::Stream structure(seed, 2 * static_cast<std::uint64_t>(e));
      const rng::Stream coeffs(seed, 2 * static_cast<std::uint64_t>(e) + 1);
      const std::vector<int> supp = sample_support(structure, 0, op.n, m);
      Eigen::VectorXd c(m);
      switch (e % 4) {
        case 0:  // flat profile, exactly unit p-norm
          for (int k = 0; k < m; ++k)
            c[k] = (coeffs.bits(k) & 1) ? flat : -flat;
          break;
        case 1: {  // one-hot inside the support
          c.setZero();
          const int k = static_cast<int>(structure.below(1u << 20, m));
          c[k] = (coeffs.bits(0) & 1) ? 1.0 : -1.0;
          break;
        }
        case 2:  // Gaussian profile
          for (int k = 0; k < m; ++k) c[k] = coeffs.normal(k);
          break;
        default:  // heavy-tailed profile
          for (int k = 0; k < m; ++k)
            c[k] = std::tan(pi * (coeffs.uniform01(k) - 0.5));
          break;
      }
      const double cp = quasi_norm(c, p);
      if (cp == 0) {
        values[static_cast<std::size_t>(e)] =
            std::numeric_limits<double>::quiet_NaN();
        return;
      }
      values[static_cast<std::size_t>(e)] =
          quasi_norm(op.apply_sparse(supp, c), r) / cp;
    });
    cert.trials = trials;
    cert.support_samples = evals;
  }

  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (double v : values) {
    if (!std::isfinite(v) || v <= 0) {
      ++cert.violations;
      continue;
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  cert.alpha_hat = lo;
  cert.beta_hat = hi;
  return cert;
}

PropertyCertificate check_p2(const EmbeddingOperator& op, double kappa, int m,
                             double p, double r, std::int64_t trials,
                             std::uint64_t seed, int threads) {
  require(m >= 1 && m <= op.n, "need 1 <= m <= n");
  require(kappa > 0, "kappa must be positive");
  require(trials >= 1, "need positive trial count");
  const ExponentTriple e = ExponentTriple::make(p, r);

  PropertyCertificate cert;
  cert.property = "P2";
  cert.n = op.n;
  cert.rows = op.rows;
  cert.m = m;
  cert.kappa = kappa;
  cert.p = p;
  cert.r = r;
  cert.trials = trials;
  cert.support_samples = trials;
  cert.seed = seed;

  const double upper_coef = std::pow(kappa * op.n, e.inv_q);
  struct Row {
    double ratio = std::numeric_limits<double>::quiet_NaN();
    bool violated = false;
    bool skipped = false;
  };
  std::vector<Row> rows(static_cast<std::size_t>(trials));
  parallel_for(trials, threads, [&](std::int64_t t) {
    Row& row = rows[static_cast<std::size_t>(t)];
    const Eigen::VectorXd x = mixed_sample(seed, t, op.n, m);
    const double xp = quasi_norm(x, p);
    if (xp == 0) {
      row.skipped = true;
      return;
    }
    const double lhs = block_tail(x, m, p, r);
    const double mid = quasi_norm(op.apply(x), r);
    const double rhs = upper_coef * xp;
    row.ratio = mid / xp;
    row.violated = !(std::isfinite(mid)) || lhs > mid * (1 + slack) ||
                   mid > rhs * (1 + slack);
  });

  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (const Row& row : rows) {
    if (row.skipped) continue;
    if (row.violated || !std::isfinite(row.ratio)) {
      ++cert.violations;
      continue;
    }
    lo = std::min(lo, row.ratio);
    hi = std::max(hi, row.ratio);
  }
  cert.alpha_hat = lo;
  cert.beta_hat = hi;
  return cert;
}

std::pair<EmbeddingOperator, EmbeddingOperator> kashin_normalize(
    const EmbeddingOperator& A, const PropertyCertificate& cert_a,
    const EmbeddingOperator& B, const PropertyCertificate& cert_b, int m,
    double kappa) {
  if (!cert_a.pass() || !cert_b.pass())
    throw std::invalid_argument("kashin_normalize: both certificates must pass");
  if (A.n != B.n) throw std::invalid_argument("kashin_normalize: domain mismatch");
  if (cert_a.p != cert_b.p || cert_a.r != cert_b.r)
    throw std::invalid_argument("kashin_normalize: exponent mismatch");
  const ExponentTriple e = ExponentTriple::make(cert_a.p, cert_a.r);
  require(m >= 1 && m <= A.n && kappa > 0, "invalid m or kappa");

  EmbeddingOperator U = A;
  U.normalization *=
      std::pow(static_cast<double>(m) / A.n, e.inv_q) / cert_a.beta_hat;
  U.metadata += "; composition-normalized";
  EmbeddingOperator V = B;
  V.normalization *= std::pow(kappa * B.n, -e.inv_q);
  V.metadata += "; composition-normalized";
  return {std::move(U), std::move(V)};
}

KashinReport check_kashin(const EmbeddingOperator& U, const EmbeddingOperator& V,
                          double p, double r, int m, double kappa, double alpha,
                          double beta, std::int64_t samples, std::uint64_t seed,
                          int threads) {
  require(U.n == V.n, "domain mismatch");
  require(alpha > 0 && beta >= alpha, "need 0 < alpha <= beta");
  require(samples >= 1, "need positive sample count");
  const ExponentTriple e = ExponentTriple::make(p, r);
  const int n = U.n;

  KashinReport rep;
  rep.samples = samples;
  rep.gamma = alpha / (std::pow(4.0, 1.0 / r) * beta) *
              std::pow(kappa * n, -e.inv_q);
  rep.lower_bound_coefficient =
      std::pow(4.0, -1.0 / r) * (alpha / beta) *
      std::pow(std::min(static_cast<double>(m), 1.0 / kappa) / n, e.inv_q);

  const double upper_block_coef = std::pow(static_cast<double>(m) / n, e.inv_q);
  struct Row {
    double ratio = std::numeric_limits<double>::quiet_NaN();
    bool in_sigma = false;
    bool upper_violation = false;
    bool lower_violation = false;
    bool premises_valid = false;
    bool skipped = false;
  };
  std::vector<Row> rows(static_cast<std::size_t>(samples));
  parallel_for(samples, threads, [&](std::int64_t t) {
    Row& row = rows[static_cast<std::size_t>(t)];
    const Eigen::VectorXd x = mixed_sample(seed, t, n, m);
    const double xp = quasi_norm(x, p);
    if (xp == 0) {
      row.skipped = true;
      return;
    }
    const double u = quasi_norm(U.apply(x), r);
    const double v = quasi_norm(V.apply(x), r);
    row.ratio = (u + v) / xp;
    row.in_sigma = v <= rep.gamma * xp * (1 + slack);
    row.upper_violation = !(std::isfinite(row.ratio)) || row.ratio > 3 * (1 + slack);
    row.lower_violation = row.ratio < rep.lower_bound_coefficient * (1 - slack);
    if (row.upper_violation) {
      // Re-derive the premises: U obeys the per-block upper bound and V
      // dominates the block tail while staying below |x|_p.
      bool ok = v <= xp * (1 + slack) &&
                block_tail(x, m, p, r) <= v * (1 + slack);
      const BlockDecomposition dec = block_decompose(x, m);
      for (int k = 0; ok && k < dec.block_count; ++k) {
        const Eigen::VectorXd xk = restrict_to(x, dec.blocks[k]);
        ok = quasi_norm(U.apply(xk), r) <=
             upper_block_coef * quasi_norm(xk, p) * (1 + slack);
      }
      row.premises_valid = ok;
    }
  });

  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  bool lo_in_sigma = false;
  for (const Row& row : rows) {
    if (row.skipped || !std::isfinite(row.ratio)) {
      if (!row.skipped) ++rep.upper_violations;
      continue;
    }
    if (row.ratio < lo) {
      lo = row.ratio;
      lo_in_sigma = row.in_sigma;
    }
    hi = std::max(hi, row.ratio);
    rep.sigma_count += row.in_sigma;
    rep.upper_violations += row.upper_violation;
    rep.lower_violations += row.lower_violation;
    rep.upper_violations_with_valid_premises += row.premises_valid;
  }
  rep.min_ratio = lo;
  rep.max_ratio = hi;
  rep.min_ratio_in_sigma = lo_in_sigma;
  return rep;
}

DistortionReport measure_distortion(const EmbeddingOperator& W, double p, double r,
                                    std::int64_t samples, std::uint64_t seed,
                                    int threads) {
  require(samples >= 1, "need positive sample count");
  const ExponentTriple e = ExponentTriple::make(p, r);
  const int n = W.n;
  const bool stacked = W.kind == OperatorKind::W && W.rows > n;

  DistortionReport rep;
  rep.samples = samples;
  rep.upper_bound = 3 * std::pow(2.0, 1.0 / r);
  const int interior_bins = 36;
  for (int b = 0; b <= interior_bins; ++b)
    rep.bin_edges.push_back(rep.upper_bound * b / interior_bins);
  rep.bin_counts.assign(interior_bins + 1, 0);  // extra slot for overflow

  struct Row {
    double ratio = std::numeric_limits<double>::quiet_NaN();
    bool sandwich_violation = false;
    bool skipped = false;
  };
  std::vector<Row> rows(static_cast<std::size_t>(samples));
  const int hint = std::max(1, n / 8);
  parallel_for(samples, threads, [&](std::int64_t t) {
    Row& row = rows[static_cast<std::size_t>(t)];
    const Eigen::VectorXd x = mixed_sample(seed, t, n, hint);
    const double xp = quasi_norm(x, p);
    if (xp == 0) {
      row.skipped = true;
      return;
    }
    const Eigen::VectorXd wx = W.apply(x);
    const double whole = quasi_norm(wx, r);
    row.ratio = whole / xp;
    if (stacked) {
      const double a = quasi_norm(x, r);
      const double b =
          quasi_norm(W.matrix.bottomRows(W.rows - n) * x, r);
      const double combined =
          std::pow(std::pow(a, r) + std::pow(b, r), 1.0 / r);
      const double scaled = std::pow(static_cast<double>(n), e.inv_q) * whole;
      const bool identity_ok =
          std::abs(scaled - combined) <= slack * std::max(scaled, combined);
      const bool sandwich_ok =
          a + b <= combined * (1 + slack) &&
          combined <= std::pow(2.0, 1.0 / r) * (a + b) * (1 + slack);
      row.sandwich_violation = !(identity_ok && sandwich_ok);
    }
  });

  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (const Row& row : rows) {
    if (row.skipped || !std::isfinite(row.ratio)) {
      if (!row.skipped) ++rep.sandwich_violations;
      continue;
    }
    lo = std::min(lo, row.ratio);
    hi = std::max(hi, row.ratio);
    rep.sandwich_violations += row.sandwich_violation;
    const double t = row.ratio / rep.upper_bound * interior_bins;
    const int bin = t >= interior_bins ? interior_bins
                                       : std::max(0, static_cast<int>(t));
    ++rep.bin_counts[static_cast<std::size_t>(bin)];
  }
  rep.min_ratio = lo;
  rep.max_ratio = hi;
  return rep;
}

}  // namespace lpembed
