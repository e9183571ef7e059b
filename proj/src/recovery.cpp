#include "lpembed/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lpembed/parallel.hpp"
#include "lpembed/quasinorm.hpp"
#include "lpembed/rng.hpp"

namespace lpembed {

namespace {

constexpr double slack = 1e-9;

void require(bool cond, const char* msg) {
  if (!cond) throw std::domain_error(msg);
}

Eigen::VectorXd gaussian_sample(std::uint64_t seed, std::int64_t index, int dim) {
  const rng::Stream st(seed, static_cast<std::uint64_t>(index));
  Eigen::VectorXd g(dim);
  for (int i = 0; i < dim; ++i) g[i] = st.normal(i);
  return g;
}

int numerical_support(const Eigen::VectorXd& h) {
  const double cutoff = 1e-10 * h.cwiseAbs().maxCoeff();
  int nnz = 0;
  for (int i = 0; i < h.size(); ++i)
    if (std::abs(h[i]) > cutoff) ++nnz;
  return nnz;
}

std::vector<int> top_indices(const Eigen::VectorXd& h, int s) {
  std::vector<int> idx(h.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return std::abs(h[a]) > std::abs(h[b]); });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(s)));
  return idx;
}

double mixing_factor(double p, double alpha, double beta) {
  require(alpha > 0 && beta >= alpha, "need 0 < alpha <= beta");
  return std::pow(1.0 + std::pow(beta / alpha, p), 1.0 / p);
}

// Shared scaffolding of the two nullspace checks: Gaussian kernel samples,
// margin bookkeeping, and the non-sparsity premise counter.
template <typename BoundFn>
NullspaceReport run_nullspace_check(const EmbeddingOperator& op, int m,
                                    std::int64_t samples, std::uint64_t seed,
                                    int threads, BoundFn&& bound) {
  require(samples >= 1, "need positive sample count");
  const KernelBasis kernel = kernel_basis(op);
  NullspaceReport rep;
  if (kernel.matrix.cols() == 0) {
    rep.trivial_kernel = true;
    return rep;
  }
  struct Row {
    double margin = std::numeric_limits<double>::quiet_NaN();
    bool violated = false;
    bool sparse = false;
    bool skipped = false;
  };
  std::vector<Row> rows(static_cast<std::size_t>(samples));
  parallel_for(samples, threads, [&](std::int64_t t) {
    Row& row = rows[static_cast<std::size_t>(t)];
    const Eigen::VectorXd h =
        kernel.matrix * gaussian_sample(seed, t, static_cast<int>(kernel.matrix.cols()));
    if (h.cwiseAbs().maxCoeff() == 0) {
      row.skipped = true;
      return;
    }
    row.sparse = numerical_support(h) <= m;
    const auto [lhs, rhs] = bound(h);
    if (lhs == 0) {
      row.skipped = true;
      return;
    }
    row.margin = rhs / lhs;
    row.violated = lhs > rhs * (1 + slack);
  });
  double min_margin = std::numeric_limits<double>::infinity();
  double sum_margin = 0;
  for (const Row& row : rows) {
    if (row.skipped) continue;
    ++rep.samples;
    rep.violations += row.violated;
    rep.sparse_kernel_hits += row.sparse;
    min_margin = std::min(min_margin, row.margin);
    sum_margin += row.margin;
  }
  rep.min_margin = rep.samples ? min_margin : 0;
  rep.mean_margin = rep.samples ? sum_margin / rep.samples : 0;
  return rep;
}

}  // namespace

KernelBasis kernel_basis(const EmbeddingOperator& op, double rel_tol) {
  require(rel_tol > 0, "tolerance must be positive");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(op.matrix, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > rel_tol * smax) ++rank;
  KernelBasis k;
  k.scale = smax;
  k.matrix = svd.matrixV().rightCols(op.n - rank);
  k.residual = k.matrix.cols() == 0
                   ? 0.0
                   : (op.matrix * k.matrix).cwiseAbs().maxCoeff();
  return k;
}

NullspaceReport check_nullspace_blocks(const EmbeddingOperator& op, int m, double p,
                                       double r, double alpha, double beta,
                                       std::int64_t samples, std::uint64_t seed,
                                       int threads) {
  require(m >= 1 && m <= op.n, "need 1 <= m <= n");
  ExponentTriple::make(p, r);
  const double factor = mixing_factor(p, alpha, beta);
  return run_nullspace_check(
      op, m, samples, seed, threads, [&](const Eigen::VectorXd& h) {
        return std::pair{quasi_norm(h, p), factor * block_tail(h, m, p, r)};
      });
}

NullspaceReport check_nullspace_support(const EmbeddingOperator& op, int s, int m,
                                        double p, double r, double alpha,
                                        double beta, std::int64_t samples,
                                        std::uint64_t seed, int threads) {
  require(m >= 1 && m <= op.n, "need 1 <= m <= n");
  require(s >= 1 && s <= op.n, "need 1 <= s <= n");
  const ExponentTriple e = ExponentTriple::make(p, r);
  const double factor = mixing_factor(p, alpha, beta);
  const double coef =
      std::pow(static_cast<double>(s) / m, e.inv_q) * factor;
  return run_nullspace_check(
      op, m, samples, seed, threads, [&](const Eigen::VectorXd& h) {
        // The top-s entries maximize |h_I|_r over supports of size s.
        return std::pair{subset_norm(h, top_indices(h, s), r),
                         coef * quasi_norm(h, r)};
      });
}

GelfandEstimate gelfand_ratio(const EmbeddingOperator& op, double p, double r,
                              std::int64_t samples, std::uint64_t seed,
                              int threads) {
  require(samples >= 1, "need positive sample count");
  const ExponentTriple e = ExponentTriple::make(p, r);
  const KernelBasis kernel = kernel_basis(op);
  GelfandEstimate est;
  est.reference_scale =
      std::pow(std::log1p(static_cast<double>(op.n) / op.rows) / op.rows, e.inv_q);
  if (kernel.matrix.cols() == 0) return est;

  std::vector<double> ratios(static_cast<std::size_t>(samples), 0.0);
  parallel_for(samples, threads, [&](std::int64_t t) {
    const Eigen::VectorXd h =
        kernel.matrix * gaussian_sample(seed, t, static_cast<int>(kernel.matrix.cols()));
    const double weak = weak_norm(h, r);
    if (weak > 0)
      ratios[static_cast<std::size_t>(t)] = quasi_norm(h, p) / weak;
  });
  for (double v : ratios) {
    if (v > 0) {
      ++est.samples;
      est.max_ratio = std::max(est.max_ratio, v);
    }
  }
  est.c_hat = est.max_ratio / est.reference_scale;
  return est;
}

DeltaRSolver::DeltaRSolver(const EmbeddingOperator& op, double rel_tol)
    : scaled_matrix_(op.normalization * op.matrix),
      svd_(scaled_matrix_, Eigen::ComputeThinU | Eigen::ComputeFullV) {
  const Eigen::VectorXd& sv = svd_.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > rel_tol * smax) ++rank_;
  kernel_.scale = smax;
  kernel_.matrix = svd_.matrixV().rightCols(op.n - rank_);
  kernel_.residual = kernel_.matrix.cols() == 0
                         ? 0.0
                         : (scaled_matrix_ * kernel_.matrix).cwiseAbs().maxCoeff();
}

RecoveryOutcome DeltaRSolver::solve(const Eigen::VectorXd& y, double r,
                                    const DeltaROptions& options) const {
  require(r > 0 && std::isfinite(r), "norm exponent must be positive");
  require(y.size() == scaled_matrix_.cols(), "input dimension mismatch");
  require(options.max_iterations >= 1, "need at least one iteration");
  const int n = static_cast<int>(scaled_matrix_.cols());
  const Eigen::VectorXd b = scaled_matrix_ * y;

  RecoveryOutcome out;
  const double y_obj = quasi_norm(y, r);
  if (kernel_.matrix.cols() == 0) {
    // Injective measurement map: y is the unique solution.
    out.estimate = y;
    out.objective = y_obj;
    out.exact = true;
    return out;
  }

  // Minimum-Euclidean-norm feasible point as the starting iterate.
  const Eigen::VectorXd& sv = svd_.singularValues();
  Eigen::VectorXd coeffs = svd_.matrixU().leftCols(rank_).transpose() * b;
  for (Eigen::Index i = 0; i < rank_; ++i) coeffs[i] /= sv[i];
  Eigen::VectorXd z = svd_.matrixV().leftCols(rank_) * coeffs;

  const Eigen::MatrixXd& K = kernel_.matrix;
  const int d = static_cast<int>(K.cols());
  double eps = options.epsilon_start > 0
                   ? options.epsilon_start
                   : std::max(z.cwiseAbs().maxCoeff(), 1e-12);

  const auto smoothed = [&](const Eigen::VectorXd& v, double e) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += std::pow(v[i] * v[i] + e * e, r / 2.0);
    return s;
  };

  Eigen::VectorXd w(n);
  for (int it = 0; it < options.max_iterations; ++it) {
    for (int i = 0; i < n; ++i)
      w[i] = std::pow(z[i] * z[i] + eps * eps, r / 2.0 - 1.0);

    IterationRecord rec;
    rec.epsilon = eps;
    rec.objective_before = smoothed(z, eps);

    // Weighted least-squares step over the kernel: minimizes
    // sum w_i (z + K v)_i^2, the standard majorizer of the smoothed objective.
    Eigen::MatrixXd G = K.transpose() * w.asDiagonal() * K;
    Eigen::VectorXd rhs = -(K.transpose() * w.cwiseProduct(z).matrix());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    if (ldlt.info() != Eigen::Success) {
      G.diagonal().array() += 1e-12 * G.trace() / d;
      ldlt.compute(G);
      if (ldlt.info() != Eigen::Success) break;
    }
    const Eigen::VectorXd v = ldlt.solve(rhs);
    z += K * v;

    rec.objective_after = smoothed(z, eps);
    rec.step_norm = v.norm();
    rec.feasibility_gap = (scaled_matrix_ * z - b).norm();
    out.trace.push_back(rec);
    ++out.iterations;

    if (rec.step_norm < options.step_tolerance) break;

    if (options.sparsity_hint > 0) {
      // sigma_{s+1}(z): the residual scale once s entries are explained.
      double next = 0;
      if (options.sparsity_hint + 1 <= n) {
        std::vector<double> a(z.data(), z.data() + n);
        for (double& vv : a) vv = std::abs(vv);
        std::nth_element(a.begin(), a.begin() + options.sparsity_hint, a.end(),
                         std::greater<>());
        next = a[static_cast<std::size_t>(options.sparsity_hint)];
      }
      eps = std::min(eps, next / n);
    } else {
      eps *= options.epsilon_decay;
    }
    if (eps < 1e-15) break;  // effectively converged to a sparse point
  }

  out.feasibility_gap = (scaled_matrix_ * z - b).norm();
  if (out.feasibility_gap > options.feasibility_tolerance * (1.0 + b.norm()))
    throw std::runtime_error("delta_r: iterate drifted off the constraint set");

  out.objective = quasi_norm(z, r);
  if (out.objective > y_obj * (1 + 1e-12)) {
    // The input itself is feasible and beats the iterate; never degrade it.
    out.estimate = y;
    out.objective = y_obj;
    out.feasibility_gap = 0;
    out.fell_back_to_input = true;
  } else {
    out.estimate = std::move(z);
  }
  out.epsilon_final = eps;
  const double y_scale = std::max(1.0, y.size() ? y.cwiseAbs().maxCoeff() : 0.0);
  out.exact = (out.estimate - y).cwiseAbs().maxCoeff() <= 1e-6 * y_scale;
  return out;
}

RecoveryOutcome delta_r(const EmbeddingOperator& op, const Eigen::VectorXd& y,
                        double r, const DeltaROptions& options) {
  return DeltaRSolver(op).solve(y, r, options);
}

BoundCheck recovery_error_bound_check(const DeltaRSolver& solver,
                                      const Eigen::VectorXd& y, int s, double r) {
  require(s >= 0, "sparsity must be >= 0");
  DeltaROptions options;
  options.sparsity_hint = s;
  BoundCheck check;
  check.outcome = solver.solve(y, r, options);

  std::vector<double> a(y.data(), y.data() + y.size());
  for (double& v : a) v = std::abs(v);
  std::sort(a.begin(), a.end(), std::greater<>());
  const std::size_t keep = std::min(a.size(), static_cast<std::size_t>(s));
  Eigen::VectorXd tail(static_cast<Eigen::Index>(a.size() - keep));
  for (std::size_t i = keep; i < a.size(); ++i)
    tail[static_cast<Eigen::Index>(i - keep)] = a[i];
  const double best_s_term = tail.size() ? quasi_norm(tail, r) : 0.0;

  check.lhs = quasi_norm(y - check.outcome.estimate, r);
  check.rhs = std::pow(4.0, 1.0 / r) * best_s_term;
  const double fp_tol = 1e-9 * std::pow(static_cast<double>(y.size()), 1.0 / r) *
                        std::max(1.0, y.size() ? y.cwiseAbs().maxCoeff() : 0.0);
  check.pass = check.lhs <= check.rhs * (1 + slack) + fp_tol;
  return check;
}

int calibrated_sparsity(int m, double p, double r, double alpha, double beta) {
  require(m >= 1, "need m >= 1");
  const ExponentTriple e = ExponentTriple::make(p, r);
  const double factor = mixing_factor(p, alpha, beta);
  const double threshold = std::pow(4.0, -1.0 / r) / factor;
  if (e.inv_q == 0) return 0;  // (s/m)^(1/q) == 1 and factor > 1 > threshold
  int s = static_cast<int>(
      std::floor(m * std::pow(threshold, 1.0 / e.inv_q) * (1 + 1e-12)));
  s = std::clamp(s, 0, m);
  while (s >= 1 && std::pow(static_cast<double>(s) / m, e.inv_q) * factor >
                       std::pow(4.0, -1.0 / r) * (1 + 1e-12))
    --s;
  return s;
}

}  // namespace lpembed
