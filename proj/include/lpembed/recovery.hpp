#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "lpembed/operators.hpp"

// Sparse recovery through the embedding operators: kernel geometry of the
// measurement map, the induced nullspace estimates, width-type ratios, and
// the quasi-norm minimizing decoder.
namespace lpembed {

struct KernelBasis {
  Eigen::MatrixXd matrix;  // orthonormal columns spanning ker(op)
  double residual = 0;     // max entry of |op.matrix * basis|
  double scale = 0;        // largest singular value of op.matrix
};

// Orthonormal kernel basis via SVD; columns whose singular value falls below
// rel_tol * sigma_max are treated as kernel directions.
KernelBasis kernel_basis(const EmbeddingOperator& op, double rel_tol = 1e-12);

struct NullspaceReport {
  std::int64_t samples = 0;
  std::int64_t violations = 0;
  double min_margin = 0;   // smallest rhs/lhs over samples (>= 1 when clean)
  double mean_margin = 0;
  // Kernel vectors with at most m nonzero entries would break the estimates'
  // premise; counts samples whose numerical support is that small.
  std::int64_t sparse_kernel_hits = 0;
  bool trivial_kernel = false;  // no samples possible; checks skipped
};

// For Gaussian kernel samples h, checks
//   |h|_p <= (1 + (beta/alpha)^p)^(1/p) (sum_{k>=2} |h_{I_k}|_p^r)^(1/r).
NullspaceReport check_nullspace_blocks(const EmbeddingOperator& op, int m, double p,
                                       double r, double alpha, double beta,
                                       std::int64_t samples, std::uint64_t seed,
                                       int threads = 1);

// For Gaussian kernel samples h and the worst support I of size s, checks
//   |h_I|_r <= (s/m)^(1/q) (1 + (beta/alpha)^p)^(1/p) |h|_r.
NullspaceReport check_nullspace_support(const EmbeddingOperator& op, int s, int m,
                                        double p, double r, double alpha,
                                        double beta, std::int64_t samples,
                                        std::uint64_t seed, int threads = 1);

struct GelfandEstimate {
  std::int64_t samples = 0;
  double max_ratio = 0;        // max over kernel samples of |h|_p / |h|_{r,inf}
  double reference_scale = 0;  // (log(1 + n/k) / k)^(1/q)
  double c_hat = 0;            // max_ratio / reference_scale
};

// Width-type ratio over the kernel of a k-row operator.
GelfandEstimate gelfand_ratio(const EmbeddingOperator& op, double p, double r,
                              std::int64_t samples, std::uint64_t seed,
                              int threads = 1);

struct IterationRecord {
  double epsilon = 0;
  double objective_before = 0;  // smoothed objective at the incoming iterate
  double objective_after = 0;   // same epsilon, after the weighted projection
  double step_norm = 0;         // Euclidean size of the update
  double feasibility_gap = 0;   // |A z - b|_2 at the new iterate
};

struct DeltaROptions {
  int max_iterations = 100;
  double epsilon_start = 0;     // 0: start from the iterate's largest entry
  double epsilon_decay = 0.7;   // used when no sparsity hint is given
  int sparsity_hint = 0;        // s > 0 drives epsilon via sigma_{s+1}(z)/n
  double step_tolerance = 1e-9;
  double feasibility_tolerance = 1e-8;
};

struct RecoveryOutcome {
  Eigen::VectorXd estimate;
  double objective = 0;        // |estimate|_r
  double feasibility_gap = 0;  // |A estimate - A y|_2
  int iterations = 0;
  double epsilon_final = 0;
  bool exact = false;            // max |estimate - y| <= 1e-6 * max(1, |y|_inf)
  bool fell_back_to_input = false;  // smoothing ended above |y|_r; returned y
  std::vector<IterationRecord> trace;
};

// Decoder for min |z|_r subject to A z = A y: iteratively reweighted least
// squares over the affine solution set, parameterized through the kernel so
// every iterate is feasible to rounding error.  Throws std::runtime_error if
// the final feasibility gap exceeds the tolerance (scaled by |A y|_2).
class DeltaRSolver {
 public:
  explicit DeltaRSolver(const EmbeddingOperator& op, double rel_tol = 1e-12);

  RecoveryOutcome solve(const Eigen::VectorXd& y, double r,
                        const DeltaROptions& options = {}) const;

  const KernelBasis& kernel() const { return kernel_; }

 private:
  Eigen::MatrixXd scaled_matrix_;
  Eigen::BDCSVD<Eigen::MatrixXd> svd_;
  KernelBasis kernel_;
  Eigen::Index rank_ = 0;
};

RecoveryOutcome delta_r(const EmbeddingOperator& op, const Eigen::VectorXd& y,
                        double r, const DeltaROptions& options = {});

struct BoundCheck {
  double lhs = 0;  // |y - estimate|_r
  double rhs = 0;  // 4^(1/r) * best s-term approximation error of y
  bool pass = false;
  RecoveryOutcome outcome;
};

// Instance-optimality check for the decoder against the best s-term
// approximation of the input.
BoundCheck recovery_error_bound_check(const DeltaRSolver& solver,
                                      const Eigen::VectorXd& y, int s, double r);

// Largest sparsity s <= m with (s/m)^(1/q) (1 + (beta/alpha)^p)^(1/p)
// <= 4^(-1/r); 0 when even s = 1 fails the inequality.
int calibrated_sparsity(int m, double p, double r, double alpha, double beta);

}  // namespace lpembed
