#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

// Quasi-norm and blockwise-rearrangement primitives.  Exponents follow the
// convention 0 < r <= p, with q defined through 1/p + 1/q = 1/r; q = +inf
// when r == p, which we carry as inv_q == 0 to keep arithmetic finite.
namespace lpembed {

struct ExponentTriple {
  double p = 0;
  double r = 0;
  double inv_q = 0;  // 1/q = 1/r - 1/p; zero means q = +inf

  static ExponentTriple make(double p, double r);
  double q() const;  // +inf when inv_q == 0
};

// |x|_p = (sum |x_i|^p)^(1/p); valid for every p > 0, quasi-norm when p < 1.
double quasi_norm(const Eigen::VectorXd& x, double p);

// (sum_{i in I} |x_i|^p)^(1/p) over an index subset.
double subset_norm(const Eigen::VectorXd& x, const std::vector<int>& indices, double p);

// Weak quasi-norm |x|_{r,inf} = max_i i^(1/r) x*_i with x* the non-increasing
// rearrangement of |x| (1-based rank i).
double weak_norm(const Eigen::VectorXd& x, double r);

// Partition of {0,..,n-1} into M = ceil(n/m) blocks of size m (last one
// possibly smaller), taken along the non-increasing rearrangement of |x|.
// Ties are broken by ascending index, so the zero vector yields the identity
// permutation and the result is invariant under sign flips.
struct BlockDecomposition {
  int m = 0;
  int block_count = 0;
  std::vector<int> perm;                  // indices sorted by (|x_i| desc, i asc)
  std::vector<std::vector<int>> blocks;   // blocks[k] = perm[k*m .. min((k+1)m, n))
};

BlockDecomposition block_decompose(const Eigen::VectorXd& x, int m);

// Vector equal to x on the given indices and zero elsewhere.
Eigen::VectorXd restrict_to(const Eigen::VectorXd& x, const std::vector<int>& indices);

// (sum_{k >= first_block} |x_{I_k}|_p^r)^(1/r) over the blocks of the given
// decomposition, with first_block 0-based.  The k >= 2 tail appearing in the
// block-tail property corresponds to first_block = 1.
double block_tail(const Eigen::VectorXd& x, const BlockDecomposition& dec,
                  double p, double r, int first_block);

// Convenience: decompose with block size m and return the first_block = 1 tail.
double block_tail(const Eigen::VectorXd& x, int m, double p, double r);

// Both sides of the rearrangement tail estimate
//   (sum_{k=j}^{M-1} |x_{I_{k+1}}|_p^r)^(1/r)
//     <= m^(-1/q) |x restricted off I_1..I_{j-1}|_r
// for 1-based j; returns {lhs, rhs}.
std::pair<double, double> rearrangement_tail_bound(const Eigen::VectorXd& x, int m,
                                                   double p, double r, int j);

}  // namespace lpembed
