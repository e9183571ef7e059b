#include "lpembed/quasinorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lpembed {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::domain_error(msg);
}

void check_exponent(double p) {
  require(std::isfinite(p) && p > 0, "exponent must be finite and positive");
}

// Scaled power sum (sum (|x_i|/amax)^p)^(1/p) * amax; avoids overflow and
// underflow of the raw powers for extreme entries.
template <typename Accessor>
double scaled_norm(int count, double amax, double p, Accessor&& abs_at) {
  if (amax == 0) return 0.0;
  double s = 0;
  for (int i = 0; i < count; ++i) {
    const double t = abs_at(i) / amax;
    if (t > 0) s += std::pow(t, p);
  }
  return amax * std::pow(s, 1.0 / p);
}

}  // namespace

ExponentTriple ExponentTriple::make(double p, double r) {
  check_exponent(p);
  check_exponent(r);
  require(r <= p, "requires r <= p");
  ExponentTriple e;
  e.p = p;
  e.r = r;
  e.inv_q = 1.0 / r - 1.0 / p;
  return e;
}

double ExponentTriple::q() const {
  return inv_q == 0 ? std::numeric_limits<double>::infinity() : 1.0 / inv_q;
}

double quasi_norm(const Eigen::VectorXd& x, double p) {
  check_exponent(p);
  require(x.allFinite(), "vector entries must be finite");
  const double amax = x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
  return scaled_norm(static_cast<int>(x.size()), amax, p,
                     [&](int i) { return std::abs(x[i]); });
}

double subset_norm(const Eigen::VectorXd& x, const std::vector<int>& indices, double p) {
  check_exponent(p);
  double amax = 0;
  for (int i : indices) {
    require(i >= 0 && i < x.size(), "index out of range");
    amax = std::max(amax, std::abs(x[i]));
  }
  return scaled_norm(static_cast<int>(indices.size()), amax, p,
                     [&](int k) { return std::abs(x[indices[k]]); });
}

double weak_norm(const Eigen::VectorXd& x, double r) {
  check_exponent(r);
  require(x.allFinite(), "vector entries must be finite");
  std::vector<double> a(x.data(), x.data() + x.size());
  for (double& v : a) v = std::abs(v);
  std::sort(a.begin(), a.end(), std::greater<>());
  double best = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) break;
    best = std::max(best, std::pow(static_cast<double>(i + 1), 1.0 / r) * a[i]);
  }
  return best;
}

BlockDecomposition block_decompose(const Eigen::VectorXd& x, int m) {
  const int n = static_cast<int>(x.size());
  require(n >= 1, "vector must be non-empty");
  require(m >= 1, "block size must be >= 1");
  require(x.allFinite(), "vector entries must be finite");

  BlockDecomposition dec;
  dec.m = m;
  dec.perm.resize(n);
  std::iota(dec.perm.begin(), dec.perm.end(), 0);
  std::stable_sort(dec.perm.begin(), dec.perm.end(),
                   [&](int a, int b) { return std::abs(x[a]) > std::abs(x[b]); });

  dec.block_count = (n + m - 1) / m;
  dec.blocks.resize(dec.block_count);
  for (int k = 0; k < dec.block_count; ++k) {
    const int lo = k * m;
    const int hi = std::min(n, (k + 1) * m);
    dec.blocks[k].assign(dec.perm.begin() + lo, dec.perm.begin() + hi);
  }
  return dec;
}

Eigen::VectorXd restrict_to(const Eigen::VectorXd& x, const std::vector<int>& indices) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  for (int i : indices) {
    require(i >= 0 && i < x.size(), "index out of range");
    out[i] = x[i];
  }
  return out;
}

double block_tail(const Eigen::VectorXd& x, const BlockDecomposition& dec,
                  double p, double r, int first_block) {
  check_exponent(p);
  check_exponent(r);
  require(first_block >= 0, "first_block must be >= 0");
  double amax = 0;
  for (int k = first_block; k < dec.block_count; ++k)
    for (int i : dec.blocks[k]) amax = std::max(amax, std::abs(x[i]));
  if (amax == 0) return 0.0;
  double s = 0;
  for (int k = first_block; k < dec.block_count; ++k) {
    double bs = 0;
    for (int i : dec.blocks[k]) {
      const double t = std::abs(x[i]) / amax;
      if (t > 0) bs += std::pow(t, p);
    }
    s += std::pow(bs, r / p);
  }
  return amax * std::pow(s, 1.0 / r);
}

double block_tail(const Eigen::VectorXd& x, int m, double p, double r) {
  return block_tail(x, block_decompose(x, m), p, r, 1);
}

std::pair<double, double> rearrangement_tail_bound(const Eigen::VectorXd& x, int m,
                                                   double p, double r, int j) {
  const ExponentTriple e = ExponentTriple::make(p, r);
  require(j >= 1, "block index j is 1-based");
  const BlockDecomposition dec = block_decompose(x, m);

  // 1-based blocks I_{j+1}..I_M correspond to 0-based blocks j..M-1.
  const double lhs = block_tail(x, dec, p, r, j);

  // Complement of I_1..I_{j-1} = union of 0-based blocks j-1..M-1.
  std::vector<int> complement;
  for (int k = j - 1; k < dec.block_count; ++k)
    complement.insert(complement.end(), dec.blocks[k].begin(), dec.blocks[k].end());
  const double rhs = std::pow(static_cast<double>(m), -e.inv_q) *
                     subset_norm(x, complement, r);
  return {lhs, rhs};
}

}  // namespace lpembed
