#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "lpembed/quasinorm.hpp"
#include "lpembed/rng.hpp"

using namespace lpembed;

namespace {

// Small random vectors with deliberate ties and signs so the rearrangement
// code sees degenerate orderings.
Eigen::VectorXd tie_heavy_vector(const rng::Stream& st, std::uint64_t base, int n) {
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) {
    const int level = static_cast<int>(st.below(base + 2 * i, 5));  // 0..4
    const bool neg = st.bits(base + 2 * i + 1) & 1;
    x[i] = (neg ? -1.0 : 1.0) * level;
  }
  return x;
}

Eigen::VectorXd gaussian_vector(const rng::Stream& st, std::uint64_t base, int n) {
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = st.normal(base + i);
  return x;
}

}  // namespace

TEST_CASE("quasi_norm matches hand-computed values") {
  Eigen::VectorXd x(2);
  x << 1, 1;
  CHECK(quasi_norm(x, 0.5) == doctest::Approx(4.0).epsilon(1e-14));
  Eigen::VectorXd y(2);
  y << 3, -4;
  CHECK(quasi_norm(y, 2.0) == doctest::Approx(5.0).epsilon(1e-14));
  Eigen::VectorXd z(3);
  z << 1, -2, 3;
  CHECK(quasi_norm(z, 1.0) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(quasi_norm(Eigen::VectorXd::Zero(4), 0.7) == 0.0);
  CHECK(quasi_norm(Eigen::VectorXd(0), 1.0) == 0.0);
}

TEST_CASE("quasi_norm is absolutely homogeneous and handles extreme scales") {
  const rng::Stream st(7, 0);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd x = gaussian_vector(st, 100 * t, 9);
    const double p = 0.3 + 0.2 * (t % 12);
    const double c = std::ldexp(1.0, (t % 7) * 100 - 300);  // 2^-300 .. 2^300
    CHECK(quasi_norm(c * x, p) ==
          doctest::Approx(std::abs(c) * quasi_norm(x, p)).epsilon(1e-12));
  }
}

TEST_CASE("quasi_norm rejects bad input") {
  Eigen::VectorXd x(2);
  x << 1, 2;
  CHECK_THROWS_AS(quasi_norm(x, 0.0), std::domain_error);
  CHECK_THROWS_AS(quasi_norm(x, -1.0), std::domain_error);
  x[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(quasi_norm(x, 1.0), std::domain_error);
}

TEST_CASE("r-th power triangle inequality holds on random pairs") {
  const rng::Stream st(11, 0);
  int checked = 0;
  for (int t = 0; t < 2000; ++t) {
    const int n = 1 + static_cast<int>(st.below(9000 + t, 16));
    const rng::Stream draws(11, 1000 + t);
    const Eigen::VectorXd x = gaussian_vector(draws, 0, n);
    const Eigen::VectorXd y = gaussian_vector(draws, 100, n);
    const double r = 0.25 + 0.25 * (t % 4);  // 0.25 .. 1.0
    const double lhs = std::pow(quasi_norm(x + y, r), r);
    const double rhs = std::pow(quasi_norm(x, r), r) + std::pow(quasi_norm(y, r), r);
    CHECK(lhs <= rhs * (1 + 1e-9));
    ++checked;
  }
  CHECK(checked == 2000);
}

TEST_CASE("weak norm matches hand-computed values and never exceeds quasi_norm") {
  Eigen::VectorXd x(3);
  x << 1.0, 0.5, 1.0 / 3.0;
  CHECK(weak_norm(x, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  Eigen::VectorXd y(3);
  y << 2, 2, 2;
  CHECK(weak_norm(y, 2.0) == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-14));

  const rng::Stream st(13, 0);
  for (int t = 0; t < 500; ++t) {
    const rng::Stream draws(13, 1 + t);
    const int n = 1 + static_cast<int>(st.below(t, 20));
    const Eigen::VectorXd v = gaussian_vector(draws, 0, n);
    const double r = 0.25 + 0.25 * (t % 8);
    CHECK(weak_norm(v, r) <= quasi_norm(v, r) * (1 + 1e-12));
  }
}

TEST_CASE("block decomposition matches the sorted oracle and handles ties") {
  Eigen::VectorXd x(4);
  x << 3, -1, 2, 0.5;
  const BlockDecomposition dec = block_decompose(x, 2);
  CHECK(dec.block_count == 2);
  CHECK(dec.blocks[0] == std::vector<int>{0, 2});
  CHECK(dec.blocks[1] == std::vector<int>{1, 3});

  // Ties break by ascending index, so constant vectors keep identity order.
  const BlockDecomposition flat = block_decompose(Eigen::VectorXd::Zero(5), 2);
  CHECK(flat.perm == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(flat.block_count == 3);
  CHECK(flat.blocks[2] == std::vector<int>{4});

  const rng::Stream st(17, 0);
  for (int t = 0; t < 800; ++t) {
    const rng::Stream draws(17, 1 + t);
    const int n = 1 + static_cast<int>(st.below(2 * t, 12));
    const int m = 1 + static_cast<int>(st.below(2 * t + 1, n));
    const Eigen::VectorXd v = tie_heavy_vector(draws, 0, n);
    const BlockDecomposition d = block_decompose(v, m);

    // Partition: every index exactly once.
    std::vector<int> seen;
    for (const auto& block : d.blocks)
      seen.insert(seen.end(), block.begin(), block.end());
    std::sort(seen.begin(), seen.end());
    for (int i = 0; i < n; ++i) CHECK(seen[i] == i);

    // Oracle: per-block magnitudes equal the slices of the sorted magnitudes.
    std::vector<double> sorted(v.data(), v.data() + n);
    for (double& a : sorted) a = std::abs(a);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    int pos = 0;
    for (const auto& block : d.blocks) {
      std::vector<double> mags;
      for (int i : block) mags.push_back(std::abs(v[i]));
      std::sort(mags.begin(), mags.end(), std::greater<>());
      for (double a : mags) CHECK(a == sorted[pos++]);
    }

    // Monotonicity between consecutive blocks.
    for (int k = 0; k + 1 < d.block_count; ++k) {
      double lo = std::numeric_limits<double>::infinity(), hi = 0;
      for (int i : d.blocks[k]) lo = std::min(lo, std::abs(v[i]));
      for (int i : d.blocks[k + 1]) hi = std::max(hi, std::abs(v[i]));
      CHECK(lo >= hi);
    }
  }
}

TEST_CASE("block decomposition rejects bad input") {
  Eigen::VectorXd x(3);
  x << 1, 2, 3;
  CHECK_THROWS_AS(block_decompose(x, 0), std::domain_error);
  CHECK_THROWS_AS(block_decompose(Eigen::VectorXd(0), 1), std::domain_error);
}

TEST_CASE("restrictions reassemble the vector over any block partition") {
  const rng::Stream st(19, 0);
  for (int t = 0; t < 200; ++t) {
    const rng::Stream draws(19, 1 + t);
    const int n = 2 + static_cast<int>(st.below(2 * t, 20));
    const int m = 1 + static_cast<int>(st.below(2 * t + 1, n));
    const Eigen::VectorXd v = gaussian_vector(draws, 0, n);
    const BlockDecomposition d = block_decompose(v, m);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
    for (const auto& block : d.blocks) sum += restrict_to(v, block);
    CHECK((sum - v).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(restrict_to(Eigen::VectorXd::Zero(3), {3}), std::domain_error);
}

TEST_CASE("exponent triple arithmetic") {
  const ExponentTriple e = ExponentTriple::make(1.5, 1.0);
  CHECK(e.inv_q == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(e.q() == doctest::Approx(3.0).epsilon(1e-12));
  const ExponentTriple same = ExponentTriple::make(0.75, 0.75);
  CHECK(same.inv_q == 0.0);
  CHECK(std::isinf(same.q()));
  CHECK_THROWS_AS(ExponentTriple::make(1.0, 2.0), std::domain_error);
}

TEST_CASE("rearrangement tail bound: hand-computed case") {
  Eigen::VectorXd x(4);
  x << 1, 1, 1, 1;
  // m=2, p=2, r=1: tail past the first block is |(1,1)|_2 = sqrt(2); the
  // right side is 2^(-1/2) * |x|_1 = 4 / sqrt(2).
  const auto [lhs, rhs] = rearrangement_tail_bound(x, 2, 2.0, 1.0, 1);
  CHECK(lhs == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(rhs == doctest::Approx(4.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(lhs <= rhs);

  // Past the last block the tail is empty.
  const auto [lhs2, rhs2] = rearrangement_tail_bound(x, 2, 2.0, 1.0, 5);
  CHECK(lhs2 == 0.0);
  CHECK(rhs2 == 0.0);
}

TEST_CASE("rearrangement tail bound holds over random draws") {
  const rng::Stream st(23, 0);
  int violations = 0;
  for (int t = 0; t < 4000; ++t) {
    const rng::Stream draws(23, 1 + t);
    const int n = 1 + static_cast<int>(st.below(4 * t, 24));
    const int m = 1 + static_cast<int>(st.below(4 * t + 1, n));
    const int variant = t % 3;
    Eigen::VectorXd v = variant == 0   ? gaussian_vector(draws, 0, n)
                        : variant == 1 ? tie_heavy_vector(draws, 0, n)
                                       : Eigen::VectorXd::Ones(n);
    const double p = 0.5 + 0.5 * (t % 5);          // 0.5 .. 2.5
    const double r = p * (0.25 + 0.25 * (t % 4));  // r <= p
    const int max_j = (n + m - 1) / m + 2;
    const int j = 1 + static_cast<int>(st.below(4 * t + 2, max_j));
    const auto [lhs, rhs] = rearrangement_tail_bound(v, m, p, r, j);
    if (lhs > rhs * (1 + 1e-9)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("block tail agrees with the explicit per-block sum") {
  const rng::Stream st(29, 0);
  for (int t = 0; t < 300; ++t) {
    const rng::Stream draws(29, 1 + t);
    const int n = 2 + static_cast<int>(st.below(2 * t, 16));
    const int m = 1 + static_cast<int>(st.below(2 * t + 1, n));
    const Eigen::VectorXd v = gaussian_vector(draws, 0, n);
    const double p = 1.5, r = 0.75;
    const BlockDecomposition d = block_decompose(v, m);
    double sum = 0;
    for (int k = 1; k < d.block_count; ++k)
      sum += std::pow(subset_norm(v, d.blocks[k], p), r);
    CHECK(block_tail(v, m, p, r) ==
          doctest::Approx(std::pow(sum, 1.0 / r)).epsilon(1e-12));
  }
}
