#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpembed/operators.hpp"
#include "lpembed/quasinorm.hpp"
#include "lpembed/stable.hpp"

using namespace lpembed;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  REQUIRE(out.good());
}

}  // namespace

TEST_CASE("row counts round up with a guard against float drift") {
  CHECK(row_count(0.25, 256) == 64);
  CHECK(row_count(1.0, 7) == 7);
  CHECK(row_count(0.5, 3) == 2);
  // 0.1 * 10 evaluates just above 1 in binary floating point; the row count
  // must still be exactly 1.
  CHECK(row_count(0.1, 10) == 1);
  CHECK(row_count(0.003, 100) == 1);
  CHECK_THROWS_AS(row_count(0.0, 4), std::domain_error);
  CHECK_THROWS_AS(row_count(0.5, 0), std::domain_error);
}

TEST_CASE("shot-noise operator columns match the standalone column builder") {
  const int n = 6, depth = 64;
  const double p = 1.5;
  const std::uint64_t seed = 77;
  const EmbeddingOperator op = build_S(n, 0.5, p, depth, seed);
  REQUIRE(op.rows == 3);
  REQUIRE(op.n == n);
  CHECK(op.normalization == 1.0);
  CHECK(op.kind == OperatorKind::S);
  CHECK(op.depth == depth);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd col =
        shot_noise_column(p, op.rows, depth, seed, i, WeightMode::deterministic);
    CHECK((op.matrix.col(i) - col).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("operator construction is deterministic and thread-count invariant") {
  const EmbeddingOperator a = build_S(24, 0.5, 1.2, 256, 5, 1);
  const EmbeddingOperator b = build_S(24, 0.5, 1.2, 256, 5, 1);
  const EmbeddingOperator c = build_S(24, 0.5, 1.2, 256, 5, 3);
  CHECK((a.matrix - b.matrix).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.matrix - c.matrix).lpNorm<Eigen::Infinity>() == 0.0);
  const EmbeddingOperator d = build_S(24, 0.5, 1.2, 256, 6, 1);
  CHECK((a.matrix - d.matrix).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("columns touch at most depth coordinates") {
  const EmbeddingOperator op = build_S(4, 16.0, 1.5, 5, 11);
  REQUIRE(op.rows == 64);
  for (int i = 0; i < op.n; ++i) {
    int nnz = 0;
    for (int j = 0; j < op.rows; ++j) nnz += op.matrix(j, i) != 0.0;
    CHECK(nnz <= 5);
    CHECK(nnz >= 1);
  }
}

TEST_CASE("apply is linear and agrees with the sparse fast path") {
  const EmbeddingOperator op = build_S(12, 0.75, 1.5, 128, 13);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(12);
  x[2] = 1.5;
  x[7] = -0.25;
  x[11] = 3.0;
  const Eigen::VectorXd dense = op.apply(x);
  const Eigen::VectorXd sparse =
      op.apply_sparse({2, 7, 11}, (Eigen::VectorXd(3) << 1.5, -0.25, 3.0).finished());
  CHECK((dense - sparse).lpNorm<Eigen::Infinity>() < 1e-12 * (1 + dense.lpNorm<Eigen::Infinity>()));

  Eigen::VectorXd y = Eigen::VectorXd::Random(12);
  const Eigen::VectorXd lin = op.apply(2.0 * x + y);
  CHECK((lin - 2.0 * op.apply(x) - op.apply(y)).lpNorm<Eigen::Infinity>() <
        1e-12 * (1 + lin.lpNorm<Eigen::Infinity>()));

  CHECK_THROWS_AS(op.apply(Eigen::VectorXd::Zero(5)), std::domain_error);
  CHECK_THROWS_AS(op.apply_sparse({12}, Eigen::VectorXd::Ones(1)), std::domain_error);
}

TEST_CASE("normalized operator reuses the raw matrix and calibrates its scale") {
  const int n = 16, dim = 8, depth = 512;
  const double p = 1.5, r = 1.0;
  const std::uint64_t seed = 19;
  const EmbeddingOperator t = build_T(n, dim, p, r, depth, 4000, seed);
  const EmbeddingOperator s = build_S(n, 0.5, p, depth, seed);
  REQUIRE(t.rows == dim);
  CHECK((t.matrix - s.matrix).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(t.normalization > 0);
  CHECK(t.normalization != 1.0);
  CHECK(t.eta == 0.5);

  // The calibration divides by an estimate of (E |column|_r^r)^(1/r); an
  // independent estimate from a fresh seed must agree within sampling noise.
  const ThetaNormEstimate fresh = estimate_theta_norm(p, r, dim, depth, 4000, 977);
  const double t_moment = std::pow(1.0 / t.normalization, r);
  CHECK(std::abs(t_moment - std::pow(fresh.value, r)) < 8.0 * fresh.rth_moment_sem);

  const EmbeddingOperator t2 = build_T(n, dim, p, r, depth, 4000, seed);
  CHECK(t2.normalization == t.normalization);
}

TEST_CASE("scaled identity witness") {
  const EmbeddingOperator op = build_id_p2(256, 16, 2.0, 1.0);
  CHECK(op.rows == 256);
  CHECK((op.matrix - Eigen::MatrixXd::Identity(256, 256)).lpNorm<Eigen::Infinity>() ==
        0.0);
  // 1/q = 1/r - 1/p = 1/2, so the scale is 16^(-1/2) = 1/4.
  CHECK(op.normalization == doctest::Approx(0.25).epsilon(1e-15));
  // r = p makes q infinite and the scale exactly 1.
  CHECK(build_id_p2(8, 4, 1.5, 1.5).normalization == 1.0);
  CHECK_THROWS_AS(build_id_p2(8, 9, 2.0, 1.0), std::domain_error);
}

TEST_CASE("stacked operator layout") {
  const int n = 8, depth = 32;
  const double p = 1.5, r = 1.0, eta = 0.5, c_prime = 0.7;
  const std::uint64_t seed = 23;
  const EmbeddingOperator w = build_W(n, eta, p, r, depth, c_prime, seed);
  REQUIRE(w.rows == 12);
  CHECK(w.c_prime == c_prime);
  CHECK((w.matrix.topRows(n) - Eigen::MatrixXd::Identity(n, n))
            .lpNorm<Eigen::Infinity>() == 0.0);

  const EmbeddingOperator s = build_S(n, eta, p, depth, seed);
  const double inv_q = 1.0 / r - 1.0 / p;
  const double block_scale = c_prime * std::pow(std::log1p(1.0 / eta), -inv_q);
  CHECK((w.matrix.bottomRows(4) - block_scale * s.matrix).lpNorm<Eigen::Infinity>() ==
        0.0);
  CHECK(w.normalization == doctest::Approx(std::pow(8.0, -inv_q)).epsilon(1e-15));
  CHECK_THROWS_AS(build_W(8, 0.5, 1.5, 1.0, 32, 0.0, 1), std::domain_error);
}

TEST_CASE("payload checksum is FNV-1a over row-major bytes") {
  Eigen::MatrixXd one(1, 1);
  one << 1.0;
  CHECK(payload_checksum(one) == 0xaab1693229ba1db8ULL);
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 3.0, 4.0;
  // Frozen against an independent implementation; also pins row-major order.
  CHECK(payload_checksum(m) == 0x93b2be02cd2882a0ULL);
}

TEST_CASE("operator files round-trip bit-exactly with payload") {
  const EmbeddingOperator op = build_W(6, 0.5, 1.2, 0.8, 24, 1.3, 31);
  const auto path = temp_file("lpembed_test_roundtrip.op");
  save_operator(op, path);
  const EmbeddingOperator back = load_operator(path);
  CHECK(back.kind == op.kind);
  CHECK(back.n == op.n);
  CHECK(back.rows == op.rows);
  CHECK(back.p == op.p);
  CHECK(back.r == op.r);
  CHECK(back.eta == op.eta);
  CHECK(back.depth == op.depth);
  CHECK(back.seed == op.seed);
  CHECK(back.normalization == op.normalization);
  CHECK(back.c_prime == op.c_prime);
  CHECK((back.matrix - op.matrix).lpNorm<Eigen::Infinity>() == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("header-only files regenerate their matrix for every builder kind") {
  const auto path = temp_file("lpembed_test_headeronly.op");
  const EmbeddingOperator ops[] = {
      build_S(6, 0.5, 1.5, 32, 41),
      build_T(6, 3, 1.5, 1.0, 32, 200, 43),
      build_id_p2(6, 2, 1.5, 1.0),
      build_W(6, 0.5, 1.5, 1.0, 32, 0.9, 47),
  };
  for (const EmbeddingOperator& op : ops) {
    save_operator(op, path, /*with_payload=*/false);
    const EmbeddingOperator back = load_operator(path);
    CHECK((back.matrix - op.matrix).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(back.normalization == op.normalization);
  }
  // A header-only file is much smaller than its payload...
  save_operator(ops[0], path, /*with_payload=*/false);
  const auto small = std::filesystem::file_size(path);
  save_operator(ops[0], path, /*with_payload=*/true);
  CHECK(small < std::filesystem::file_size(path));
  std::filesystem::remove(path);
}

TEST_CASE("custom operators cannot be regenerated from a bare header") {
  EmbeddingOperator op;
  op.kind = OperatorKind::Custom;
  op.n = 2;
  op.rows = 2;
  op.matrix = Eigen::MatrixXd::Identity(2, 2);
  const auto path = temp_file("lpembed_test_custom.op");
  save_operator(op, path, /*with_payload=*/false);
  CHECK_THROWS_AS(load_operator(path), FormatError);
  try {
    load_operator(path);
  } catch (const FormatError& err) {
    CHECK(err.field == "payload");
  }
  // With payload the round trip works.
  save_operator(op, path);
  CHECK(load_operator(path).matrix == op.matrix);
  std::filesystem::remove(path);
}

TEST_CASE("malformed files are rejected with the offending field") {
  const EmbeddingOperator op = build_S(4, 0.5, 1.5, 16, 53);
  const auto path = temp_file("lpembed_test_malformed.op");
  save_operator(op, path);
  const std::string good = read_file(path);
  const auto blank = good.find("\n\n");
  REQUIRE(blank != std::string::npos);
  const std::string header = good.substr(0, blank + 2);
  const std::string payload = good.substr(blank + 2);

  auto expect_field = [&](const std::string& bytes, const std::string& field) {
    write_file(path, bytes);
    try {
      load_operator(path);
      FAIL("expected FormatError for field " << field);
    } catch (const FormatError& err) {
      CHECK(err.field == field);
    }
  };

  // Truncated payload.
  expect_field(good.substr(0, good.size() - 8), "payload");
  // Trailing junk after the payload.
  expect_field(good + "xx", "payload");
  // Unsupported version.
  std::string v2 = good;
  v2.replace(v2.find("format_version=1"), 16, "format_version=2");
  expect_field(v2, "format_version");
  // Corrupted payload byte.
  std::string corrupt = good;
  corrupt[corrupt.size() - 3] ^= 0x40;
  expect_field(corrupt, "checksum");
  // Unknown kind value.
  std::string kind = good;
  kind.replace(kind.find("kind=S"), 6, "kind=Q");
  expect_field(kind, "kind");
  // Missing key.
  std::string missing = header + payload;
  const auto seed_at = missing.find("seed=");
  missing.erase(seed_at, missing.find('\n', seed_at) - seed_at + 1);
  expect_field(missing, "seed");
  // Extra key.
  expect_field(header.substr(0, header.size() - 1) + "extra=1\n\n" + payload,
               "header");
  // Duplicate key.
  expect_field("n=4\n" + header.substr(0, header.size() - 1) + "\n" + payload, "n");
  // No blank separator.
  expect_field(header.substr(0, header.size() - 1), "header");
  // Unparseable number.
  std::string bad_n = good;
  bad_n.replace(bad_n.find("n=4"), 3, "n=x");
  expect_field(bad_n, "n");

  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_operator(temp_file("lpembed_does_not_exist.op")),
                  std::runtime_error);
}
