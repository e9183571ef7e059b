#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

// Random embedding operators and their on-disk format.
//
// All operators act as x -> normalization * (matrix * x); keeping the scalar
// out of the matrix lets a file round-trip the raw integer-free payload while
// rescalings (normalization estimates, composition scalings) stay exact.
namespace lpembed {

enum class OperatorKind { S, T, IdP2, W, Custom };

std::string to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(const std::string& name);

struct EmbeddingOperator {
  OperatorKind kind = OperatorKind::Custom;
  int n = 0;     // domain dimension (columns)
  int rows = 0;  // codomain dimension
  double p = 0;
  double r = 0;
  double eta = 0;
  std::int64_t depth = 0;  // truncation depth of the shot-noise series (J)
  std::uint64_t seed = 0;
  double normalization = 1.0;
  double c_prime = 0;  // stacked-operator scaling constant; 0 when unused
  Eigen::MatrixXd matrix;
  std::string metadata;  // free-form origin note; not serialized

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  // y = sum_k coeffs[k] * column(support[k]), scaled; O(rows * |support|).
  Eigen::VectorXd apply_sparse(const std::vector<int>& support,
                               const Eigen::VectorXd& coeffs) const;
};

// ceil(eta * n) with a guard against, e.g., 0.1 * 10 landing just above 1.
int row_count(double eta, int n);

// Columns are independent truncated shot-noise sums with deterministic
// weights j^(-1/p); column i uses stream i of the seed.  normalization = 1.
EmbeddingOperator build_S(int n, double eta, double p, int depth,
                          std::uint64_t seed, int threads = 1);

// Same random matrix as build_S(dim/n = eta), normalized by the Monte-Carlo
// estimate of the column r-norm scale (E |Theta~|_r^r)^(1/r), whose trials
// draw from a sub-seed so they never collide with the column streams.
EmbeddingOperator build_T(int n, int dim, double p, double r, int depth,
                          int trials, std::uint64_t seed, int threads = 1);

// m^(-1/q) times the identity; witnesses the block-tail property with
// kappa = 1/m at every block size m.
EmbeddingOperator build_id_p2(int n, int m, double p, double r);

// Stacked operator [Id; c' * log(1+1/eta)^(-1/q) * S] scaled by n^(-1/q).
EmbeddingOperator build_W(int n, double eta, double p, double r, int depth,
                          double c_prime, std::uint64_t seed, int threads = 1);

struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& field, const std::string& detail)
      : std::runtime_error("operator file: bad " + field + " (" + detail + ")"),
        field(field) {}
  std::string field;
};

// Text header (key=value, fixed key set) + blank line + row-major IEEE-754
// little-endian float64 payload.  with_payload = false writes the header only;
// such files are reconstructed from their parameters on load and verified
// against the stored checksum.
void save_operator(const EmbeddingOperator& op, const std::filesystem::path& path,
                   bool with_payload = true);

EmbeddingOperator load_operator(const std::filesystem::path& path);

// FNV-1a 64-bit checksum over the row-major payload bytes.
std::uint64_t payload_checksum(const Eigen::MatrixXd& matrix);

}  // namespace lpembed
