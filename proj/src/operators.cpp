#include "lpembed/operators.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <type_traits>
#include <vector>

#include "lpembed/parallel.hpp"
#include "lpembed/quasinorm.hpp"
#include "lpembed/rng.hpp"
#include "lpembed/stable.hpp"

namespace lpembed {

namespace {

constexpr int format_version = 1;
constexpr std::uint64_t theta_seed_tag = 0x74686574;  // sub-seed for norm trials

void require(bool cond, const char* msg) {
  if (!cond) throw std::domain_error(msg);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Raw shot-noise matrix shared by the S/T/W builders; column i uses stream i.
Eigen::MatrixXd shot_noise_matrix(int rows, int n, double p, int depth,
                                  std::uint64_t seed, int threads) {
  const std::vector<double> weights = deterministic_weights(p, depth);
  Eigen::MatrixXd m(rows, n);
  parallel_for(n, threads, [&](std::int64_t i) {
    shot_noise_column_into(m.col(i), weights, seed, static_cast<std::uint64_t>(i));
  });
  return m;
}

}  // namespace

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::S: return "S";
    case OperatorKind::T: return "T";
    case OperatorKind::IdP2: return "IdP2";
    case OperatorKind::W: return "W";
    case OperatorKind::Custom: return "custom";
  }
  throw std::logic_error("unreachable operator kind");
}

OperatorKind operator_kind_from_string(const std::string& name) {
  if (name == "S") return OperatorKind::S;
  if (name == "T") return OperatorKind::T;
  if (name == "IdP2") return OperatorKind::IdP2;
  if (name == "W") return OperatorKind::W;
  if (name == "custom") return OperatorKind::Custom;
  throw FormatError("kind", "unknown value '" + name + "'");
}

Eigen::VectorXd EmbeddingOperator::apply(const Eigen::VectorXd& x) const {
  require(x.size() == n, "input dimension mismatch");
  return normalization * (matrix * x);
}

Eigen::VectorXd EmbeddingOperator::apply_sparse(const std::vector<int>& support,
                                                const Eigen::VectorXd& coeffs) const {
  require(static_cast<int>(support.size()) == coeffs.size(),
          "support/coefficient length mismatch");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows);
  for (std::size_t k = 0; k < support.size(); ++k) {
    require(support[k] >= 0 && support[k] < n, "support index out of range");
    y += coeffs[static_cast<int>(k)] * matrix.col(support[k]);
  }
  return normalization * y;
}

int row_count(double eta, int n) {
  require(n >= 1 && eta > 0, "need n >= 1 and eta > 0");
  const int k = static_cast<int>(std::ceil(eta * n - 1e-9));
  return std::max(1, k);
}

EmbeddingOperator build_S(int n, double eta, double p, int depth,
                          std::uint64_t seed, int threads) {
  const int rows = row_count(eta, n);
  EmbeddingOperator op;
  op.kind = OperatorKind::S;
  op.n = n;
  op.rows = rows;
  op.p = p;
  op.eta = eta;
  op.depth = depth;
  op.seed = seed;
  op.normalization = 1.0;
  op.matrix = shot_noise_matrix(rows, n, p, depth, seed, threads);
  op.metadata = "shot-noise columns, deterministic weights";
  return op;
}

EmbeddingOperator build_T(int n, int dim, double p, double r, int depth,
                          int trials, std::uint64_t seed, int threads) {
  require(dim >= 1, "codomain dimension must be >= 1");
  EmbeddingOperator op;
  op.kind = OperatorKind::T;
  op.n = n;
  op.rows = dim;
  op.p = p;
  op.r = r;
  op.eta = static_cast<double>(dim) / n;
  op.depth = depth;
  op.seed = seed;
  op.matrix = shot_noise_matrix(dim, n, p, depth, seed, threads);
  const ThetaNormEstimate est = estimate_theta_norm(
      p, r, dim, depth, trials, rng::derive_seed(seed, theta_seed_tag));
  require(est.value > 0, "column scale estimate must be positive");
  op.normalization = 1.0 / est.value;
  op.metadata = "normalized shot-noise columns; scale estimate " +
                format_double(est.value) + " from " + std::to_string(trials) +
                " trials (sem of r-th moment " + format_double(est.rth_moment_sem) + ")";
  return op;
}

EmbeddingOperator build_id_p2(int n, int m, double p, double r) {
  require(n >= 1 && m >= 1 && m <= n, "need 1 <= m <= n");
  const ExponentTriple e = ExponentTriple::make(p, r);
  EmbeddingOperator op;
  op.kind = OperatorKind::IdP2;
  op.n = n;
  op.rows = n;
  op.p = p;
  op.r = r;
  op.matrix = Eigen::MatrixXd::Identity(n, n);
  op.normalization = std::pow(static_cast<double>(m), -e.inv_q);
  op.metadata = "scaled identity, block size " + std::to_string(m) +
                ", kappa = " + format_double(1.0 / m);
  return op;
}

EmbeddingOperator build_W(int n, double eta, double p, double r, int depth,
                          double c_prime, std::uint64_t seed, int threads) {
  require(c_prime > 0, "c_prime must be positive");
  const ExponentTriple e = ExponentTriple::make(p, r);
  const int lower_rows = row_count(eta, n);
  EmbeddingOperator op;
  op.kind = OperatorKind::W;
  op.n = n;
  op.rows = n + lower_rows;
  op.p = p;
  op.r = r;
  op.eta = eta;
  op.depth = depth;
  op.seed = seed;
  op.c_prime = c_prime;
  const double block_scale =
      c_prime * std::pow(std::log1p(1.0 / eta), -e.inv_q);
  op.matrix.resize(op.rows, n);
  op.matrix.topRows(n) = Eigen::MatrixXd::Identity(n, n);
  op.matrix.bottomRows(lower_rows) =
      block_scale * shot_noise_matrix(lower_rows, n, p, depth, seed, threads);
  op.normalization = std::pow(static_cast<double>(n), -e.inv_q);
  op.metadata = "identity stacked over scaled shot-noise block";
  return op;
}

std::uint64_t payload_checksum(const Eigen::MatrixXd& matrix) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      const double v = matrix(i, j);
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

namespace {

std::string header_text(const EmbeddingOperator& op) {
  char checksum[32];
  std::snprintf(checksum, sizeof checksum, "%016llx",
                static_cast<unsigned long long>(payload_checksum(op.matrix)));
  std::string h;
  h += "format_version=" + std::to_string(format_version) + "\n";
  h += "kind=" + to_string(op.kind) + "\n";
  h += "n=" + std::to_string(op.n) + "\n";
  h += "rows=" + std::to_string(op.rows) + "\n";
  h += "p=" + format_double(op.p) + "\n";
  h += "r=" + format_double(op.r) + "\n";
  h += "eta=" + format_double(op.eta) + "\n";
  h += "J=" + std::to_string(op.depth) + "\n";
  h += "seed=" + std::to_string(op.seed) + "\n";
  h += "normalization=" + format_double(op.normalization) + "\n";
  h += "c_prime=" + format_double(op.c_prime) + "\n";
  h += "checksum=" + std::string(checksum) + "\n";
  return h;
}

template <typename T>
T parse_number(const std::string& field, const std::string& text, int base = 10) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  std::from_chars_result res{};
  if constexpr (std::is_floating_point_v<T>)
    res = std::from_chars(first, last, value);
  else
    res = std::from_chars(first, last, value, base);
  if (res.ec != std::errc{} || res.ptr != last)
    throw FormatError(field, "cannot parse '" + text + "'");
  return value;
}

// Rebuild the matrix of a header-only file from its recorded parameters.
Eigen::MatrixXd regenerate_matrix(const EmbeddingOperator& op) {
  switch (op.kind) {
    case OperatorKind::S:
    case OperatorKind::T:
      return shot_noise_matrix(op.rows, op.n, op.p, static_cast<int>(op.depth),
                               op.seed, 1);
    case OperatorKind::IdP2:
      return Eigen::MatrixXd::Identity(op.rows, op.n);
    case OperatorKind::W: {
      const ExponentTriple e = ExponentTriple::make(op.p, op.r);
      const int lower_rows = op.rows - op.n;
      if (lower_rows < 1) throw FormatError("rows", "stacked operator needs rows > n");
      const double block_scale =
          op.c_prime * std::pow(std::log1p(1.0 / op.eta), -e.inv_q);
      Eigen::MatrixXd m(op.rows, op.n);
      m.topRows(op.n) = Eigen::MatrixXd::Identity(op.n, op.n);
      m.bottomRows(lower_rows) =
          block_scale * shot_noise_matrix(lower_rows, op.n, op.p,
                                          static_cast<int>(op.depth), op.seed, 1);
      return m;
    }
    case OperatorKind::Custom:
      throw FormatError("payload", "custom operators cannot be regenerated");
  }
  throw std::logic_error("unreachable operator kind");
}

}  // namespace

void save_operator(const EmbeddingOperator& op, const std::filesystem::path& path,
                   bool with_payload) {
  require(op.n >= 1 && op.rows >= 1, "operator has empty shape");
  require(op.matrix.rows() == op.rows && op.matrix.cols() == op.n,
          "matrix shape disagrees with header fields");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << header_text(op) << "\n";
  if (with_payload) {
    std::vector<char> payload;
    payload.reserve(static_cast<std::size_t>(op.rows) * op.n * sizeof(double));
    for (int i = 0; i < op.rows; ++i) {
      for (int j = 0; j < op.n; ++j) {
        const double v = op.matrix(i, j);
        char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        payload.insert(payload.end(), bytes, bytes + sizeof(double));
      }
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

EmbeddingOperator load_operator(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::map<std::string, std::string> kv;
  std::string line;
  bool saw_blank = false;
  while (std::getline(in, line)) {
    if (line.empty()) {
      saw_blank = true;
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("header", "line without '='");
    const std::string key = line.substr(0, eq);
    if (kv.count(key)) throw FormatError(key, "duplicate key");
    kv[key] = line.substr(eq + 1);
  }
  if (!saw_blank) throw FormatError("header", "missing blank separator line");

  static const char* required_keys[] = {"format_version", "kind", "n", "rows",
                                        "p", "r", "eta", "J", "seed",
                                        "normalization", "c_prime", "checksum"};
  for (const char* key : required_keys)
    if (!kv.count(key)) throw FormatError(key, "missing");
  if (kv.size() != std::size(required_keys))
    throw FormatError("header", "unexpected extra keys");

  if (parse_number<int>("format_version", kv["format_version"]) != format_version)
    throw FormatError("format_version", "unsupported version " + kv["format_version"]);

  EmbeddingOperator op;
  op.kind = operator_kind_from_string(kv["kind"]);
  op.n = parse_number<int>("n", kv["n"]);
  op.rows = parse_number<int>("rows", kv["rows"]);
  op.p = parse_number<double>("p", kv["p"]);
  op.r = parse_number<double>("r", kv["r"]);
  op.eta = parse_number<double>("eta", kv["eta"]);
  op.depth = parse_number<std::int64_t>("J", kv["J"]);
  op.seed = parse_number<std::uint64_t>("seed", kv["seed"]);
  op.normalization = parse_number<double>("normalization", kv["normalization"]);
  op.c_prime = parse_number<double>("c_prime", kv["c_prime"]);
  const std::uint64_t checksum =
      parse_number<std::uint64_t>("checksum", kv["checksum"], 16);
  if (op.n < 1 || op.rows < 1) throw FormatError("n", "shape must be positive");

  const std::size_t expected =
      static_cast<std::size_t>(op.rows) * static_cast<std::size_t>(op.n) *
      sizeof(double);
  std::vector<char> payload(expected);
  in.read(payload.data(), static_cast<std::streamsize>(expected));
  const std::size_t got = static_cast<std::size_t>(in.gcount());

  if (got == 0) {
    op.matrix = regenerate_matrix(op);
    op.metadata = "regenerated from header";
  } else if (got < expected) {
    throw FormatError("payload", "truncated: expected " + std::to_string(expected) +
                                     " bytes, found " + std::to_string(got));
  } else {
    if (in.peek() != std::ifstream::traits_type::eof())
      throw FormatError("payload", "trailing bytes after payload");
    op.matrix.resize(op.rows, op.n);
    for (int i = 0; i < op.rows; ++i) {
      for (int j = 0; j < op.n; ++j) {
        double v;
        std::memcpy(&v, payload.data() +
                            (static_cast<std::size_t>(i) * op.n + j) * sizeof(double),
                    sizeof(double));
        op.matrix(i, j) = v;
      }
    }
    op.metadata = "loaded payload";
  }

  const std::uint64_t actual = payload_checksum(op.matrix);
  if (actual != checksum) {
    char want[32], have[32];
    std::snprintf(want, sizeof want, "%016llx",
                  static_cast<unsigned long long>(checksum));
    std::snprintf(have, sizeof have, "%016llx",
                  static_cast<unsigned long long>(actual));
    throw FormatError("checksum", std::string("stored ") + want + ", computed " + have);
  }
  return op;
}

}  // namespace lpembed
