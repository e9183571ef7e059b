#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpembed/config.hpp"
#include "lpembed/experiments.hpp"
#include "lpembed/rng.hpp"

using namespace lpembed;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

std::string first_line(const std::string& text) {
  return text.substr(0, text.find('\n'));
}

// Manifest bytes with the (intentionally nondeterministic) elapsed line cut.
std::string strip_elapsed(const std::string& text) {
  std::string out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (line.rfind("elapsed_seconds=", 0) != 0) out += line + "\n";
  return out;
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config text parses with comments, spacing, and lists") {
  const ExperimentConfig c = parse_config_text(
      "# run configuration\n"
      "experiment = distortion   # trailing comment\n"
      "n=512\n"
      "  eta_grid = 0.0625, 0.125,0.25  \n"
      "J = 4096\n"
      "seed = 42\n"
      "normalize = true\n"
      "m_rule = explicit\n"
      "m = 7\n"
      "out = results\n"
      "\n"
      "threads = 2\n");
  CHECK(c.experiment == "distortion");
  CHECK(c.n == 512);
  CHECK(c.eta_grid == std::vector<double>{0.0625, 0.125, 0.25});
  CHECK(c.depth == 4096);
  CHECK(c.seed == 42);
  CHECK(c.normalize);
  CHECK(c.m_rule == "explicit");
  CHECK(c.m == 7);
  CHECK(c.out == "results");
  CHECK(c.threads == 2);

  CHECK_THROWS_AS(parse_config_text("bogus_key = 1\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_config_text("n = twelve\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_config_text("m_rule = sometimes\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_config_text("just a line\n"), std::runtime_error);
}

TEST_CASE("emitted configs are parse fixpoints") {
  ExperimentConfig c;
  c.experiment = "phase";
  c.n = 192;
  c.eta = 0.3333333333333333;
  c.p = 1.2000000000000002;
  c.r = 0.5;
  c.depth = 12345;
  c.seed = 18446744073709551615ULL;
  c.normalize = true;
  c.s_grid = {1, 3, 9};
  c.t_grid = {0.1, 2.5};
  c.out = "some/dir";
  const std::string emitted = emit_config(c);
  const ExperimentConfig back = parse_config_text(emitted);
  CHECK(emit_config(back) == emitted);
  CHECK(back.eta == c.eta);
  CHECK(back.p == c.p);
  CHECK(back.seed == c.seed);
  CHECK(back.s_grid == c.s_grid);
  CHECK(back.t_grid == c.t_grid);
  CHECK(back.out == c.out);
  CHECK(back.normalize == c.normalize);

  // Defaults round-trip too.
  const ExperimentConfig d;
  CHECK(emit_config(parse_config_text(emit_config(d))) == emit_config(d));
}

TEST_CASE("block size rule") {
  CHECK(block_size_eq1(0.1, 0.25, 256) == 3);
  CHECK(block_size_eq1(0.1, 0.5, 256) == 11);
  CHECK(block_size_eq1(0.1, 1.0, 256) == 36);
  CHECK(block_size_eq1(0.001, 0.25, 16) == 1);  // floor clamps up to 1
  CHECK_THROWS_AS(block_size_eq1(0.0, 0.25, 16), std::domain_error);

  ExperimentConfig c;
  c.m_rule = "explicit";
  c.m = 7;
  CHECK(resolved_block_size(c, 0.25, 256) == 7);
  c.m = 0;
  CHECK_THROWS_AS(resolved_block_size(c, 0.25, 256), std::runtime_error);
  c.m_rule = "eq1";
  c.m_coeff = 0.1;
  CHECK(resolved_block_size(c, 1.0, 256) == 36);
}

TEST_CASE("depth and grid resolution") {
  ExperimentConfig c;
  c.p = 0.5;
  CHECK(resolved_depth(c) == 70);
  c.depth = 128;
  CHECK(resolved_depth(c) == 128);
  CHECK(resolved_eta_grid(c) == std::vector<double>{0.0625, 0.125, 0.25, 0.5, 1.0});
  CHECK(resolved_s_grid(c) == std::vector<int>{1, 2, 4, 8, 12, 16, 24, 32});
  CHECK(resolved_n_grid(c) == std::vector<int>{128, 256, 512});
  CHECK(resolved_p_grid(c) == std::vector<double>{0.5, 1.0, 1.5, 2.0});
  CHECK(resolved_t_grid(c) == std::vector<double>{0.25, 0.5, 1.0, 2.0});
  c.eta_grid = {0.5};
  CHECK(resolved_eta_grid(c) == std::vector<double>{0.5});
}

TEST_CASE("certify run composes, writes outputs, and reruns byte-identically") {
  ExperimentConfig c;
  c.experiment = "certify";
  c.n = 64;
  c.eta = 0.25;
  c.p = 1.5;
  c.r = 1.0;
  c.depth = 2048;
  c.trials = 400;
  c.samples = 400;
  c.seed = 20260814;
  c.out = fresh_dir("lpembed_certify_a").string();

  const CertifyResult res = run_certify(c);
  CHECK(res.m == 1);  // 0.1 * (0.25 / log 5) * 64 rounds down to the floor of 1
  CHECK(res.kappa == 1.0);
  CHECK(res.p1.pass());
  CHECK(res.p2.violations == 0);
  CHECK(res.composed);
  CHECK(res.kashin.upper_violations == 0);
  CHECK(res.kashin.lower_violations == 0);
  CHECK(res.kashin.upper_violations_with_valid_premises == 0);
  CHECK(res.distortion.sandwich_violations == 0);
  CHECK(res.distortion.min_ratio > 0);
  write_outputs(res);

  const auto dir_a = std::filesystem::path(c.out);
  const std::string csv_a = read_file(dir_a / "certify.csv");
  CHECK(first_line(csv_a) ==
        "n,eta,p,r,J,m,kappa,seed,alpha_hat,beta_hat,p1_violations,p2_violations,"
        "gamma,lower_bound_coefficient,kashin_min_ratio,kashin_max_ratio,"
        "kashin_upper_violations,kashin_lower_violations,kashin_sigma_count,"
        "distortion_min_ratio,distortion_max_ratio,distortion_upper_bound,"
        "sandwich_violations,pass");

  // Snapshot every output, then rerun the identical config into the same
  // directory: bytes must match (manifest modulo its elapsed-seconds line).
  const std::string manifest_a = read_file(dir_a / "manifest.txt");
  const std::array<const char*, 4> reports = {
      "p1_certificate.json", "p2_certificate.json", "kashin_report.json",
      "distortion_report.json"};
  std::vector<std::string> report_bytes;
  for (const char* name : reports) report_bytes.push_back(read_file(dir_a / name));
  write_outputs(run_certify(c));
  CHECK(read_file(dir_a / "certify.csv") == csv_a);
  for (std::size_t i = 0; i < reports.size(); ++i)
    CHECK(read_file(dir_a / reports[i]) == report_bytes[i]);
  CHECK(strip_elapsed(read_file(dir_a / "manifest.txt")) ==
        strip_elapsed(manifest_a));

  // A different thread count changes no result bytes either (the manifest's
  // config echo records the thread count, so only the data files compare).
  ExperimentConfig c2 = c;
  c2.threads = 2;
  c2.out = fresh_dir("lpembed_certify_b").string();
  write_outputs(run_certify(c2));
  const auto dir_b = std::filesystem::path(c2.out);
  CHECK(read_file(dir_b / "certify.csv") == csv_a);
  for (std::size_t i = 0; i < reports.size(); ++i)
    CHECK(read_file(dir_b / reports[i]) == report_bytes[i]);
  CHECK(first_line(read_file(dir_b / "manifest.txt")) == first_line(manifest_a));

  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("stable validation passes at moderate sample counts") {
  ExperimentConfig c;
  c.experiment = "stable";
  c.samples = 20000;
  c.seed = 7;
  c.out = fresh_dir("lpembed_stable").string();
  const StableValidationResult res = run_stable_validation(c);
  CHECK(res.rows.size() == 16);  // 4 exponents x 4 evaluation points
  CHECK(res.max_cf_error <= 0.02);
  CHECK(res.max_ks_ratio < 1.0);
  CHECK(res.pass);
  write_outputs(res);
  const std::string csv = read_file(std::filesystem::path(c.out) / "stable.csv");
  CHECK(first_line(csv) == "p,t,samples,cf_error,ks_statistic,ks_critical");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
  std::filesystem::remove_all(c.out);
}

TEST_CASE("phase transition run over a small sparsity grid") {
  ExperimentConfig c;
  c.experiment = "phase";
  c.n = 32;
  c.k = 16;
  c.p = 1.5;
  c.r = 1.0;
  c.depth = 1024;
  c.trials = 200;
  c.phase_trials = 25;
  c.s_grid = {0, 1, 2};
  c.seed = 11;
  c.out = fresh_dir("lpembed_phase").string();
  const PhaseTransitionResult res = run_phase_transition(c);
  CHECK(res.k == 16);
  CHECK(res.m == 1);
  CHECK(res.p1.pass());
  REQUIRE(res.rows.size() == 3);
  // s = 0 is the zero signal: decoding is trivially exact.
  CHECK(res.rows[0].success_rate == 1.0);
  CHECK(res.rows[0].mean_error == 0.0);
  // Very sparse signals at half-rate measurements decode reliably.
  CHECK(res.rows[1].success_rate >= 0.9);
  CHECK(res.pass);
  write_outputs(res);
  const std::string csv = read_file(std::filesystem::path(c.out) / "phase.csv");
  CHECK(first_line(csv) ==
        "s,trials,success_rate,mean_error,mean_iterations,bound_failures");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  std::filesystem::remove_all(c.out);
}

TEST_CASE("width-ratio study stays within a modest factor across sizes") {
  ExperimentConfig c;
  c.experiment = "gelfand";
  c.n_grid = {128, 256};
  c.samples = 400;
  c.p = 1.0;
  c.r = 0.5;
  c.depth = 1024;
  c.seed = 13;
  c.out = fresh_dir("lpembed_gelfand").string();
  const GelfandStudyResult res = run_gelfand_study(c);
  REQUIRE(res.rows.size() == 2);
  CHECK(res.rows[0].k == 64);
  CHECK(res.rows[1].k == 128);
  CHECK(res.min_c_hat > 0);
  CHECK(res.max_c_hat / res.min_c_hat < 3.0);
  CHECK_FALSE(res.log_factor_note);
  CHECK(res.pass);
  write_outputs(res);
  const std::string csv = read_file(std::filesystem::path(c.out) / "gelfand.csv");
  CHECK(first_line(csv) == "n,k,samples,max_ratio,reference_scale,c_hat");
  std::filesystem::remove_all(c.out);
}

TEST_CASE("distortion study emits one row per aspect ratio") {
  ExperimentConfig c;
  c.experiment = "distortion";
  c.n = 64;
  c.eta_grid = {0.25, 1.0};
  c.p = 1.5;
  c.r = 1.0;
  c.depth = 1024;
  c.samples = 500;
  c.seed = 17;
  c.out = fresh_dir("lpembed_distortion").string();
  const DistortionStudyResult res = run_distortion_study(c);
  REQUIRE(res.rows.size() == 2);
  for (const DistortionRow& row : res.rows) {
    CHECK(row.samples == 500);
    CHECK(row.sandwich_violations == 0);
    CHECK(row.min_ratio > 0);
    CHECK(row.predicted_scale > 0);
  }
  CHECK(res.rows[0].eta == 0.25);
  CHECK(res.rows[1].eta == 1.0);
  // Scale-ordering sanity: richer measurement budgets embed no worse.
  CHECK(res.rows[1].min_ratio > res.rows[0].min_ratio);
  write_outputs(res);
  const std::string csv = read_file(std::filesystem::path(c.out) / "distortion.csv");
  CHECK(first_line(csv) ==
        "eta,m,samples,min_ratio,max_ratio,predicted_scale,sandwich_violations");
  const std::string manifest =
      read_file(std::filesystem::path(c.out) / "manifest.txt");
  CHECK(manifest.find("slope_raw=") != std::string::npos);
  std::filesystem::remove_all(c.out);
}

TEST_CASE("seed derivation separates sub-experiments") {
  const std::uint64_t base = 99;
  CHECK(rng::derive_seed(base, 1) != rng::derive_seed(base, 2));
  CHECK(rng::derive_seed(base, 1) == rng::derive_seed(base, 1));
  CHECK(rng::derive_seed(base, 1) != rng::derive_seed(base + 1, 1));
}
