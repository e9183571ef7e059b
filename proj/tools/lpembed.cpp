#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "lpembed/experiments.hpp"
#include "lpembed/operators.hpp"
#include "lpembed/stable.hpp"
#include "lpembed/version.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "configuration file");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--seed", flags.seed, "random seed override")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--threads", flags.threads, "worker thread count");
}

lpembed::ExperimentConfig make_config(const CommonFlags& flags,
                                      const std::string& experiment) {
  lpembed::ExperimentConfig config;
  if (!flags.config_path.empty())
    config = lpembed::parse_config_file(flags.config_path);
  config.experiment = experiment;
  if (flags.seed_set) config.seed = flags.seed;
  if (!flags.out.empty()) config.out = flags.out;
  if (flags.threads > 0) config.threads = flags.threads;
  return config;
}

void print_summary(const std::string& experiment, bool pass,
                   const std::vector<std::pair<std::string, std::string>>& lines) {
  std::printf("%s: %s\n", experiment.c_str(), pass ? "PASS" : "FAIL");
  for (const auto& [key, value] : lines)
    std::printf("  %s = %s\n", key.c_str(), value.c_str());
}

int run_experiment(const lpembed::ExperimentConfig& config) {
  using lpembed::format_f64;
  bool pass = false;
  if (config.experiment == "certify") {
    const auto res = lpembed::run_certify(config);
    if (!config.out.empty()) lpembed::write_outputs(res);
    print_summary("certify", res.pass,
                  {{"m", std::to_string(res.m)},
                   {"alpha_hat", format_f64(res.p1.alpha_hat)},
                   {"beta_hat", format_f64(res.p1.beta_hat)},
                   {"p1_violations", std::to_string(res.p1.violations)},
                   {"p2_violations", std::to_string(res.p2.violations)},
                   {"kashin_min_ratio", format_f64(res.kashin.min_ratio)},
                   {"kashin_max_ratio", format_f64(res.kashin.max_ratio)},
                   {"distortion_max_ratio", format_f64(res.distortion.max_ratio)},
                   {"elapsed_seconds", format_f64(res.elapsed_seconds)}});
    pass = res.pass;
  } else if (config.experiment == "distortion") {
    const auto res = lpembed::run_distortion_study(config);
    if (!config.out.empty()) lpembed::write_outputs(res);
    print_summary("distortion", res.pass,
                  {{"cells", std::to_string(res.rows.size())},
                   {"slope_raw", format_f64(res.slope_raw)},
                   {"slope_scaled", format_f64(res.slope_scaled)},
                   {"upper_bound", format_f64(res.upper_bound)},
                   {"elapsed_seconds", format_f64(res.elapsed_seconds)}});
    pass = res.pass;
  } else if (config.experiment == "phase") {
    const auto res = lpembed::run_phase_transition(config);
    if (!config.out.empty()) lpembed::write_outputs(res);
    std::vector<std::pair<std::string, std::string>> lines = {
        {"k", std::to_string(res.k)},
        {"m", std::to_string(res.m)},
        {"calibrated_s", std::to_string(res.calibrated_s)},
        {"elapsed_seconds", format_f64(res.elapsed_seconds)}};
    for (const auto& row : res.rows)
      lines.push_back({"success_rate[s=" + std::to_string(row.s) + "]",
                       format_f64(row.success_rate)});
    print_summary("phase", res.pass, lines);
    pass = res.pass;
  } else if (config.experiment == "gelfand") {
    const auto res = lpembed::run_gelfand_study(config);
    if (!config.out.empty()) lpembed::write_outputs(res);
    print_summary("gelfand", res.pass,
                  {{"min_c_hat", format_f64(res.min_c_hat)},
                   {"max_c_hat", format_f64(res.max_c_hat)},
                   {"elapsed_seconds", format_f64(res.elapsed_seconds)}});
    pass = res.pass;
  } else if (config.experiment == "stable") {
    const auto res = lpembed::run_stable_validation(config);
    if (!config.out.empty()) lpembed::write_outputs(res);
    print_summary("stable", res.pass,
                  {{"max_cf_error", format_f64(res.max_cf_error)},
                   {"max_ks_ratio", format_f64(res.max_ks_ratio)},
                   {"elapsed_seconds", format_f64(res.elapsed_seconds)}});
    pass = res.pass;
  } else {
    throw std::runtime_error("unknown experiment '" + config.experiment + "'");
  }
  return pass ? 0 : 1;
}

struct GenOptions {
  std::string kind = "S";
  std::string path;
  int n = 256;
  double eta = 0.25;
  double p = 1.5;
  double r = 1.0;
  std::int64_t depth = 0;
  double c_prime = 1.0;
  int m = 1;
  int theta_trials = 10000;
  std::uint64_t seed = 1;
  int threads = 1;
  bool header_only = false;
};

int run_gen(const GenOptions& opt) {
  const int depth = opt.depth > 0
                        ? static_cast<int>(opt.depth)
                        : lpembed::default_truncation_depth(opt.p);
  lpembed::EmbeddingOperator op;
  if (opt.kind == "S") {
    op = lpembed::build_S(opt.n, opt.eta, opt.p, depth, opt.seed, opt.threads);
  } else if (opt.kind == "T") {
    op = lpembed::build_T(opt.n, lpembed::row_count(opt.eta, opt.n), opt.p, opt.r,
                          depth, opt.theta_trials, opt.seed, opt.threads);
  } else if (opt.kind == "IdP2") {
    op = lpembed::build_id_p2(opt.n, opt.m, opt.p, opt.r);
  } else if (opt.kind == "W") {
    op = lpembed::build_W(opt.n, opt.eta, opt.p, opt.r, depth, opt.c_prime,
                          opt.seed, opt.threads);
  } else {
    throw std::runtime_error("gen: kind must be one of S, T, IdP2, W");
  }
  lpembed::save_operator(op, opt.path, !opt.header_only);
  std::printf("wrote %s (%s, %d x %d%s)\n", opt.path.c_str(),
              lpembed::to_string(op.kind).c_str(), op.rows, op.n,
              opt.header_only ? ", header only" : "");
  return 0;
}

int run_info(const std::string& path) {
  using lpembed::format_f64;
  const lpembed::EmbeddingOperator op = lpembed::load_operator(path);
  std::printf("kind = %s\n", lpembed::to_string(op.kind).c_str());
  std::printf("n = %d\n", op.n);
  std::printf("rows = %d\n", op.rows);
  std::printf("p = %s\n", format_f64(op.p).c_str());
  std::printf("r = %s\n", format_f64(op.r).c_str());
  std::printf("eta = %s\n", format_f64(op.eta).c_str());
  std::printf("J = %lld\n", static_cast<long long>(op.depth));
  std::printf("seed = %llu\n", static_cast<unsigned long long>(op.seed));
  std::printf("normalization = %s\n", format_f64(op.normalization).c_str());
  std::printf("c_prime = %s\n", format_f64(op.c_prime).c_str());
  std::printf("checksum = %016llx\n",
              static_cast<unsigned long long>(lpembed::payload_checksum(op.matrix)));
  std::printf("max_entry = %s\n",
              format_f64(op.matrix.cwiseAbs().maxCoeff()).c_str());
  std::printf("source = %s\n", op.metadata.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random quasi-norm embeddings: builders, certification, recovery"};
  app.set_version_flag("--version", std::string("lpembed ") + lpembed::version);
  app.require_subcommand(1);

  CommonFlags flags;
  for (const char* name :
       {"certify", "distortion", "phase", "gelfand", "stable"}) {
    CLI::App* cmd = app.add_subcommand(name, std::string(name) + " experiment");
    add_common_flags(cmd, flags);
  }

  GenOptions gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "build and save one operator");
  gen_cmd->add_option("--kind", gen.kind, "S, T, IdP2 or W")->required();
  gen_cmd->add_option("--out", gen.path, "destination file")->required();
  gen_cmd->add_option("--n", gen.n, "domain dimension");
  gen_cmd->add_option("--eta", gen.eta, "row aspect ratio");
  gen_cmd->add_option("--p", gen.p, "source exponent");
  gen_cmd->add_option("--r", gen.r, "target exponent");
  gen_cmd->add_option("--J", gen.depth, "series truncation depth (0 = default)");
  gen_cmd->add_option("--c-prime", gen.c_prime, "stacked block scaling constant");
  gen_cmd->add_option("--m", gen.m, "block size (IdP2)");
  gen_cmd->add_option("--theta-trials", gen.theta_trials,
                      "normalization estimate trials (T)");
  gen_cmd->add_option("--seed", gen.seed, "random seed");
  gen_cmd->add_option("--threads", gen.threads, "worker thread count");
  gen_cmd->add_flag("--header-only", gen.header_only,
                    "write parameters and checksum without the payload");

  std::string info_path;
  CLI::App* info_cmd = app.add_subcommand("info", "describe a saved operator");
  info_cmd->add_option("file", info_path, "operator file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) return run_gen(gen);
    if (info_cmd->parsed()) return run_info(info_path);
    const std::string name = app.get_subcommands().front()->get_name();
    return run_experiment(make_config(flags, name));
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  }
}
