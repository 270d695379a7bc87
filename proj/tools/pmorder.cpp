// pmorder: run, list and validate experiment configs.
//
//   pmorder run <config.json> [--out DIR] [--seed N] [--threads K]
//   pmorder list-kinds
//   pmorder validate <config.json>
//
// `run` exits 0 only when every verdict in the report passes.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "pmorder/error.hpp"
#include "pmorder/experiments.hpp"

namespace {

pmorder::Json load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pmorder::Error("cli", "cannot open " + path);
  try {
    return pmorder::Json::parse(in);
  } catch (const pmorder::Json::parse_error& e) {
    throw pmorder::Error("cli", path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-marginal ordering experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  auto* run = app.add_subcommand("run", "Run an experiment config and write report.json plus tables");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  auto* out_opt = run->add_option("--out", out_dir, "Output directory (overrides out_dir)");
  auto* seed_opt = run->add_option("--seed", seed, "Seed (overrides the config seed)");
  run->add_option("--threads", threads, "Worker threads for instance sweeps")
      ->check(CLI::Range(1U, 256U));

  app.add_subcommand("list-kinds", "Print the experiment kinds");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config against its schema");
  validate->add_option("config", validate_path, "Config file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("list-kinds")) {
      for (const auto& k : pmorder::experiment_kinds()) std::cout << k << '\n';
      return 0;
    }
    if (app.got_subcommand("validate")) {
      const auto cfg = pmorder::parse_config(load(validate_path));
      std::cout << "ok: " << cfg.kind << '\n';
      return 0;
    }
    auto cfg = pmorder::parse_config(load(config_path));
    pmorder::RunOptions opts;
    if (*seed_opt) opts.seed = seed;
    opts.threads = threads;
    const auto report = pmorder::run_experiment(cfg, opts);
    std::string dir = *out_opt ? out_dir : cfg.out_dir.value_or("out/" + cfg.kind);
    pmorder::write_report(report, dir);
    for (const auto& v : report.verdicts)
      std::cout << (v.passed ? "PASS " : "FAIL ") << v.name << "  value=" << pmorder::format_number(v.value)
                << "  tol=" << pmorder::format_number(v.tolerance) << '\n';
    std::cout << (report.passed() ? "all verdicts passed" : "some verdicts failed") << "; report in " << dir
              << '\n';
    return report.passed() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
