#include <iostream>

#include "CLI11.hpp"
#include "rootsa/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Recursive variance-reduced stochastic approximation experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ROOTSA_VERSION);

  rootsa::cli::CommandOptions opts;
  int workers = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "Experiment config (JSON)")->required();
    sub->add_option("--out", opts.out_dir, "Output directory");
    sub->add_option("--workers", workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("--seed-offset", opts.seed_offset, "Added to every configured seed");
    sub->add_flag("--dry-run", opts.dry_run, "Replay injected series instead of running the solver");
  };
  auto* run = app.add_subcommand("run", "One run per (seed, horizon)");
  auto* sweep = app.add_subcommand("sweep", "Seed x horizon sweep with log-log slope");
  auto* audit = app.add_subcommand("audit", "Contraction, mixing and kernel audits");
  auto* estimate = app.add_subcommand("estimate", "Instance-dependent error predictions");
  for (auto* sub : {run, sweep, audit, estimate}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rootsa::cli::kConfigError;
  }
  if (workers > 0) opts.workers = workers;

  if (*run) return rootsa::cli::cmd_run(opts);
  if (*sweep) return rootsa::cli::cmd_sweep(opts);
  if (*audit) return rootsa::cli::cmd_audit(opts);
  return rootsa::cli::cmd_estimate(opts);
}
