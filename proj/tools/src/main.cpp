#include "sblcli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_common(CLI::App* cmd, sblcli::Options& opts, std::string& format) {
  cmd->add_option("config", opts.config, "YAML experiment config")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "Override the config seed");
  cmd->add_option("--output,-o", opts.output, "Output file ('-' for standard output)");
  cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--threads", opts.threads, "Worker threads (default: SBL_THREADS, else all)")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Bayesian learning experiments"};
  app.require_subcommand(1);
  sblcli::Options opts;
  std::string format;
  auto* run = app.add_subcommand("run", "Run one experiment");
  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid");
  auto* diag = app.add_subcommand("diag-probes", "Diagonal estimator spread versus K");
  for (auto* cmd : {run, sweep, diag}) add_common(cmd, opts, format);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sblcli::kExitConfig;
  }
  if (!format.empty()) opts.format = sblcli::parse_format(format);

  if (*run) return sblcli::cmd_run(opts, std::cout, std::cerr);
  if (*sweep) return sblcli::cmd_sweep(opts, std::cout, std::cerr);
  return sblcli::cmd_diag_probes(opts, std::cout, std::cerr);
}
