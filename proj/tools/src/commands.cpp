#include "sblcli/commands.hpp"

#include "sblcli/serialize.hpp"

#include "sbl/error.hpp"
#include "sbl/parallel.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>

namespace sblcli {

namespace sim = sbl::simulate;

namespace {

RunConfig prepare(const Options& options) {
  RunConfig config = load_config(options.config);
  if (options.seed) config.spec.seed = *options.seed;
  if (options.output) config.output = *options.output;
  if (options.format) config.format = *options.format;
  validate(config);
  sbl::set_thread_count(resolve_threads(options.threads, std::getenv("SBL_THREADS")));
  return config;
}

// Writes `text` to the configured output. Returns the stream that should
// receive the human-readable summary.
std::ostream& emit(const RunConfig& config, const std::string& text, std::ostream& out,
                   std::ostream& err) {
  if (config.output.empty() || config.output == "-") {
    out << text;
    out.flush();
    return err;
  }
  std::ofstream file(config.output, std::ios::binary | std::ios::trunc);
  if (!file) throw ConfigError(config.origin, 0, "output", "output: cannot open '" + config.output + "' for writing");
  file << text;
  file.close();
  if (!file) throw ConfigError(config.origin, 0, "output", "output: failed writing '" + config.output + "'");
  return out;
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const sbl::DomainError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const sbl::DimensionError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const sbl::NumericalError& e) {
    fmt::print(err, "numerical error: {}\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitNumerical;
  }
}

std::string describe_cell(const std::vector<std::string>& names, const std::vector<double>& values) {
  std::string out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (k) out += ' ';
    out += fmt::format("{}={:g}", names[k], values[k]);
  }
  return out;
}

}  // namespace

int resolve_threads(std::optional<int> flag, const char* env_value) {
  if (flag) {
    if (*flag < 1) throw ConfigError("--threads", 0, "threads", "--threads must be >= 1");
    return *flag;
  }
  if (env_value == nullptr || *env_value == '\0') return 0;
  char* end = nullptr;
  const long v = std::strtol(env_value, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096) {
    throw ConfigError("SBL_THREADS", 0, "threads",
                      fmt::format("SBL_THREADS must be a positive integer, got '{}'", env_value));
  }
  return static_cast<int>(v);
}

int cmd_run(const Options& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = prepare(options);
    const auto result = sim::run_experiment(config.spec);
    const std::string text =
        config.format == Format::Json ? result_to_json(result) : result_to_csv(result);
    std::ostream& summary = emit(config, text, out, err);
    fmt::print(summary, "method={} D={} N={} d={} nrmse={:.6g}% wall={:.6g}s\n",
               sim::to_string(result.method), result.D, result.N, result.d, result.nrmse,
               result.total_seconds);
    return kExitOk;
  });
}

int cmd_sweep(const Options& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = prepare(options);
    if (!config.sweep) throw ConfigError(config.origin, 0, "sweep", "sweep: block is required for the sweep command");
    const auto spec = config.sweep_spec();
    const auto start = std::chrono::steady_clock::now();
    const auto result = sim::run_sweep(spec);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto table = make_sweep_table(spec, result);
    const std::string text =
        config.format == Format::Json ? sweep_to_json(spec, result) : sweep_to_csv(table);
    std::ostream& summary = emit(config, text, out, err);

    std::size_t failed = 0;
    for (const auto& rec : result.records) {
      if (rec.result.error.empty()) continue;
      ++failed;
      fmt::print(err, "warning: cell {} trial {} failed: {}\n", rec.cell, rec.trial, rec.result.error);
    }
    for (const auto& agg : result.aggregates) {
      fmt::print(summary, "{}  mean nrmse={:.6g}%  mean cg steps={:.6g}  ok={}/{}\n",
                 describe_cell(table.parameters, agg.values), agg.mean_nrmse, agg.mean_cg_steps,
                 agg.successful_trials, spec.trials);
    }
    fmt::print(summary, "{} runs, {} failed, wall={:.6g}s\n", result.records.size(), failed, wall);
    return failed == result.records.size() ? kExitNumerical : kExitOk;
  });
}

int cmd_diag_probes(const Options& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = prepare(options);
    const DiagProbesBlock block = config.diag_probes.value_or(DiagProbesBlock{});
    const auto diag = sim::probe_diagnostics(config.spec, block.probes, block.repetitions,
                                             block.active_threshold);
    const std::string text =
        config.format == Format::Json ? diagnostics_to_json(diag) : diagnostics_to_csv(diag);
    std::ostream& summary = emit(config, text, out, err);
    fmt::print(summary, "T={} |S|={} repetitions={}\n", diag.iterations, diag.support.size(),
               block.repetitions);
    fmt::print(summary, "{:>6} {:>14} {:>14} {:>14}\n", "K", "empirical", "exact", "bound");
    for (const auto& row : diag.rows) {
      fmt::print(summary, "{:>6} {:>14.6e} {:>14.6e} {:>14.6e}{}\n", row.probes,
                 row.empirical_max_std, row.lemma_max_std, row.theorem_bound,
                 row.empirical_max_std <= row.theorem_bound ? "" : "  (above bound)");
    }
    return kExitOk;
  });
}

}  // namespace sblcli
