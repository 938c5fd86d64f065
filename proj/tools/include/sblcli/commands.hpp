#pragma once

#include "sblcli/config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace sblcli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

/// Command-line overrides applied on top of the config file.
struct Options {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<Format> format;
  std::optional<int> threads;
};

/// Thread count from the flag, else the SBL_THREADS value, else 0 (all
/// available). Throws ConfigError for a malformed or non-positive value.
int resolve_threads(std::optional<int> flag, const char* env_value);

// Each command writes its result to the configured output (standard output
// when none is set) and a short summary to `out`, or to `err` when the
// result itself goes to standard output. Diagnostics go to `err`.
int cmd_run(const Options& options, std::ostream& out, std::ostream& err);
int cmd_sweep(const Options& options, std::ostream& out, std::ostream& err);
int cmd_diag_probes(const Options& options, std::ostream& out, std::ostream& err);

}  // namespace sblcli
