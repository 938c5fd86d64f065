#pragma once

#include "sbl/simulate.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sblcli {

using sbl::linop::Index;

enum class Format { Json, Csv };

const char* to_string(Format format);
std::optional<Format> parse_format(const std::string& name);

struct SweepBlock {
  std::vector<sbl::simulate::SweepAxis> axes;
  int trials = 25;
};

struct DiagProbesBlock {
  std::vector<Index> probes{5, 10, 20, 40};
  int repetitions = 1000;
  double active_threshold = 1e3;
};

struct RunConfig {
  sbl::simulate::ExperimentSpec spec;
  std::optional<SweepBlock> sweep;
  std::optional<DiagProbesBlock> diag_probes;
  std::string output;  ///< empty: standard output
  Format format = Format::Json;

  std::string origin = "<config>";
  /// Dotted key -> 1-based line of its first appearance.
  std::map<std::string, int> key_lines;

  sbl::simulate::SweepSpec sweep_spec() const;
};

/// Invalid configuration. `line` is 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string origin, int line, std::string key, const std::string& message);

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

/// Parses YAML text. Unknown keys, wrong types and malformed values throw
/// ConfigError pointing at the offending line.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Semantic validation of the parsed config, mapped back to config lines.
void validate(const RunConfig& config);

}  // namespace sblcli
