#pragma once

#include "sbl/simulate.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sblcli {

using sbl::linop::Index;

/// Doubles are written with 17 significant digits; "nan", "inf" and "-inf"
/// stand for non-finite values in both formats.
std::string format_double(double value);
double parse_double(const std::string& text);

// Single experiment. JSON mirrors the ExperimentResult field names; CSV is
// a header line plus one row, vectors joined with ';'.
std::string result_to_json(const sbl::simulate::ExperimentResult& result);
sbl::simulate::ExperimentResult result_from_json(const std::string& text);
std::string result_to_csv(const sbl::simulate::ExperimentResult& result);
sbl::simulate::ExperimentResult result_from_csv(const std::string& text);

/// One line of the sweep CSV. Aggregate lines have no trial index.
struct SweepRow {
  std::string method;
  Index D = 0;
  Index N = 0;
  Index d = 0;
  std::vector<double> values;  ///< one per swept parameter
  std::optional<int> trial;
  double nrmse = 0.0;
  double total_cg_steps = 0.0;
  double wall_seconds = 0.0;

  bool operator==(const SweepRow&) const = default;
};

struct SweepTable {
  std::vector<std::string> parameters;
  std::vector<SweepRow> rows;

  bool operator==(const SweepTable&) const = default;
};

/// Detail rows in (cell, trial) order, then one aggregate row per cell.
SweepTable make_sweep_table(const sbl::simulate::SweepSpec& spec,
                            const sbl::simulate::SweepResult& result);
std::string sweep_to_csv(const SweepTable& table);
SweepTable sweep_from_csv(const std::string& text);

std::string sweep_to_json(const sbl::simulate::SweepSpec& spec,
                          const sbl::simulate::SweepResult& result);
sbl::simulate::SweepResult sweep_from_json(const std::string& text);

std::string diagnostics_to_csv(const sbl::simulate::ProbeDiagnostics& diag);
std::string diagnostics_to_json(const sbl::simulate::ProbeDiagnostics& diag);
sbl::simulate::ProbeDiagnostics diagnostics_from_json(const std::string& text);

/// Throws std::runtime_error on malformed input.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sblcli
