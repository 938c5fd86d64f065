#include "sblcli/serialize.hpp"

#include <nlohmann/json.hpp>

#include <fmt/format.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

namespace sblcli {

namespace sim = sbl::simulate;
using json = nlohmann::json;
using sbl::linop::Vector;

namespace {

sim::Method parse_method(const std::string& name) {
  for (auto m : {sim::Method::Cofem, sim::Method::Em, sim::Method::Irls}) {
    if (name == sim::to_string(m)) return m;
  }
  throw ParseError("unknown method '" + name + "'");
}

// ---- JSON helpers -------------------------------------------------------

json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double number(const json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  if (!j.is_number()) throw ParseError("expected a number, got " + j.dump());
  return j.get<double>();
}

json numbers(const double* data, std::size_t n) {
  json out = json::array();
  for (std::size_t i = 0; i < n; ++i) out.push_back(number(data[i]));
  return out;
}

json numbers(const Vector& v) { return numbers(v.data(), static_cast<std::size_t>(v.size())); }
json numbers(const std::vector<double>& v) { return numbers(v.data(), v.size()); }

std::vector<double> read_numbers(const json& j) {
  if (!j.is_array()) throw ParseError("expected an array, got " + j.dump());
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(number(item));
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

json result_object(const sim::ExperimentResult& r) {
  json j;
  j["method"] = sim::to_string(r.method);
  j["D"] = r.D;
  j["N"] = r.N;
  j["d"] = r.d;
  j["beta"] = number(r.beta);
  j["nrmse"] = number(r.nrmse);
  j["support_f1"] = number(r.support_f1);
  j["setup_seconds"] = number(r.setup_seconds);
  j["inference_seconds"] = number(r.inference_seconds);
  j["total_seconds"] = number(r.total_seconds);
  j["cg_steps"] = r.cg_steps;
  j["cg_residuals"] = numbers(r.cg_residuals);
  j["total_cg_steps"] = r.total_cg_steps;
  j["z_hat"] = numbers(r.z_hat);
  j["z_true"] = numbers(r.z_true);
  j["error"] = r.error;
  return j;
}

sim::ExperimentResult result_from_object(const json& j) {
  sim::ExperimentResult r;
  r.method = parse_method(j.at("method").get<std::string>());
  r.D = j.at("D").get<Index>();
  r.N = j.at("N").get<Index>();
  r.d = j.at("d").get<Index>();
  r.beta = number(j.at("beta"));
  r.nrmse = number(j.at("nrmse"));
  r.support_f1 = number(j.at("support_f1"));
  r.setup_seconds = number(j.at("setup_seconds"));
  r.inference_seconds = number(j.at("inference_seconds"));
  r.total_seconds = number(j.at("total_seconds"));
  r.cg_steps = j.at("cg_steps").get<std::vector<int>>();
  r.cg_residuals = read_numbers(j.at("cg_residuals"));
  r.total_cg_steps = j.at("total_cg_steps").get<long long>();
  r.z_hat = to_vector(read_numbers(j.at("z_hat")));
  r.z_true = to_vector(read_numbers(j.at("z_true")));
  r.error = j.at("error").get<std::string>();
  return r;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

template <class F>
auto with_json_errors(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string("unexpected JSON layout: ") + e.what());
  }
}

// ---- CSV helpers --------------------------------------------------------

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> csv_parse(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted CSV field");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string join_numbers(const double* data, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ';';
    out += format_double(data[i]);
  }
  return out;
}

std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto end = s.find(';', start);
    out.push_back(parse_double(s.substr(start, end - start)));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

long long parse_integer(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno == ERANGE) throw ParseError("malformed integer '" + s + "'");
  return v;
}

const std::vector<std::string> kResultColumns{
    "method", "D", "N", "d", "beta", "nrmse", "support_f1", "setup_seconds", "inference_seconds",
    "total_seconds", "total_cg_steps", "cg_steps", "cg_residuals", "z_hat", "z_true", "error"};

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  return out + '\n';
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", value);
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0') throw ParseError("malformed number '" + text + "'");
  return v;
}

std::string result_to_json(const sim::ExperimentResult& result) {
  return result_object(result).dump(2) + '\n';
}

sim::ExperimentResult result_from_json(const std::string& text) {
  const json j = parse_json(text);
  return with_json_errors([&] { return result_from_object(j); });
}

std::string result_to_csv(const sim::ExperimentResult& r) {
  std::string steps;
  for (std::size_t i = 0; i < r.cg_steps.size(); ++i) {
    if (i) steps += ';';
    steps += std::to_string(r.cg_steps[i]);
  }
  return csv_line(kResultColumns) +
         csv_line({sim::to_string(r.method), std::to_string(r.D), std::to_string(r.N),
                   std::to_string(r.d), format_double(r.beta), format_double(r.nrmse),
                   format_double(r.support_f1), format_double(r.setup_seconds),
                   format_double(r.inference_seconds), format_double(r.total_seconds),
                   std::to_string(r.total_cg_steps), steps,
                   join_numbers(r.cg_residuals.data(), r.cg_residuals.size()),
                   join_numbers(r.z_hat.data(), static_cast<std::size_t>(r.z_hat.size())),
                   join_numbers(r.z_true.data(), static_cast<std::size_t>(r.z_true.size())),
                   r.error});
}

sim::ExperimentResult result_from_csv(const std::string& text) {
  const auto rows = csv_parse(text);
  if (rows.size() != 2) throw ParseError("expected a header and one data row");
  if (rows[0] != kResultColumns) throw ParseError("unexpected CSV header");
  const auto& f = rows[1];
  if (f.size() != kResultColumns.size()) throw ParseError("wrong number of CSV fields");
  sim::ExperimentResult r;
  r.method = parse_method(f[0]);
  r.D = parse_integer(f[1]);
  r.N = parse_integer(f[2]);
  r.d = parse_integer(f[3]);
  r.beta = parse_double(f[4]);
  r.nrmse = parse_double(f[5]);
  r.support_f1 = parse_double(f[6]);
  r.setup_seconds = parse_double(f[7]);
  r.inference_seconds = parse_double(f[8]);
  r.total_seconds = parse_double(f[9]);
  r.total_cg_steps = parse_integer(f[10]);
  for (double s : split_numbers(f[11])) r.cg_steps.push_back(static_cast<int>(s));
  r.cg_residuals = split_numbers(f[12]);
  r.z_hat = to_vector(split_numbers(f[13]));
  r.z_true = to_vector(split_numbers(f[14]));
  r.error = f[15];
  return r;
}

SweepTable make_sweep_table(const sim::SweepSpec& spec, const sim::SweepResult& result) {
  SweepTable table;
  for (const auto& axis : spec.axes) table.parameters.emplace_back(sim::to_string(axis.parameter));
  const std::string method = sim::to_string(spec.base.method);
  for (const auto& rec : result.records) {
    SweepRow row;
    row.method = method;
    const auto& agg = result.aggregates.at(rec.cell);
    row.D = agg.D;
    row.N = agg.N;
    row.d = agg.d;
    row.values = rec.values;
    row.trial = rec.trial;
    if (rec.result.error.empty()) {
      row.nrmse = rec.result.nrmse;
      row.total_cg_steps = static_cast<double>(rec.result.total_cg_steps);
    } else {
      row.nrmse = std::numeric_limits<double>::quiet_NaN();
      row.total_cg_steps = std::numeric_limits<double>::quiet_NaN();
    }
    row.wall_seconds = rec.result.total_seconds;
    table.rows.push_back(std::move(row));
  }
  for (const auto& agg : result.aggregates) {
    SweepRow row;
    row.method = method;
    row.D = agg.D;
    row.N = agg.N;
    row.d = agg.d;
    row.values = agg.values;
    row.nrmse = agg.mean_nrmse;
    row.total_cg_steps = agg.mean_cg_steps;
    row.wall_seconds = agg.mean_seconds;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string sweep_to_csv(const SweepTable& table) {
  std::vector<std::string> header{"method", "D", "N", "d"};
  header.insert(header.end(), table.parameters.begin(), table.parameters.end());
  for (const char* c : {"trial", "nrmse", "total_cg_steps", "wall_seconds"}) header.emplace_back(c);
  std::string out = csv_line(header);
  for (const auto& row : table.rows) {
    std::vector<std::string> f{row.method, std::to_string(row.D), std::to_string(row.N),
                               std::to_string(row.d)};
    for (double v : row.values) f.push_back(format_double(v));
    f.push_back(row.trial ? std::to_string(*row.trial) : "mean");
    f.push_back(format_double(row.nrmse));
    f.push_back(format_double(row.total_cg_steps));
    f.push_back(format_double(row.wall_seconds));
    out += csv_line(f);
  }
  return out;
}

SweepTable sweep_from_csv(const std::string& text) {
  const auto rows = csv_parse(text);
  if (rows.empty()) throw ParseError("empty sweep CSV");
  const auto& header = rows[0];
  if (header.size() < 8 || header[0] != "method" || header[1] != "D" || header[2] != "N" ||
      header[3] != "d" || header[header.size() - 4] != "trial" ||
      header[header.size() - 3] != "nrmse" || header[header.size() - 2] != "total_cg_steps" ||
      header[header.size() - 1] != "wall_seconds") {
    throw ParseError("unexpected sweep CSV header");
  }
  SweepTable table;
  table.parameters.assign(header.begin() + 4, header.end() - 4);
  const std::size_t p = table.parameters.size();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != header.size()) throw ParseError(fmt::format("row {}: wrong number of fields", i));
    SweepRow row;
    row.method = f[0];
    row.D = parse_integer(f[1]);
    row.N = parse_integer(f[2]);
    row.d = parse_integer(f[3]);
    for (std::size_t k = 0; k < p; ++k) row.values.push_back(parse_double(f[4 + k]));
    if (f[4 + p] != "mean") row.trial = static_cast<int>(parse_integer(f[4 + p]));
    row.nrmse = parse_double(f[5 + p]);
    row.total_cg_steps = parse_double(f[6 + p]);
    row.wall_seconds = parse_double(f[7 + p]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string sweep_to_json(const sim::SweepSpec& spec, const sim::SweepResult& result) {
  json j;
  j["method"] = sim::to_string(spec.base.method);
  j["parameters"] = json::array();
  for (const auto& axis : spec.axes) j["parameters"].push_back(sim::to_string(axis.parameter));
  j["trials"] = spec.trials;
  j["records"] = json::array();
  for (const auto& rec : result.records) {
    j["records"].push_back({{"cell", rec.cell},
                            {"values", numbers(rec.values)},
                            {"trial", rec.trial},
                            {"result", result_object(rec.result)}});
  }
  j["aggregates"] = json::array();
  for (const auto& agg : result.aggregates) {
    j["aggregates"].push_back({{"cell", agg.cell},
                               {"values", numbers(agg.values)},
                               {"D", agg.D},
                               {"N", agg.N},
                               {"d", agg.d},
                               {"successful_trials", agg.successful_trials},
                               {"mean_nrmse", number(agg.mean_nrmse)},
                               {"mean_cg_steps", number(agg.mean_cg_steps)},
                               {"mean_seconds", number(agg.mean_seconds)}});
  }
  return j.dump(2) + '\n';
}

sim::SweepResult sweep_from_json(const std::string& text) {
  const json j = parse_json(text);
  return with_json_errors([&] {
    sim::SweepResult out;
    for (const auto& r : j.at("records")) {
      sim::SweepRecord rec;
      rec.cell = r.at("cell").get<std::size_t>();
      rec.values = read_numbers(r.at("values"));
      rec.trial = r.at("trial").get<int>();
      rec.result = result_from_object(r.at("result"));
      out.records.push_back(std::move(rec));
    }
    for (const auto& a : j.at("aggregates")) {
      sim::SweepAggregate agg;
      agg.cell = a.at("cell").get<std::size_t>();
      agg.values = read_numbers(a.at("values"));
      agg.D = a.at("D").get<Index>();
      agg.N = a.at("N").get<Index>();
      agg.d = a.at("d").get<Index>();
      agg.successful_trials = a.at("successful_trials").get<int>();
      agg.mean_nrmse = number(a.at("mean_nrmse"));
      agg.mean_cg_steps = number(a.at("mean_cg_steps"));
      agg.mean_seconds = number(a.at("mean_seconds"));
      out.aggregates.push_back(std::move(agg));
    }
    return out;
  });
}

std::string diagnostics_to_csv(const sim::ProbeDiagnostics& diag) {
  std::string out = csv_line({"K", "empirical_max_std", "exact_max_std", "limit_bound"});
  for (const auto& row : diag.rows) {
    out += csv_line({std::to_string(row.probes), format_double(row.empirical_max_std),
                     format_double(row.lemma_max_std), format_double(row.theorem_bound)});
  }
  return out;
}

std::string diagnostics_to_json(const sim::ProbeDiagnostics& diag) {
  json j;
  j["iterations"] = diag.iterations;
  j["support"] = diag.support;
  j["rows"] = json::array();
  for (const auto& row : diag.rows) {
    j["rows"].push_back({{"K", row.probes},
                         {"empirical_max_std", number(row.empirical_max_std)},
                         {"exact_max_std", number(row.lemma_max_std)},
                         {"limit_bound", number(row.theorem_bound)}});
  }
  return j.dump(2) + '\n';
}

sim::ProbeDiagnostics diagnostics_from_json(const std::string& text) {
  const json j = parse_json(text);
  return with_json_errors([&] {
    sim::ProbeDiagnostics diag;
    diag.iterations = j.at("iterations").get<int>();
    diag.support = j.at("support").get<std::vector<Index>>();
    for (const auto& r : j.at("rows")) {
      sim::ProbeDiagnosticsRow row;
      row.probes = r.at("K").get<Index>();
      row.empirical_max_std = number(r.at("empirical_max_std"));
      row.lemma_max_std = number(r.at("exact_max_std"));
      row.theorem_bound = number(r.at("limit_bound"));
      diag.rows.push_back(row);
    }
    return diag;
  });
}

}  // namespace sblcli
