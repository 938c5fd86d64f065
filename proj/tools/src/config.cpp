#include "sblcli/config.hpp"

#include "sbl/error.hpp"

#include <yaml-cpp/yaml.h>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace sblcli {

namespace sim = sbl::simulate;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ", ";
    out += item;
  }
  return out;
}

std::string format_error(const std::string& origin, int line, const std::string& message) {
  if (line > 0) return fmt::format("{}:{}: {}", origin, line, message);
  return fmt::format("{}: {}", origin, message);
}

class Reader {
 public:
  Reader(std::string origin, std::map<std::string, int>& lines)
      : origin_(std::move(origin)), lines_(lines) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& key,
                         const std::string& message) const {
    const int line = node.Mark().is_null() ? 0 : node.Mark().line + 1;
    throw ConfigError(origin_, line, key, key + ": " + message);
  }

  // Checks that `node` is a map holding only `allowed` keys and records the
  // line of every key.
  void check_map(const YAML::Node& node, const std::string& prefix,
                 const std::vector<std::string>& allowed) {
    if (!node.IsMap()) fail(node, prefix.empty() ? "<root>" : prefix, "expected a mapping");
    for (auto it = node.begin(); it != node.end(); ++it) {
      const std::string name = it->first.as<std::string>();
      const std::string key = prefix.empty() ? name : prefix + "." + name;
      if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
        fail(it->first, key, "unknown key (allowed: " + join(allowed) + ")");
      }
      lines_.emplace(key, it->first.Mark().line + 1);
    }
  }

  template <class T>
  T scalar(const YAML::Node& node, const std::string& key, const char* what) const {
    if (!node.IsScalar()) fail(node, key, std::string("expected ") + what);
    try {
      return node.as<T>();
    } catch (const YAML::BadConversion&) {
      fail(node, key, std::string("expected ") + what + ", got '" + node.Scalar() + "'");
    }
  }

  double real(const YAML::Node& node, const std::string& key) const {
    return scalar<double>(node, key, "a number");
  }

  long long integer(const YAML::Node& node, const std::string& key) const {
    return scalar<long long>(node, key, "an integer");
  }

  long long positive_integer(const YAML::Node& node, const std::string& key) const {
    const long long v = integer(node, key);
    if (v < 1) fail(node, key, "must be >= 1");
    return v;
  }

  bool boolean(const YAML::Node& node, const std::string& key) const {
    return scalar<bool>(node, key, "true or false");
  }

  std::string string(const YAML::Node& node, const std::string& key) const {
    return scalar<std::string>(node, key, "a string");
  }

  template <class E>
  E choice(const YAML::Node& node, const std::string& key,
           const std::vector<std::pair<std::string, E>>& options) const {
    const std::string value = string(node, key);
    std::vector<std::string> names;
    for (const auto& [name, e] : options) {
      if (name == value) return e;
      names.push_back(name);
    }
    fail(node, key, "unknown value '" + value + "' (expected one of: " + join(names) + ")");
  }

  std::vector<double> real_list(const YAML::Node& node, const std::string& key) const {
    if (node.IsScalar()) return {real(node, key)};
    if (!node.IsSequence() || node.size() == 0) fail(node, key, "expected a non-empty list of numbers");
    std::vector<double> out;
    for (const auto& item : node) out.push_back(real(item, key));
    return out;
  }

 private:
  std::string origin_;
  std::map<std::string, int>& lines_;
};

void read_dictionary(Reader& r, const YAML::Node& node, sim::DictionarySpec& dict) {
  r.check_map(node, "dictionary", {"kind", "D", "N", "r", "rho"});
  if (node["kind"]) {
    dict.kind = r.choice<sbl::linop::Kind>(node["kind"], "dictionary.kind",
                                           {{"dct", sbl::linop::Kind::UndersampledDct},
                                            {"gaussian", sbl::linop::Kind::DenseGaussian},
                                            {"convolution", sbl::linop::Kind::ExpConvolution}});
  }
  if (node["D"]) dict.size = r.integer(node["D"], "dictionary.D");
  if (node["N"] && node["r"]) r.fail(node["r"], "dictionary.r", "give either dictionary.N or dictionary.r");
  if (node["N"]) {
    dict.rows = r.integer(node["N"], "dictionary.N");
    if (dict.rows < 1) r.fail(node["N"], "dictionary.N", "must be >= 1");
  }
  if (node["r"]) dict.rate = r.real(node["r"], "dictionary.r");
  if (node["rho"]) dict.decay = r.real(node["rho"], "dictionary.rho");
}

void read_signal(Reader& r, const YAML::Node& node, sim::ExperimentSpec& spec) {
  r.check_map(node, "signal", {"d", "f", "spikes", "low", "high", "variance", "rate", "sigma"});
  if (node["d"] && node["f"]) r.fail(node["f"], "signal.f", "give either signal.d or signal.f");
  if (node["d"]) spec.sparsity.count = r.integer(node["d"], "signal.d");
  if (node["f"]) {
    spec.sparsity.count.reset();
    spec.sparsity.factor = r.real(node["f"], "signal.f");
  }
  if (node["spikes"]) {
    spec.spikes.kind = r.choice<sim::SpikeKind>(node["spikes"], "signal.spikes",
                                                {{"uniform", sim::SpikeKind::Uniform},
                                                 {"normal", sim::SpikeKind::Normal},
                                                 {"exponential", sim::SpikeKind::Exponential}});
  }
  if (node["low"]) spec.spikes.low = r.real(node["low"], "signal.low");
  if (node["high"]) spec.spikes.high = r.real(node["high"], "signal.high");
  if (node["variance"]) spec.spikes.variance = r.real(node["variance"], "signal.variance");
  if (node["rate"]) spec.spikes.rate = r.real(node["rate"], "signal.rate");
  if (node["sigma"]) spec.noise_sigma = r.real(node["sigma"], "signal.sigma");
}

void read_inference(Reader& r, const YAML::Node& node, sim::ExperimentSpec& spec) {
  r.check_map(node, "inference",
              {"method", "T", "K", "U", "tolerance", "preconditioner", "recurrence", "nonnegative",
               "filter_q", "clamp_max", "floor_eps", "share_probes"});
  auto& cfg = spec.cofem;
  if (node["method"]) {
    spec.method = r.choice<sim::Method>(node["method"], "inference.method",
                                        {{"cofem", sim::Method::Cofem},
                                         {"em", sim::Method::Em},
                                         {"irls", sim::Method::Irls}});
  }
  if (node["T"]) cfg.iterations = static_cast<int>(r.positive_integer(node["T"], "inference.T"));
  if (node["K"]) cfg.probes = static_cast<int>(r.positive_integer(node["K"], "inference.K"));
  if (node["U"]) cfg.cg.max_steps = static_cast<int>(r.positive_integer(node["U"], "inference.U"));
  if (node["tolerance"]) {
    cfg.cg.tolerance = r.real(node["tolerance"], "inference.tolerance");
    if (!(cfg.cg.tolerance > 0.0)) r.fail(node["tolerance"], "inference.tolerance", "must be > 0");
  }
  if (node["preconditioner"]) {
    cfg.cg.theta_policy = r.choice<sbl::cg::ThetaPolicy>(
        node["preconditioner"], "inference.preconditioner",
        {{"ones", sbl::cg::ThetaPolicy::AllOnes},
         {"jacobi", sbl::cg::ThetaPolicy::Jacobi},
         {"none", sbl::cg::ThetaPolicy::None}});
  }
  if (node["recurrence"]) {
    cfg.cg.recurrence = r.choice<sbl::cg::Recurrence>(
        node["recurrence"], "inference.recurrence",
        {{"standard", sbl::cg::Recurrence::Standard},
         {"as_printed", sbl::cg::Recurrence::AsPrinted}});
  }
  if (node["nonnegative"]) {
    cfg.variant = r.boolean(node["nonnegative"], "inference.nonnegative")
                      ? sbl::cofem::Variant::NonNegative
                      : sbl::cofem::Variant::Standard;
  }
  if (node["filter_q"]) spec.filter_q = r.real(node["filter_q"], "inference.filter_q");
  if (node["clamp_max"]) {
    cfg.clamp_max = r.real(node["clamp_max"], "inference.clamp_max");
    if (!(cfg.clamp_max > 0.0)) r.fail(node["clamp_max"], "inference.clamp_max", "must be > 0");
  }
  if (node["floor_eps"]) {
    cfg.floor_eps = r.real(node["floor_eps"], "inference.floor_eps");
    if (!(cfg.floor_eps > 0.0)) r.fail(node["floor_eps"], "inference.floor_eps", "must be > 0");
  }
  if (node["share_probes"]) {
    cfg.share_probes_across_tasks = r.boolean(node["share_probes"], "inference.share_probes");
  }
}

sim::SweepAxis read_axis(Reader& r, const YAML::Node& parameter, const YAML::Node& grid,
                         const std::string& prefix) {
  const std::string name = r.string(parameter, prefix + "parameter");
  const auto p = sim::parse_sweep_parameter(name);
  if (!p) {
    r.fail(parameter, prefix + "parameter",
           "unknown sweep parameter '" + name +
               "' (expected one of: f, d, D, N, r, rho, K, U, tolerance, T, sigma, preconditioned)");
  }
  return {*p, r.real_list(grid, prefix + "grid")};
}

void read_sweep(Reader& r, const YAML::Node& node, SweepBlock& sweep) {
  r.check_map(node, "sweep", {"trials", "parameter", "grid", "axes"});
  if (node["trials"]) sweep.trials = static_cast<int>(r.positive_integer(node["trials"], "sweep.trials"));
  const bool single = node["parameter"] || node["grid"];
  if (single && node["axes"]) r.fail(node["axes"], "sweep.axes", "give either sweep.parameter/grid or sweep.axes");
  if (single) {
    if (!node["parameter"]) r.fail(node, "sweep.parameter", "missing");
    if (!node["grid"]) r.fail(node, "sweep.grid", "missing");
    sweep.axes.push_back(read_axis(r, node["parameter"], node["grid"], "sweep."));
  } else if (node["axes"]) {
    const auto& axes = node["axes"];
    if (!axes.IsSequence() || axes.size() == 0) r.fail(axes, "sweep.axes", "expected a non-empty list");
    for (const auto& axis : axes) {
      r.check_map(axis, "sweep.axes", {"parameter", "grid"});
      if (!axis["parameter"]) r.fail(axis, "sweep.axes.parameter", "missing");
      if (!axis["grid"]) r.fail(axis, "sweep.axes.grid", "missing");
      sweep.axes.push_back(read_axis(r, axis["parameter"], axis["grid"], "sweep.axes."));
    }
  } else {
    r.fail(node, "sweep.parameter", "missing");
  }
}

void read_diag_probes(Reader& r, const YAML::Node& node, DiagProbesBlock& diag) {
  r.check_map(node, "diag_probes", {"K", "repetitions", "active_threshold"});
  if (node["K"]) {
    diag.probes.clear();
    for (double k : r.real_list(node["K"], "diag_probes.K")) {
      if (!(k >= 1.0) || std::floor(k) != k) r.fail(node["K"], "diag_probes.K", "entries must be integers >= 1");
      diag.probes.push_back(static_cast<Index>(k));
    }
  }
  if (node["repetitions"]) {
    diag.repetitions = static_cast<int>(r.integer(node["repetitions"], "diag_probes.repetitions"));
    if (diag.repetitions < 2) r.fail(node["repetitions"], "diag_probes.repetitions", "must be >= 2");
  }
  if (node["active_threshold"]) {
    diag.active_threshold = r.real(node["active_threshold"], "diag_probes.active_threshold");
    if (!(diag.active_threshold > 0.0)) {
      r.fail(node["active_threshold"], "diag_probes.active_threshold", "must be > 0");
    }
  }
}

// Line of the config key named at the start of a validation message.
int line_for_message(const RunConfig& config, const std::string& message) {
  std::string key = message.substr(0, message.find_first_of(" :"));
  while (!key.empty()) {
    if (auto it = config.key_lines.find(key); it != config.key_lines.end()) return it->second;
    const auto dot = key.rfind('.');
    if (dot == std::string::npos) break;
    key.resize(dot);
  }
  return 0;
}

}  // namespace

const char* to_string(Format format) { return format == Format::Json ? "json" : "csv"; }

std::optional<Format> parse_format(const std::string& name) {
  if (name == "json") return Format::Json;
  if (name == "csv") return Format::Csv;
  return std::nullopt;
}

ConfigError::ConfigError(std::string origin, int line, std::string key, const std::string& message)
    : std::runtime_error(format_error(origin, line, message)), key_(std::move(key)), line_(line) {}

sim::SweepSpec RunConfig::sweep_spec() const {
  sim::SweepSpec out;
  out.base = spec;
  if (sweep) {
    out.axes = sweep->axes;
    out.trials = sweep->trials;
  }
  return out;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig config;
  config.origin = origin;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin, e.mark.line + 1, "", "YAML syntax error: " + e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError(origin, 0, "", "empty configuration");

  Reader r(origin, config.key_lines);
  r.check_map(root, "",
              {"seed", "output", "format", "dictionary", "signal", "inference", "sweep", "diag_probes"});
  if (root["seed"]) {
    const long long seed = r.integer(root["seed"], "seed");
    if (seed < 0) r.fail(root["seed"], "seed", "must be >= 0");
    config.spec.seed = static_cast<std::uint64_t>(seed);
  }
  if (root["output"]) config.output = r.string(root["output"], "output");
  if (root["format"]) {
    config.format = r.choice<Format>(root["format"], "format", {{"json", Format::Json}, {"csv", Format::Csv}});
  }
  if (root["dictionary"]) read_dictionary(r, root["dictionary"], config.spec.dictionary);
  if (root["signal"]) read_signal(r, root["signal"], config.spec);
  if (root["inference"]) read_inference(r, root["inference"], config.spec);
  if (root["sweep"]) read_sweep(r, root["sweep"], config.sweep.emplace());
  if (root["diag_probes"]) read_diag_probes(r, root["diag_probes"], config.diag_probes.emplace());
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot read config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

void validate(const RunConfig& config) {
  try {
    config.spec.validate();
    if (!config.sweep) return;
    const auto sweep = config.sweep_spec();
    sweep.validate();
    // Every grid cell must be a valid experiment on its own.
    std::size_t cells = 1;
    for (const auto& axis : sweep.axes) cells *= axis.values.size();
    for (std::size_t cell = 0; cell < cells; ++cell) {
      auto spec = sweep.base;
      std::size_t rest = cell;
      for (auto axis = sweep.axes.rbegin(); axis != sweep.axes.rend(); ++axis) {
        const std::size_t k = rest % axis->values.size();
        rest /= axis->values.size();
        spec = sim::with_parameter(spec, axis->parameter, axis->values[k]);
      }
      spec.validate();
    }
  } catch (const sbl::DomainError& e) {
    const std::string message = e.what();
    const int line = line_for_message(config, message);
    throw ConfigError(config.origin, line, message.substr(0, message.find(' ')), message);
  }
}

}  // namespace sblcli
