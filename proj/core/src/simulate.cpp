#include "sbl/simulate.hpp"

#include "sbl/em_baseline.hpp"
#include "sbl/error.hpp"
#include "sbl/parallel.hpp"
#include "sbl/probes.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace sbl::simulate {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw DomainError(message);
}

Index as_index(double value, const char* name) {
  require(std::isfinite(value) && value >= 0.0 && std::floor(value) == value,
          std::string("sweep value for ") + name + " must be a non-negative integer");
  return static_cast<Index>(value);
}

}  // namespace

Index DictionarySpec::resolved_rows() const {
  if (kind == linop::Kind::ExpConvolution) return size;
  if (rows > 0) return rows;
  return static_cast<Index>(std::floor(static_cast<double>(size) / rate));
}

Index SparsitySpec::resolve(Index dimension) const {
  if (count) return *count;
  return static_cast<Index>(std::floor(factor * static_cast<double>(dimension)));
}

void SpikeLaw::validate() const {
  switch (kind) {
    case SpikeKind::Uniform:
      require(std::isfinite(low) && std::isfinite(high) && low < high,
              "signal.low must be below signal.high");
      break;
    case SpikeKind::Normal:
      require(variance > 0.0 && std::isfinite(variance), "signal.variance must be positive");
      break;
    case SpikeKind::Exponential:
      require(rate > 0.0 && std::isfinite(rate), "signal.rate must be positive");
      break;
  }
}

const char* to_string(Method method) {
  switch (method) {
    case Method::Cofem: return "cofem";
    case Method::Em: return "em";
    case Method::Irls: return "irls";
  }
  return "?";
}

const char* to_string(SpikeKind kind) {
  switch (kind) {
    case SpikeKind::Uniform: return "uniform";
    case SpikeKind::Normal: return "normal";
    case SpikeKind::Exponential: return "exponential";
  }
  return "?";
}

void ExperimentSpec::validate() const {
  const Index dim = dictionary.size;
  require(dim >= 1, "dictionary.D must be >= 1");
  if (dictionary.kind == linop::Kind::ExplicitDense) {
    throw DomainError("dictionary.kind: explicit matrices cannot be simulated");
  }
  if (dictionary.kind == linop::Kind::ExpConvolution) {
    require(dictionary.decay > 0.0 && dictionary.decay < 1.0, "dictionary.rho must lie in (0, 1)");
  } else {
    require(dictionary.rows > 0 || (dictionary.rate >= 1.0 && std::isfinite(dictionary.rate)),
            "dictionary.N must be >= 1 (or dictionary.r >= 1)");
    const Index rows = dictionary.resolved_rows();
    require(rows >= 1, "dictionary.N resolves to 0 rows");
    require(rows <= dim, "dictionary.N must not exceed dictionary.D");
  }
  if (sparsity.count) {
    require(*sparsity.count >= 0, "signal.d must be >= 0");
  } else {
    require(sparsity.factor >= 0.0 && sparsity.factor <= 1.0, "signal.f must lie in [0, 1]");
  }
  const Index d = sparsity.resolve(dim);
  require(d <= dim, "signal.d must not exceed dictionary.D");
  require(d >= 1, "signal sparsity resolves to d = 0, so NRMSE is undefined");
  spikes.validate();
  require(noise_sigma > 0.0 && std::isfinite(noise_sigma), "signal.sigma must be positive");
  require(std::isfinite(1.0 / (noise_sigma * noise_sigma)),
          "signal.sigma is too small: the noise precision 1/sigma^2 overflows");
  if (method != Method::Cofem) {
    require(dim <= em::kMaxDenseDimension,
            std::string("inference.method ") + to_string(method) + " requires D <= " +
                std::to_string(em::kMaxDenseDimension) + " (dense baseline guard)");
    require(cofem.variant == cofem::Variant::Standard,
            "inference.nonnegative is only supported by method cofem");
  }
  if (filter_q) {
    require(*filter_q > 0.0 && *filter_q < 1.0, "inference.filter_q must lie in (0, 1)");
    require(cofem.variant == cofem::Variant::NonNegative,
            "inference.filter_q requires the non-negative variant");
  }
  cofem.validate();
}

Vector gen_signal(Index dimension, Index d, const SpikeLaw& law, Rng& rng) {
  if (d < 0 || d > dimension) {
    throw DomainError("gen_signal: need 0 <= d <= D, got d = " + std::to_string(d));
  }
  law.validate();
  std::vector<Index> positions(static_cast<std::size_t>(dimension));
  std::iota(positions.begin(), positions.end(), Index{0});
  for (Index k = 0; k < d; ++k) {
    std::uniform_int_distribution<Index> pick(k, dimension - 1);
    std::swap(positions[static_cast<std::size_t>(k)],
              positions[static_cast<std::size_t>(pick(rng))]);
  }

  Vector z = Vector::Zero(dimension);
  std::uniform_real_distribution<double> uniform(law.low, law.high);
  std::normal_distribution<double> normal(0.0, std::sqrt(law.variance));
  std::exponential_distribution<double> exponential(law.rate);
  for (Index k = 0; k < d; ++k) {
    double value = 0.0;
    switch (law.kind) {
      case SpikeKind::Uniform: value = uniform(rng); break;
      case SpikeKind::Normal: value = normal(rng); break;
      case SpikeKind::Exponential:
        // The exponential law has an atom-free density, but a zero draw
        // would silently shrink the support.
        do value = exponential(rng);
        while (value == 0.0);
        break;
    }
    z[positions[static_cast<std::size_t>(k)]] = value;
  }
  return z;
}

Observation gen_observation(const linop::LinearOperator& op, const Vector& z_true, double sigma,
                            Rng& rng) {
  require_shape("gen_observation signal", {op.cols(), 1}, {z_true.rows(), z_true.cols()});
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw DomainError("gen_observation: sigma must be finite and >= 0");
  }
  Observation obs;
  obs.y = op.apply(z_true);
  std::normal_distribution<double> normal(0.0, 1.0);
  if (sigma > 0.0) {
    for (Index i = 0; i < obs.y.size(); ++i) obs.y[i] += sigma * normal(rng);
  }
  obs.beta = 1.0 / (sigma * sigma);
  return obs;
}

double nrmse(const Vector& z_hat, const Vector& z_true) {
  require_shape("nrmse", {z_true.size(), 1}, {z_hat.rows(), z_hat.cols()});
  const double norm = z_true.norm();
  if (norm == 0.0) throw DomainError("nrmse: ground truth is the zero vector");
  return 100.0 * (z_hat - z_true).norm() / norm;
}

double support_f1(const Vector& z_hat, const Vector& z_true, double threshold) {
  require_shape("support_f1", {z_true.size(), 1}, {z_hat.rows(), z_hat.cols()});
  Index tp = 0, predicted = 0, actual = 0;
  for (Index j = 0; j < z_true.size(); ++j) {
    const bool p = std::abs(z_hat[j]) > threshold;
    const bool a = z_true[j] != 0.0;
    predicted += p;
    actual += a;
    tp += p && a;
  }
  if (predicted == 0 && actual == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(predicted + actual);
}

linop::LinearOperator build_dictionary(const DictionarySpec& spec, Rng& rng) {
  switch (spec.kind) {
    case linop::Kind::DenseGaussian:
      return linop::build_dense_gaussian(spec.resolved_rows(), spec.size, rng);
    case linop::Kind::UndersampledDct:
      return linop::build_undersampled_dct(spec.size, spec.resolved_rows(), rng);
    case linop::Kind::ExpConvolution:
      return linop::build_exp_convolution(spec.size, spec.decay);
    case linop::Kind::ExplicitDense:
      break;
  }
  throw DomainError("build_dictionary: explicit matrices have no generator");
}

Instance make_instance(const ExperimentSpec& spec) {
  spec.validate();
  Rng dict_rng = make_rng(spec.seed, Stream::Dictionary);
  Rng signal_rng = make_rng(spec.seed, Stream::Signal);
  Rng noise_rng = make_rng(spec.seed, Stream::Noise);

  auto op = build_dictionary(spec.dictionary, dict_rng);
  Vector z = gen_signal(spec.dictionary.size, spec.sparsity.resolve(spec.dictionary.size),
                        spec.spikes, signal_rng);
  auto obs = gen_observation(op, z, spec.noise_sigma, noise_rng);
  return Instance{SblProblem{std::move(obs.y), std::move(op), obs.beta}, std::move(z)};
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const auto start = Clock::now();
  Instance inst = make_instance(spec);

  ExperimentResult result;
  result.method = spec.method;
  result.D = inst.problem.op.cols();
  result.N = inst.problem.op.rows();
  result.d = static_cast<Index>((inst.z_true.array() != 0.0).count());
  result.beta = inst.problem.beta;
  result.setup_seconds = seconds_since(start);

  const auto infer_start = Clock::now();
  if (spec.method == Method::Cofem) {
    cofem::CofemConfig cfg = spec.cofem;
    cfg.seed = spec.seed;
    const auto run = cofem::run_cofem(inst.problem, cfg);
    for (const auto& diag : run.diagnostics) {
      result.cg_steps.push_back(diag.cg_steps);
      result.cg_residuals.push_back(diag.cg_relative_residual);
      result.total_cg_steps += diag.cg_steps;
    }
    if (spec.filter_q) {
      result.z_hat = cofem::filtered_mode(inst.problem, run.state, run.estimate, *spec.filter_q).z;
    } else {
      result.z_hat = run.estimate.mu;
    }
  } else {
    em::EmConfig cfg;
    cfg.iterations = spec.cofem.iterations;
    cfg.route = spec.method == Method::Em ? em::Route::Dense : em::Route::Woodbury;
    cfg.clamp_max = spec.cofem.clamp_max;
    cfg.floor_eps = spec.cofem.floor_eps;
    result.z_hat = em::run_em(inst.problem, cfg).posterior.mu;
  }
  result.inference_seconds = seconds_since(infer_start);

  result.nrmse = nrmse(result.z_hat, inst.z_true);
  result.support_f1 = support_f1(result.z_hat, inst.z_true);
  result.z_true = std::move(inst.z_true);
  result.total_seconds = seconds_since(start);
  return result;
}

const char* to_string(SweepParameter parameter) {
  switch (parameter) {
    case SweepParameter::SparsityFactor: return "f";
    case SweepParameter::SparsityCount: return "d";
    case SweepParameter::Dimension: return "D";
    case SweepParameter::Rows: return "N";
    case SweepParameter::Rate: return "r";
    case SweepParameter::Decay: return "rho";
    case SweepParameter::Probes: return "K";
    case SweepParameter::CgMaxSteps: return "U";
    case SweepParameter::CgTolerance: return "tolerance";
    case SweepParameter::Iterations: return "T";
    case SweepParameter::NoiseSigma: return "sigma";
    case SweepParameter::Preconditioned: return "preconditioned";
  }
  return "?";
}

std::optional<SweepParameter> parse_sweep_parameter(const std::string& name) {
  for (auto p : {SweepParameter::SparsityFactor, SweepParameter::SparsityCount,
                 SweepParameter::Dimension, SweepParameter::Rows, SweepParameter::Rate,
                 SweepParameter::Decay, SweepParameter::Probes, SweepParameter::CgMaxSteps,
                 SweepParameter::CgTolerance, SweepParameter::Iterations,
                 SweepParameter::NoiseSigma, SweepParameter::Preconditioned}) {
    if (name == to_string(p)) return p;
  }
  return std::nullopt;
}

ExperimentSpec with_parameter(ExperimentSpec spec, SweepParameter parameter, double value) {
  switch (parameter) {
    case SweepParameter::SparsityFactor:
      spec.sparsity.count.reset();
      spec.sparsity.factor = value;
      break;
    case SweepParameter::SparsityCount:
      spec.sparsity.count = as_index(value, "d");
      break;
    case SweepParameter::Dimension:
      spec.dictionary.size = as_index(value, "D");
      break;
    case SweepParameter::Rows:
      spec.dictionary.rows = as_index(value, "N");
      break;
    case SweepParameter::Rate:
      spec.dictionary.rows = 0;
      spec.dictionary.rate = value;
      break;
    case SweepParameter::Decay:
      spec.dictionary.decay = value;
      break;
    case SweepParameter::Probes:
      spec.cofem.probes = static_cast<int>(as_index(value, "K"));
      break;
    case SweepParameter::CgMaxSteps:
      spec.cofem.cg.max_steps = static_cast<int>(as_index(value, "U"));
      break;
    case SweepParameter::CgTolerance:
      spec.cofem.cg.tolerance = value;
      break;
    case SweepParameter::Iterations:
      spec.cofem.iterations = static_cast<int>(as_index(value, "T"));
      break;
    case SweepParameter::NoiseSigma:
      spec.noise_sigma = value;
      break;
    case SweepParameter::Preconditioned:
      require(value == 0.0 || value == 1.0, "sweep value for preconditioned must be 0 or 1");
      spec.cofem.cg.theta_policy = value == 1.0 ? cg::ThetaPolicy::AllOnes : cg::ThetaPolicy::None;
      break;
  }
  return spec;
}

void SweepSpec::validate() const {
  require(trials >= 1, "sweep.trials must be >= 1");
  require(!axes.empty(), "sweep.parameter must name at least one parameter");
  for (const auto& axis : axes) {
    require(!axis.values.empty(),
            std::string("sweep.grid for ") + to_string(axis.parameter) + " has no values");
  }
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t cell, int trial) {
  return derive_seed(seed, Stream::Sweep, cell, static_cast<std::uint64_t>(trial));
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();

  std::size_t cells = 1;
  for (const auto& axis : spec.axes) cells *= axis.values.size();

  std::vector<std::vector<double>> cell_values(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t rest = c;
    cell_values[c].resize(spec.axes.size());
    for (std::size_t a = spec.axes.size(); a-- > 0;) {
      const auto& values = spec.axes[a].values;
      cell_values[c][a] = values[rest % values.size()];
      rest /= values.size();
    }
  }

  const auto trials = static_cast<std::size_t>(spec.trials);
  SweepResult out;
  out.records.resize(cells * trials);
  parallel_for(static_cast<std::int64_t>(cells * trials), [&](std::int64_t i) {
    const auto idx = static_cast<std::size_t>(i);
    SweepRecord& rec = out.records[idx];
    rec.cell = idx / trials;
    rec.trial = static_cast<int>(idx % trials);
    rec.values = cell_values[rec.cell];
    try {
      ExperimentSpec cell = spec.base;
      for (std::size_t a = 0; a < spec.axes.size(); ++a) {
        cell = with_parameter(std::move(cell), spec.axes[a].parameter, rec.values[a]);
      }
      cell.seed = trial_seed(spec.base.seed, rec.cell, rec.trial);
      rec.result = run_experiment(cell);
    } catch (const std::exception& err) {
      rec.result = ExperimentResult{};
      rec.result.method = spec.base.method;
      rec.result.error = err.what();
    }
  });
  out.aggregates = aggregate(out.records, cells);
  return out;
}

std::vector<SweepAggregate> aggregate(const std::vector<SweepRecord>& records, std::size_t cells) {
  std::vector<SweepAggregate> aggs(cells);
  for (std::size_t c = 0; c < cells; ++c) aggs[c].cell = c;
  for (const auto& rec : records) {
    if (rec.cell >= cells) throw DomainError("aggregate: record cell index out of range");
    auto& agg = aggs[rec.cell];
    agg.values = rec.values;
    if (!rec.result.error.empty()) continue;
    if (agg.successful_trials == 0) {
      agg.D = rec.result.D;
      agg.N = rec.result.N;
      agg.d = rec.result.d;
    }
    ++agg.successful_trials;
    agg.mean_nrmse += rec.result.nrmse;
    agg.mean_cg_steps += static_cast<double>(rec.result.total_cg_steps);
    agg.mean_seconds += rec.result.total_seconds;
  }
  for (auto& agg : aggs) {
    if (agg.successful_trials == 0) {
      agg.mean_nrmse = agg.mean_cg_steps = agg.mean_seconds = std::nan("");
      continue;
    }
    const double n = agg.successful_trials;
    agg.mean_nrmse /= n;
    agg.mean_cg_steps /= n;
    agg.mean_seconds /= n;
  }
  return aggs;
}

ProbeDiagnostics probe_diagnostics(const ExperimentSpec& spec, std::span<const Index> probe_counts,
                                   int repetitions, double active_threshold) {
  spec.validate();
  require(spec.method == Method::Cofem, "inference.method must be cofem for probe diagnostics");
  require(repetitions >= 2, "diag_probes.repetitions must be >= 2");
  require(!probe_counts.empty(), "diag_probes.K must not be empty");
  for (Index k : probe_counts) require(k >= 1, "diag_probes.K entries must be >= 1");
  require(active_threshold > 0.0, "diag_probes.active_threshold must be positive");
  const Index D = spec.dictionary.size;
  require(D <= em::kMaxDenseDimension,
          "dictionary.D must be <= " + std::to_string(em::kMaxDenseDimension) +
              " for probe diagnostics (dense covariance)");

  const Instance inst = make_instance(spec);
  auto cfg = spec.cofem;
  cfg.seed = spec.seed;
  const auto run = cofem::run_cofem(inst.problem, cfg);
  // Inactive precisions are pushed to the clamp, as they would be in the
  // limit of many iterations.
  Vector alpha = run.state.alpha;
  ProbeDiagnostics out;
  out.iterations = cfg.iterations;
  for (Index j = 0; j < D; ++j) {
    if (alpha[j] < active_threshold) {
      out.support.push_back(j);
    } else {
      alpha[j] = cfg.clamp_max;
    }
  }

  Matrix A = linop::SystemMatrix(inst.problem.op, inst.problem.beta, alpha).materialize();
  const Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("simulate", "covariance factorization failed in probe diagnostics");
  }
  const Matrix sigma = llt.solve(Matrix::Identity(D, D));
  const Matrix phi_s = inst.problem.op.columns(out.support);

  for (Index K : probe_counts) {
    ProbeDiagnosticsRow row;
    row.probes = K;
    const Vector nu = probes::rademacher_std(sigma, K);
    // Welford updates; a raw sum of squares cancels badly when the spread is
    // tiny next to the mean.
    Vector mean = Vector::Zero(D), m2 = Vector::Zero(D);
    Rng rng = make_rng(spec.seed, Stream::Diagnostics, static_cast<std::uint64_t>(K));
    for (int r = 0; r < repetitions; ++r) {
      const auto P = probes::draw_rademacher(D, K, rng);
      const Vector s = probes::estimate_diagonal_rademacher(P, sigma * P.values).s;
      const Vector delta = s - mean;
      mean += delta / static_cast<double>(r + 1);
      m2 += delta.cwiseProduct(s - mean);
    }
    const Vector var = (m2 / static_cast<double>(repetitions - 1)).cwiseMax(0.0);
    for (Index j : out.support) {
      row.empirical_max_std = std::max(row.empirical_max_std, std::sqrt(var[j]));
      row.lemma_max_std = std::max(row.lemma_max_std, nu[j]);
    }
    row.theorem_bound = probes::active_std_bound(phi_s, inst.problem.beta, K);
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace sbl::simulate
