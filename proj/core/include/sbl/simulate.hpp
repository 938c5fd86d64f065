#pragma once

#include "sbl/cofem.hpp"
#include "sbl/linop.hpp"
#include "sbl/problem.hpp"
#include "sbl/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sbl::simulate {

using linop::Index;
using linop::Matrix;
using linop::Vector;

struct DictionarySpec {
  linop::Kind kind = linop::Kind::UndersampledDct;
  Index size = 256;  ///< D
  /// N for DenseGaussian and UndersampledDct. When 0, N = ⌊D/rate⌋ (undersampling rate).
  Index rows = 0;
  double rate = 0.0;
  double decay = 0.04;  ///< ρ, ExpConvolution only (N = D)

  Index resolved_rows() const;
};

/// d is `count` when set, otherwise ⌊factor·D⌋.
struct SparsitySpec {
  std::optional<Index> count;
  double factor = 0.1;

  Index resolve(Index dimension) const;
};

enum class SpikeKind { Uniform, Normal, Exponential };

/// Law of the nonzero entries. `Normal` is parameterized by its variance and
/// `Exponential` by its rate (mean 1/rate).
struct SpikeLaw {
  SpikeKind kind = SpikeKind::Uniform;
  double low = -2.0;
  double high = 2.0;
  double variance = 5.0;
  double rate = 1.5;

  void validate() const;
};

enum class Method { Cofem, Em, Irls };

const char* to_string(Method method);
const char* to_string(SpikeKind kind);

struct ExperimentSpec {
  DictionarySpec dictionary;
  SparsitySpec sparsity;
  SpikeLaw spikes;
  double noise_sigma = 0.01;
  std::uint64_t seed = 0;
  Method method = Method::Cofem;
  /// Inference settings. `cofem.iterations` is also the EM iteration count.
  cofem::CofemConfig cofem;
  /// NonNegative CoFEM only: report the filtered mode at this percentile
  /// instead of the posterior mean.
  std::optional<double> filter_q;

  /// Throws DomainError naming the offending field.
  void validate() const;
};

struct ExperimentResult {
  Method method = Method::Cofem;
  Index D = 0;
  Index N = 0;
  Index d = 0;
  double beta = 0.0;
  double nrmse = 0.0;       ///< percent
  double support_f1 = 0.0;  ///< of the nonzero pattern of z_hat
  double setup_seconds = 0.0;
  double inference_seconds = 0.0;
  double total_seconds = 0.0;
  std::vector<int> cg_steps;           ///< per EM iteration (CoFEM only)
  std::vector<double> cg_residuals;    ///< per EM iteration (CoFEM only)
  long long total_cg_steps = 0;
  Vector z_hat;
  Vector z_true;
  /// Empty on success; the error message of a failed sweep cell otherwise.
  std::string error;
};

/// z* with d distinct coordinates, chosen uniformly, drawn from `law`.
Vector gen_signal(Index dimension, Index d, const SpikeLaw& law, Rng& rng);

struct Observation {
  Vector y;
  double beta;  ///< 1/σ²; +inf when σ = 0
};

/// y = Φz* + σε with ε standard normal.
Observation gen_observation(const linop::LinearOperator& op, const Vector& z_true, double sigma,
                            Rng& rng);

/// ‖ẑ − z*‖₂ / ‖z*‖₂ × 100. Throws DomainError when z* = 0.
double nrmse(const Vector& z_hat, const Vector& z_true);

/// F1 score of the support {j : |ẑ_j| > threshold} against {j : z*_j ≠ 0}.
/// Both empty counts as 1.
double support_f1(const Vector& z_hat, const Vector& z_true, double threshold = 0.0);

linop::LinearOperator build_dictionary(const DictionarySpec& spec, Rng& rng);

/// Generated data of one experiment. Every component draws from its own
/// stream of `spec.seed`, so inference settings never change the data.
struct Instance {
  SblProblem problem;
  Vector z_true;
};

Instance make_instance(const ExperimentSpec& spec);

/// Generates the instance and runs the selected method. Errors propagate.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Parameters a sweep may vary. `Preconditioned` takes 1 (AllOnes) or 0
/// (no preconditioner).
enum class SweepParameter {
  SparsityFactor,
  SparsityCount,
  Dimension,
  Rows,
  Rate,
  Decay,
  Probes,
  CgMaxSteps,
  CgTolerance,
  Iterations,
  NoiseSigma,
  Preconditioned,
};

const char* to_string(SweepParameter parameter);
std::optional<SweepParameter> parse_sweep_parameter(const std::string& name);

/// Returns `spec` with `parameter` set to `value`.
ExperimentSpec with_parameter(ExperimentSpec spec, SweepParameter parameter, double value);

struct SweepAxis {
  SweepParameter parameter;
  std::vector<double> values;
};

struct SweepSpec {
  ExperimentSpec base;
  std::vector<SweepAxis> axes;  ///< full Cartesian grid, first axis slowest
  int trials = 25;

  void validate() const;
};

struct SweepRecord {
  std::size_t cell = 0;
  std::vector<double> values;  ///< one per axis
  int trial = 0;
  ExperimentResult result;
};

struct SweepAggregate {
  std::size_t cell = 0;
  std::vector<double> values;
  Index D = 0;
  Index N = 0;
  Index d = 0;
  int successful_trials = 0;
  double mean_nrmse = 0.0;
  double mean_cg_steps = 0.0;
  double mean_seconds = 0.0;
};

struct SweepResult {
  std::vector<SweepRecord> records;  ///< ordered by (cell, trial)
  std::vector<SweepAggregate> aggregates;
};

/// Seed of trial `trial` in cell `cell`.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t cell, int trial);

/// Runs every (cell, trial) pair in parallel. A failing pair is recorded
/// with its error message and left out of the aggregate.
SweepResult run_sweep(const SweepSpec& spec);

std::vector<SweepAggregate> aggregate(const std::vector<SweepRecord>& records,
                                      std::size_t cells);

struct ProbeDiagnosticsRow {
  Index probes = 0;               ///< K
  double empirical_max_std = 0.0;  ///< max over S of the Monte-Carlo std of s_j
  double lemma_max_std = 0.0;      ///< max over S of the exact std ν_j
  double theorem_bound = 0.0;      ///< limiting active-index bound with Θ = I
};

struct ProbeDiagnostics {
  int iterations = 0;  ///< T at which α was taken
  std::vector<Index> support;  ///< S = {j : α_j < active_threshold}
  std::vector<ProbeDiagnosticsRow> rows;
};

/// Runs CoFEM on the instance of `spec`, sets every α_j >= active_threshold
/// to the clamp, materializes Σ and measures the diagonal estimator over
/// `repetitions` probe draws per K. Needs D <= em::kMaxDenseDimension.
ProbeDiagnostics probe_diagnostics(const ExperimentSpec& spec, std::span<const Index> probe_counts,
                                   int repetitions, double active_threshold = 1e3);

}  // namespace sbl::simulate
