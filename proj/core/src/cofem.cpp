#include "sbl/cofem.hpp"

#include "sbl/error.hpp"
#include "sbl/probes.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace sbl::cofem {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_alpha(const PrecisionState& state, Index dimension) {
  if (state.alpha.size() != dimension) {
    throw DimensionError("PrecisionState alpha", {dimension, 1}, {state.alpha.size(), 1});
  }
}

// Right-hand side [p_1 | ... | p_K | βΦᵀy].
Matrix build_rhs(const SblProblem& problem, const probes::ProbeMatrix& probes) {
  const Index dim = problem.dimension();
  const Index count = probes.count();
  Matrix rhs(dim, count + 1);
  rhs.leftCols(count) = probes.values;
  rhs.col(count) = problem.beta * problem.op.apply_adjoint(problem.y);
  return rhs;
}

PosteriorEstimate unpack(const probes::ProbeMatrix& probes, cg::CgReport report) {
  const Index count = probes.count();
  PosteriorEstimate est;
  est.mu = report.solution.col(count);
  est.s = probes::estimate_diagonal_rademacher(probes, report.solution.leftCols(count)).s;
  est.cg_report = std::move(report);
  return est;
}

Vector second_moment(const PosteriorEstimate& est, Variant variant, double floor_eps) {
  return variant == Variant::Standard ? gaussian_second_moment(est.mu, est.s)
                                      : rectified_second_moment(est.mu, est.s, floor_eps);
}

[[noreturn]] void rethrow_with_iteration(const NumericalError& err, int iteration) {
  throw NumericalError("cofem", "E-step of EM iteration " + std::to_string(iteration) +
                                    " failed: " + err.module() + ": " + err.detail(),
                       err.step());
}

}  // namespace

void CofemConfig::validate() const {
  if (iterations < 1) throw DomainError("CofemConfig: iterations must be >= 1");
  if (probes < 1) throw DomainError("CofemConfig: probes must be >= 1");
  if (!(clamp_max > 0.0) || !(floor_eps > 0.0)) {
    throw DomainError("CofemConfig: clamp_max and floor_eps must be positive");
  }
  cg.validate();
}

Rng probe_rng(std::uint64_t seed, int iteration, std::size_t task) {
  return make_rng(seed, Stream::Probes, static_cast<std::uint64_t>(iteration), task);
}

PosteriorEstimate e_step(const SblProblem& problem, const PrecisionState& state,
                         const CofemConfig& cfg, Rng& rng) {
  problem.validate();
  cfg.validate();
  require_alpha(state, problem.dimension());

  const auto probes = probes::draw_rademacher(problem.dimension(), cfg.probes, rng);
  const Matrix rhs = build_rhs(problem, probes);
  const linop::SystemMatrix system(problem.op, problem.beta, state.alpha);
  const auto pre = cg::make_preconditioner(cfg.cg.theta_policy, problem.op, problem.beta,
                                           state.alpha, cfg.cg.custom_theta);
  try {
    return unpack(probes, cg::solve(system, rhs, pre, cfg.cg));
  } catch (const NumericalError& err) {
    rethrow_with_iteration(err, state.iteration);
  }
}

PrecisionState m_step(const PosteriorEstimate& est, const PrecisionState& state) {
  return state.updated(gaussian_second_moment(est.mu, est.s));
}

PrecisionState m_step_nonneg(const PosteriorEstimate& est, const PrecisionState& state) {
  return state.updated(rectified_second_moment(est.mu, est.s, state.floor_eps));
}

CofemResult run_cofem(const SblProblem& problem, const CofemConfig& cfg,
                      const IterationObserver& observer) {
  problem.validate();
  cfg.validate();

  CofemResult result;
  result.state = PrecisionState::initial(problem.dimension(), cfg.clamp_max, cfg.floor_eps);
  result.diagnostics.reserve(static_cast<std::size_t>(cfg.iterations));

  for (int t = 1; t <= cfg.iterations; ++t) {
    const auto start = Clock::now();
    Rng rng = probe_rng(cfg.seed, t, 0);
    result.estimate = e_step(problem, result.state, cfg, rng);
    const auto& report = result.estimate.cg_report;
    result.diagnostics.push_back({t, report.steps_taken, report.final_relative_residual,
                                  report.converged, seconds_since(start)});
    if (observer) observer(result.state, std::span<const PosteriorEstimate>(&result.estimate, 1));
    if (t < cfg.iterations) {
      result.state = cfg.variant == Variant::Standard ? m_step(result.estimate, result.state)
                                                      : m_step_nonneg(result.estimate, result.state);
    }
  }
  return result;
}

MultiTaskResult run_cofem_multitask(const MultiTaskProblem& problem, const CofemConfig& cfg,
                                    const IterationObserver& observer) {
  problem.validate();
  cfg.validate();

  const std::size_t task_count = problem.tasks.size();
  const Index dim = problem.dimension();
  const Index width = cfg.probes + 1;

  MultiTaskResult result;
  result.state = PrecisionState::initial(dim, cfg.clamp_max, cfg.floor_eps);
  result.estimates.resize(task_count);

  std::vector<SblProblem> tasks;
  for (std::size_t l = 0; l < task_count; ++l) tasks.push_back(problem.task_problem(l));

  for (int t = 1; t <= cfg.iterations; ++t) {
    const auto start = Clock::now();

    std::vector<probes::ProbeMatrix> task_probes;
    std::vector<linop::SystemMatrix> systems;
    std::vector<cg::Preconditioner> preconditioners;
    Matrix rhs(dim, width * static_cast<Index>(task_count));
    for (std::size_t l = 0; l < task_count; ++l) {
      Rng rng = probe_rng(cfg.seed, t, cfg.share_probes_across_tasks ? 0 : l);
      task_probes.push_back(probes::draw_rademacher(dim, cfg.probes, rng));
      rhs.middleCols(width * static_cast<Index>(l), width) = build_rhs(tasks[l], task_probes[l]);
      systems.emplace_back(tasks[l].op, problem.beta, result.state.alpha);
      preconditioners.push_back(cg::make_preconditioner(cfg.cg.theta_policy, tasks[l].op,
                                                        problem.beta, result.state.alpha,
                                                        cfg.cg.custom_theta));
    }
    std::vector<cg::SystemBlock> blocks;
    for (std::size_t l = 0; l < task_count; ++l) {
      blocks.push_back({systems[l], preconditioners[l], width});
    }

    cg::CgReport report;
    try {
      report = cg::solve_blocks(blocks, rhs, cfg.cg);
    } catch (const NumericalError& err) {
      rethrow_with_iteration(err, t);
    }

    Vector moment_sum = Vector::Zero(dim);
    for (std::size_t l = 0; l < task_count; ++l) {
      cg::CgReport task_report;
      task_report.solution = report.solution.middleCols(width * static_cast<Index>(l), width);
      task_report.steps_taken = report.steps_taken;
      task_report.final_relative_residual = report.final_relative_residual;
      task_report.converged = report.converged;
      for (Index q : report.frozen_columns) {
        if (q / width == static_cast<Index>(l)) task_report.frozen_columns.push_back(q % width);
      }
      result.estimates[l] = unpack(task_probes[l], std::move(task_report));
      moment_sum += second_moment(result.estimates[l], cfg.variant, result.state.floor_eps);
    }

    result.diagnostics.push_back({t, report.steps_taken, report.final_relative_residual,
                                  report.converged, seconds_since(start)});
    if (observer) observer(result.state, result.estimates);
    if (t < cfg.iterations) {
      result.state = result.state.updated(moment_sum, static_cast<double>(task_count));
    }
  }
  return result;
}

double zero_probability(double mu, double variance, double floor_eps) {
  const double s = std::max(variance, floor_eps);
  return 0.5 * std::erfc(mu / std::sqrt(2.0 * s));
}

}  // namespace sbl::cofem
