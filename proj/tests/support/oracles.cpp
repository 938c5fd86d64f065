#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace sbl::oracle {

Matrix dense_solve(const Matrix& A, const Matrix& B) { return A.fullPivLu().solve(B); }

Matrix random_spd(Eigen::Index size, double condition, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> normal;
  Matrix G(size, size);
  for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = normal(gen);
  const Eigen::HouseholderQR<Matrix> qr(G);
  const Matrix Q = qr.householderQ();
  Vector eig(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    const double t = size == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(size - 1);
    eig[i] = std::pow(condition, t);
  }
  Matrix A = Q * eig.asDiagonal() * Q.transpose();
  return 0.5 * (A + A.transpose());
}

Matrix random_symmetric(Eigen::Index size, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Matrix M(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) M(i, j) = M(j, i) = uniform(gen);
  }
  return M;
}

namespace {

double quadratic(const Matrix& G, const Vector& b, const Vector& u) {
  return u.dot(G * u) - 2.0 * b.dot(u);
}

Vector solve_on(const Matrix& G, const Vector& b, const std::vector<Eigen::Index>& free) {
  const auto m = static_cast<Eigen::Index>(free.size());
  Vector u = Vector::Zero(b.size());
  if (m == 0) return u;
  Matrix g(m, m);
  Vector r(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    r[a] = b[free[a]];
    for (Eigen::Index c = 0; c < m; ++c) g(a, c) = G(free[a], free[c]);
  }
  const Vector x = g.fullPivLu().solve(r);
  for (Eigen::Index a = 0; a < m; ++a) u[free[a]] = x[a];
  return u;
}

}  // namespace

Vector nnls_exhaustive(const Matrix& G, const Vector& b) {
  const auto n = b.size();
  Vector best = Vector::Zero(n);
  double best_value = 0.0;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (mask & (std::uint64_t{1} << k)) free.push_back(k);
    }
    const Vector u = solve_on(G, b, free);
    if ((u.array() < 0.0).any()) continue;
    const double value = quadratic(G, b, u);
    if (value < best_value) {
      best_value = value;
      best = u;
    }
  }
  return best;
}

Vector nnls_active_set(const Matrix& G, const Vector& b, int max_iterations) {
  const auto n = b.size();
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Vector x = Vector::Zero(n);
  const double tol = 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff());
  for (int outer = 0; outer < max_iterations; ++outer) {
    const Vector w = b - G * x;  // negative half-gradient
    Eigen::Index pick = -1;
    double best = tol;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!passive[static_cast<std::size_t>(k)] && w[k] > best) {
        best = w[k];
        pick = k;
      }
    }
    if (pick < 0) break;
    passive[static_cast<std::size_t>(pick)] = true;
    for (int inner = 0; inner < max_iterations; ++inner) {
      std::vector<Eigen::Index> free;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (passive[static_cast<std::size_t>(k)]) free.push_back(k);
      }
      const Vector z = solve_on(G, b, free);
      bool feasible = true;
      for (auto k : free) feasible = feasible && z[k] > 0.0;
      if (feasible) {
        x = z;
        break;
      }
      double step = 1.0;
      for (auto k : free) {
        if (z[k] <= 0.0) step = std::min(step, x[k] / (x[k] - z[k]));
      }
      x += step * (z - x);
      for (auto k : free) {
        if (x[k] <= 1e-15) {
          x[k] = 0.0;
          passive[static_cast<std::size_t>(k)] = false;
        }
      }
    }
  }
  return x;
}

double erfc_quadrature(double x) {
  const double upper = std::max(x, 0.0) + 12.0;
  const int intervals = 200000;
  const double h = (upper - x) / intervals;
  double sum = std::exp(-x * x) + std::exp(-upper * upper);
  for (int i = 1; i < intervals; ++i) {
    const double t = x + i * h;
    sum += (i % 2 ? 4.0 : 2.0) * std::exp(-t * t);
  }
  return 2.0 / std::sqrt(std::numbers::pi) * sum * h / 3.0;
}

double sample_mean(const std::vector<double>& values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_std(const std::vector<double>& values) {
  const double mean = sample_mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

}  // namespace sbl::oracle
