#pragma once

#include "sbl/linop.hpp"

namespace sbl {

using linop::Index;
using linop::Vector;

inline constexpr double kDefaultClampMax = 1e12;
inline constexpr double kDefaultFloorEps = 1e-12;

/// Prior precisions α of the SBL model at EM iteration `iteration`.
/// Every M-step floors its denominator at `floor_eps` and clamps α to
/// `clamp_max`, so α stays in (0, clamp_max] and the system stays SPD.
struct PrecisionState {
  Vector alpha;
  int iteration = 1;
  double clamp_max = kDefaultClampMax;
  double floor_eps = kDefaultFloorEps;

  static PrecisionState initial(Index dimension, double clamp_max = kDefaultClampMax,
                                double floor_eps = kDefaultFloorEps);

  /// α_j = tasks / max(second_moment_j, floor_eps), clamped. Returns the
  /// successor state (iteration + 1).
  PrecisionState updated(const Vector& second_moment, double tasks = 1.0) const;
};

/// E[z²] = μ² + s under a Gaussian posterior marginal.
Vector gaussian_second_moment(const Vector& mu, const Vector& variance);

/// Second moment of the diagonal rectified-Gaussian posterior approximation:
///   μ² + s + μ·sqrt(s/π)·exp(−ξ²)/erfc(−ξ),  ξ = μ / sqrt(2s),
/// with s floored at `floor_eps`.
double rectified_second_moment(double mu, double variance, double floor_eps = kDefaultFloorEps);
Vector rectified_second_moment(const Vector& mu, const Vector& variance,
                               double floor_eps = kDefaultFloorEps);

}  // namespace sbl
