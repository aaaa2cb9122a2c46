#pragma once

#include <cmath>

#include "scoremc/types.hpp"

namespace scoremc {

// A point on the Ornstein-Uhlenbeck time axis with its derived factors:
// θ_t | θ_0 ~ N(e^{−t} θ_0, σ_t² I) with σ_t = √(1 − e^{−2t}).
struct DiffusionTime {
  double t = 0;
  double decay = 1;  // e^{−t}
  double sigma = 0;  // σ_t
};

inline DiffusionTime make_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw UsageError("diffusion time must be finite and nonnegative");
  DiffusionTime out;
  out.t = t;
  out.decay = std::exp(-t);
  // √(−expm1(−2t)) keeps σ_t accurate for small t, where 1 − e^{−2t}
  // cancels catastrophically.
  out.sigma = std::sqrt(-std::expm1(-2.0 * t));
  return out;
}

// One draw from the OU conditional law at time t, noise supplied by the
// caller: e^{−t} θ0 + σ_t z.
inline Vector forward_sample(const VecView& theta0, const DiffusionTime& time,
                             const VecView& noise) {
  if (theta0.size() != noise.size())
    throw UsageError("noise dimension does not match the state");
  return time.decay * theta0 + time.sigma * noise;
}

// The K points σ_t Uₖ + e^{−t} θ at which the score estimators evaluate the
// oracles; draws are columns, order preserved.
inline Matrix perturbation_points(const VecView& theta, const DiffusionTime& time,
                                  const Matrix& draws) {
  if (draws.rows() != theta.size())
    throw UsageError("draw dimension does not match the state");
  if (!(time.t > 0.0))
    throw UsageError("perturbation points need t > 0");
  Matrix points = time.sigma * draws;
  points.colwise() += (time.decay * theta).eval();
  return points;
}

}  // namespace scoremc
