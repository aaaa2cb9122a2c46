#pragma once

#include <cmath>
#include <string>

#include "scoremc/diffusion.hpp"
#include "scoremc/numeric.hpp"
#include "scoremc/rng.hpp"
#include "scoremc/target.hpp"
#include "scoremc/types.hpp"

namespace scoremc {

enum class Estimator { S1, S2 };

// Everything one score estimate produced: the K standard-normal draws
// (columns), the perturbed points, f at those points, the self-normalized
// weights, and the resulting score vector.
struct ScoreBatch {
  Matrix draws;    // d × K
  Matrix points;   // d × K
  Vector f_values; // K
  Vector weights;  // K
  Vector score;    // d
  Estimator estimator_used = Estimator::S1;
};

// Route small times to the gradient-based estimator, large times to the
// draw-based one.
struct SwitchPolicy {
  double switch_time = 0.1;
};

inline Estimator pick_estimator(const DiffusionTime& time, const SwitchPolicy& policy) {
  if (!(policy.switch_time > 0.0)) throw UsageError("switch_time must be positive");
  return time.t > policy.switch_time ? Estimator::S1 : Estimator::S2;
}

// Self-normalized weights wₖ = softmax(f_values), max-shifted so that
// magnitudes of order |f| ~ 1e6 stay finite. Invariant under adding a
// constant to every entry.
inline void importance_weights_inplace(VecRef w) {
  if (w.size() == 0) throw UsageError("importance weights need K >= 1 values");
  for (Index k = 0; k < w.size(); ++k)
    if (!std::isfinite(w[k]))
      throw EstimationError("non-finite f value at sample " + std::to_string(k), k);
  softmax_inplace(w);
}

inline Vector importance_weights(const VecView& f_values) {
  Vector w = f_values;
  importance_weights_inplace(w);
  return w;
}

namespace detail {
inline void check_weights(const VecView& weights) {
  if (std::abs(weights.sum() - 1.0) > 1e-6)
    throw UsageError("weights must sum to 1");
}
}  // namespace detail

// ŝ₁(θ,t) = −θ + (e^{−t}/σ_t) Σₖ wₖ Uₖ. Needs only the draws already in hand;
// singular at t = 0.
inline Vector score_s1(const VecView& theta, const DiffusionTime& time,
                       const Matrix& draws, const VecView& weights) {
  if (!(time.t > 0.0)) throw UsageError("s1 is singular at t = 0");
  if (draws.rows() != theta.size() || draws.cols() != weights.size())
    throw UsageError("draws shape does not match theta/weights");
  detail::check_weights(weights);
  return -theta + (time.decay / time.sigma) * (draws * weights);
}

// ŝ₂(θ,t) = −θ + e^{−t} Σₖ wₖ ∇f(σ_t Uₖ + e^{−t}θ). Bounded whenever ∇f is;
// approaches the target score −θ + ∇f(θ) as t → 0.
inline Vector score_s2(const VecView& theta, const DiffusionTime& time,
                       const Matrix& gradients, const VecView& weights) {
  if (gradients.rows() != theta.size() || gradients.cols() != weights.size())
    throw UsageError("gradients shape does not match theta/weights");
  detail::check_weights(weights);
  if (!gradients.allFinite()) {
    for (Index k = 0; k < gradients.cols(); ++k)
      if (!gradients.col(k).allFinite())
        throw EstimationError("non-finite gradient at sample " + std::to_string(k), k);
  }
  return -theta + time.decay * (gradients * weights);
}

// One full score estimate at (θ, t): draw K fresh U ~ N(0,I), evaluate f at
// the perturbed points (exactly K oracle calls), form weights, then dispatch
// on the switch policy; the S2 branch additionally evaluates ∇f at all K
// points. Buffers in `out` are reused across calls of the same shape.
inline void estimate_score(const TargetDensity& target, const VecView& theta,
                           const DiffusionTime& time, Index K,
                           const SwitchPolicy& policy, NoiseStream& noise,
                           ScoreBatch& out) {
  if (K < 1) throw UsageError("score estimation needs K >= 1");
  if (!(time.t > 0.0)) throw UsageError("score estimation needs t > 0");
  if (theta.size() != target.dim())
    throw UsageError("theta dimension does not match the target");
  const Index d = target.dim();

  out.draws.resize(d, K);
  noise.fill_normal(out.draws);

  out.points.resize(d, K);
  out.points = time.sigma * out.draws;
  out.points.colwise() += (time.decay * theta).eval();

  out.f_values.resize(K);
  for (Index k = 0; k < K; ++k)
    out.f_values[k] = log_likelihood(target, out.points.col(k));

  out.weights = out.f_values;
  importance_weights_inplace(out.weights);

  out.estimator_used = pick_estimator(time, policy);
  if (out.estimator_used == Estimator::S1) {
    out.score = score_s1(theta, time, out.draws, out.weights);
  } else {
    Matrix gradients(d, K);
    for (Index k = 0; k < K; ++k)
      grad_log_likelihood(target, out.points.col(k), gradients.col(k));
    out.score = score_s2(theta, time, gradients, out.weights);
  }
  if (!out.score.allFinite())
    throw EstimationError("score estimate is not finite");
}

inline ScoreBatch estimate_score(const TargetDensity& target, const VecView& theta,
                                 const DiffusionTime& time, Index K,
                                 const SwitchPolicy& policy, NoiseStream& noise) {
  ScoreBatch out;
  estimate_score(target, theta, time, K, policy, noise, out);
  return out;
}

}  // namespace scoremc
