#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scoremc/rng.hpp"
#include "scoremc/score.hpp"
#include "scoremc/target.hpp"
#include "scoremc/types.hpp"

namespace scoremc {

// Full definition of one sampling experiment.
struct SamplerConfig {
  double T = 2.0;        // terminal time
  double delta = 0.01;   // step size δ
  Index K = 1000;        // MC draws per score estimate
  Index n = 1;           // particles
  double switch_time = 0.1;
  std::uint64_t seed = 0;
  Index dim = 1;

  Index steps() const { return static_cast<Index>(std::llround(T / delta)); }
  void validate() const;
};

struct ParticleFailure {
  Index index;
  std::string message;
};

struct RunResult {
  Matrix samples;  // n × d, one row per particle; failed rows are NaN
  std::uint64_t f_evals = 0;
  std::uint64_t grad_evals = 0;
  double wall_time_s = 0;
  std::vector<ParticleFailure> failures;
};

// Noise bundle of one particle: independent counter-based streams for the
// initial draw, each step's score draws, and each step's integrator kick.
// Stream ids are a pure function of the step index, so results cannot depend
// on which worker runs the particle.
struct ParticleNoise {
  std::uint64_t seed = 0;
  std::uint32_t particle = 0;

  NoiseStream init_stream() const { return {seed, particle, 0}; }
  NoiseStream score_stream(std::uint32_t step) const {
    return {seed, particle, 2 * step + 1};
  }
  NoiseStream kick_stream(std::uint32_t step) const {
    return {seed, particle, 2 * step + 2};
  }
};

// One Euler-Maruyama update of the reverse flow:
// θ_{t−δ} = θ − δ(−θ − 2 ŝ) + √(2δ) z.
inline Vector reverse_step(const VecView& theta, const DiffusionTime& time,
                           double delta, const VecView& score,
                           const VecView& noise) {
  (void)time;  // the score was estimated at `time`; the update itself only needs δ
  if (!(delta > 0.0)) throw UsageError("step size must be positive");
  if (score.size() != theta.size() || noise.size() != theta.size())
    throw UsageError("score/noise dimension does not match the state");
  if (!theta.allFinite() || !score.allFinite() || !noise.allFinite())
    throw IntegrationError("non-finite input to reverse step");
  return theta - delta * (-theta - 2.0 * score) + std::sqrt(2.0 * delta) * noise;
}

// Runs one particle from θ_T ~ N(0,I) down the uniform grid
// t = T, T−δ, …, δ, estimating the score at each grid time before stepping.
Vector sample_one(const TargetDensity& target, const SamplerConfig& config,
                  const ParticleNoise& noise);

// Runs n particles, each on its own substream; bit-identical output for a
// fixed seed regardless of `threads` (0 = all hardware threads). Failed
// particles are recorded, not retried.
RunResult sample_batch(const TargetDensity& target, const SamplerConfig& config,
                       int threads = 0);

}  // namespace scoremc
