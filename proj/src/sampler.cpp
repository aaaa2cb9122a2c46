#include "scoremc/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <limits>
#include <mutex>
#include <thread>

namespace scoremc {
namespace {

// Grid times are formed by multiplication, not repeated subtraction, so the
// last estimation time is exactly δ and the switch-rule step count is well
// defined.
inline double grid_time(Index steps, Index i, double delta) {
  return static_cast<double>(steps - i) * delta;
}

void run_particle(const TargetDensity& target, const SamplerConfig& config,
                  const ParticleNoise& noise, ScoreBatch& workspace,
                  VecRef out) {
  const Index d = config.dim;
  const Index steps = config.steps();
  const SwitchPolicy policy{config.switch_time};

  Vector theta = noise.init_stream().normal_vector(d);
  Vector kick(d);
  for (Index i = 0; i < steps; ++i) {
    const DiffusionTime time = make_time(grid_time(steps, i, config.delta));
    NoiseStream score_noise = noise.score_stream(static_cast<std::uint32_t>(i));
    estimate_score(target, theta, time, config.K, policy, score_noise, workspace);
    NoiseStream kick_noise = noise.kick_stream(static_cast<std::uint32_t>(i));
    kick_noise.fill_normal(kick.data(), d);
    theta = reverse_step(theta, time, config.delta, workspace.score, kick);
    if (!theta.allFinite())
      throw IntegrationError("state became non-finite at t = " +
                             std::to_string(time.t));
  }
  out = theta;
}

}  // namespace

void SamplerConfig::validate() const {
  if (!(T > 0.0) || !std::isfinite(T)) throw UsageError("T must be positive");
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw UsageError("delta must be positive");
  if (delta > T) throw UsageError("delta must not exceed T");
  if (K < 1) throw UsageError("K must be at least 1");
  if (n < 1) throw UsageError("n must be at least 1");
  if (dim < 1) throw UsageError("dim must be at least 1");
  if (!(switch_time > 0.0)) throw UsageError("switch_time must be positive");
  if (steps() < 1) throw UsageError("T/delta must round to at least one step");
  if (steps() > (Index(1) << 30))
    throw UsageError("too many steps for the stream id space");
}

Vector sample_one(const TargetDensity& target, const SamplerConfig& config,
                  const ParticleNoise& noise) {
  config.validate();
  if (target.dim() != config.dim)
    throw UsageError("config dimension does not match the target");
  Vector out(config.dim);
  ScoreBatch workspace;
  run_particle(target, config, noise, workspace, out);
  return out;
}

RunResult sample_batch(const TargetDensity& target, const SamplerConfig& config,
                       int threads) {
  config.validate();
  if (target.dim() != config.dim)
    throw UsageError("config dimension does not match the target");
  if (threads < 0) throw UsageError("threads must be nonnegative");

  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t f0 = target.f_evals();
  const std::uint64_t g0 = target.grad_evals();

  RunResult result;
  result.samples.setConstant(config.n, config.dim,
                             std::numeric_limits<double>::quiet_NaN());

  unsigned worker_count = threads == 0
                              ? std::max(1u, std::thread::hardware_concurrency())
                              : static_cast<unsigned>(threads);
  worker_count = std::min<unsigned>(worker_count, static_cast<unsigned>(config.n));

  std::atomic<Index> next{0};
  std::mutex failure_mutex;
  auto work = [&]() {
    ScoreBatch workspace;
    Vector out(config.dim);
    for (;;) {
      const Index i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= config.n) return;
      try {
        ParticleNoise noise{config.seed, static_cast<std::uint32_t>(i)};
        run_particle(target, config, noise, workspace, out);
        result.samples.row(i) = out.transpose();
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        result.failures.push_back({i, e.what()});
      }
    }
  };

  if (worker_count <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(worker_count);
    for (unsigned w = 0; w < worker_count; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  std::sort(result.failures.begin(), result.failures.end(),
            [](const ParticleFailure& a, const ParticleFailure& b) {
              return a.index < b.index;
            });
  result.f_evals = target.f_evals() - f0;
  result.grad_evals = target.grad_evals() - g0;
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

}  // namespace scoremc
