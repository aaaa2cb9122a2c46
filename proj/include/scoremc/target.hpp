#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "scoremc/types.hpp"

namespace scoremc {

struct EvalCounters {
  std::atomic<std::uint64_t> f_calls{0};
  std::atomic<std::uint64_t> grad_calls{0};
};

// Unnormalized target p0(θ) ∝ exp(f(θ) − ½θᵀθ), seen by the sampler only
// through the f and ∇f oracles. Copies of a handle share one counter block,
// so a parallel batch aggregates its oracle-call totals for free.
class TargetDensity {
 public:
  using LogFn = std::function<double(const VecView&)>;
  using GradFn = std::function<void(const VecView&, VecRef)>;

  TargetDensity(std::string name, Index dim, LogFn f, GradFn grad)
      : name_(std::move(name)),
        dim_(dim),
        f_(std::move(f)),
        grad_(std::move(grad)),
        counters_(std::make_shared<EvalCounters>()) {
    if (dim_ < 1) throw UsageError("target dimension must be positive");
  }

  Index dim() const { return dim_; }
  const std::string& name() const { return name_; }

  std::uint64_t f_evals() const {
    return counters_->f_calls.load(std::memory_order_relaxed);
  }
  std::uint64_t grad_evals() const {
    return counters_->grad_calls.load(std::memory_order_relaxed);
  }
  void reset_counters() const {
    counters_->f_calls.store(0, std::memory_order_relaxed);
    counters_->grad_calls.store(0, std::memory_order_relaxed);
  }

  double eval_f(const VecView& theta) const {
    check_dim(theta);
    counters_->f_calls.fetch_add(1, std::memory_order_relaxed);
    return f_(theta);
  }

  void eval_grad(const VecView& theta, VecRef out) const {
    check_dim(theta);
    if (out.size() != dim_) throw UsageError("gradient output size mismatch");
    counters_->grad_calls.fetch_add(1, std::memory_order_relaxed);
    grad_(theta, out);
  }

 private:
  void check_dim(const VecView& theta) const {
    if (theta.size() != dim_)
      throw UsageError("point dimension " + std::to_string(theta.size()) +
                       " does not match target dimension " +
                       std::to_string(dim_));
  }

  std::string name_;
  Index dim_;
  LogFn f_;
  GradFn grad_;
  std::shared_ptr<EvalCounters> counters_;
};

inline double log_likelihood(const TargetDensity& target, const VecView& theta) {
  return target.eval_f(theta);
}

inline void grad_log_likelihood(const TargetDensity& target, const VecView& theta,
                                VecRef out) {
  target.eval_grad(theta, out);
}

inline Vector grad_log_likelihood(const TargetDensity& target,
                                  const VecView& theta) {
  Vector g(target.dim());
  target.eval_grad(theta, g);
  return g;
}

// Mixture p0 = Σ wᵢ N(μᵢ, I), i.e. f(θ) = log Σ wᵢ exp(μᵢᵀθ − ½‖μᵢ‖²).
struct GaussianMixtureSpec {
  Matrix means;    // d × m, one component per column
  Vector weights;  // m positive entries summing to 1

  Index dim() const { return means.rows(); }
  Index components() const { return means.cols(); }
  void validate() const;
};

TargetDensity make_tanh_bumps_1d();
TargetDensity make_himmelblau();
TargetDensity make_gaussian_mixture(GaussianMixtureSpec spec);

// f ≡ 0, so p0 is exactly standard normal. Test density.
TargetDensity make_constant(Index dim);

// Lookup for the CLI names tanh1d | himmelblau | gauss-mix; the mixture spec
// is required for (and only for) gauss-mix.
TargetDensity make_named_target(const std::string& name,
                                const GaussianMixtureSpec* mixture = nullptr);

}  // namespace scoremc
