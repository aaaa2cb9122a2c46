#include "scoremc/target.hpp"

#include <cmath>

namespace scoremc {
namespace {

constexpr double kTanhMu[4] = {-5.0, -1.0, 3.0, 4.0};
constexpr double kTanhScale = 100.0;
constexpr double kTanhHalf = 0.05;

// sech²(x) = 1 − tanh²(x); stays bounded where cosh would overflow.
inline double sech2(double x) {
  const double th = std::tanh(x);
  return 1.0 - th * th;
}

}  // namespace

void GaussianMixtureSpec::validate() const {
  if (components() < 1) throw UsageError("mixture needs at least one component");
  if (weights.size() != components())
    throw UsageError("mixture has " + std::to_string(components()) +
                     " means but " + std::to_string(weights.size()) +
                     " weights");
  if (!means.allFinite()) throw UsageError("mixture means must be finite");
  for (Index i = 0; i < weights.size(); ++i)
    if (!(weights[i] > 0.0)) throw UsageError("mixture weights must be positive");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw UsageError("mixture weights must sum to 1");
}

TargetDensity make_tanh_bumps_1d() {
  auto f = [](const VecView& theta) {
    const double x = theta[0];
    double acc = 0.0;
    for (double mu : kTanhMu)
      acc += std::tanh(x + kTanhHalf - mu) - std::tanh(x - kTanhHalf - mu);
    return kTanhScale * acc;
  };
  auto grad = [](const VecView& theta, VecRef out) {
    const double x = theta[0];
    double acc = 0.0;
    for (double mu : kTanhMu)
      acc += sech2(x + kTanhHalf - mu) - sech2(x - kTanhHalf - mu);
    out[0] = kTanhScale * acc;
  };
  return {"tanh1d", 1, f, grad};
}

TargetDensity make_himmelblau() {
  auto f = [](const VecView& theta) {
    const double a = theta[0] * theta[0] + theta[1] - 11.0;
    const double b = theta[0] + theta[1] * theta[1] - 7.0;
    return -a * a - b * b;
  };
  auto grad = [](const VecView& theta, VecRef out) {
    const double a = theta[0] * theta[0] + theta[1] - 11.0;
    const double b = theta[0] + theta[1] * theta[1] - 7.0;
    out[0] = -4.0 * a * theta[0] - 2.0 * b;
    out[1] = -2.0 * a - 4.0 * b * theta[1];
  };
  return {"himmelblau", 2, f, grad};
}

TargetDensity make_gaussian_mixture(GaussianMixtureSpec spec) {
  spec.validate();
  const Index m = spec.components();
  // Per-component constant log wᵢ − ½‖μᵢ‖².
  Vector shift(m);
  for (Index i = 0; i < m; ++i)
    shift[i] = std::log(spec.weights[i]) - 0.5 * spec.means.col(i).squaredNorm();
  const Matrix means = spec.means;

  // Exponents are recomputed in two passes instead of stored so evaluators
  // stay allocation-free and safe to call concurrently.
  auto exponent = [means, shift](const VecView& theta, Index i) {
    return means.col(i).dot(theta) + shift[i];
  };
  auto f = [means, shift, exponent](const VecView& theta) {
    const Index m = means.cols();
    double mx = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i) mx = std::max(mx, exponent(theta, i));
    double s = 0.0;
    for (Index i = 0; i < m; ++i) s += std::exp(exponent(theta, i) - mx);
    return mx + std::log(s);
  };
  auto grad = [means, shift, exponent](const VecView& theta, VecRef out) {
    const Index m = means.cols();
    double mx = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i) mx = std::max(mx, exponent(theta, i));
    out.setZero();
    double s = 0.0;
    for (Index i = 0; i < m; ++i) {
      const double r = std::exp(exponent(theta, i) - mx);
      s += r;
      out += r * means.col(i);
    }
    out /= s;
  };
  return {"gauss-mix", spec.dim(), f, grad};
}

TargetDensity make_constant(Index dim) {
  auto f = [](const VecView&) { return 0.0; };
  auto grad = [](const VecView&, VecRef out) { out.setZero(); };
  return {"constant", dim, f, grad};
}

TargetDensity make_named_target(const std::string& name,
                                const GaussianMixtureSpec* mixture) {
  if (name == "tanh1d") return make_tanh_bumps_1d();
  if (name == "himmelblau") return make_himmelblau();
  if (name == "gauss-mix") {
    if (mixture == nullptr)
      throw UsageError("target 'gauss-mix' needs a mixture document");
    return make_gaussian_mixture(*mixture);
  }
  throw UsageError("unknown target '" + name +
                   "' (expected tanh1d, himmelblau, or gauss-mix)");
}

}  // namespace scoremc
