#include "scoremc/oracle.hpp"

#include <cmath>

#include "scoremc/numeric.hpp"

namespace scoremc {
namespace {

constexpr double kEndpointMassTol = 1e-12;

inline Index grid_size(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi > lo)) throw UsageError("invalid quadrature grid");
  return static_cast<Index>(std::floor((hi - lo) / step + 0.5)) + 1;
}

double trapezoid(const VecView& y, double step) {
  const Index n = y.size();
  return step * (y.sum() - 0.5 * (y[0] + y[n - 1]));
}

}  // namespace

void ModeSpec::validate() const {
  if (modes() < 1) throw UsageError("mode spec needs at least one center");
  if (!centers.allFinite()) throw UsageError("mode centers must be finite");
  if (!(half_width > 0.0)) throw UsageError("half_width must be positive");
  if (pdf_samples_per_mode < 1)
    throw UsageError("pdf_samples_per_mode must be positive");
}

Vector analytic_score_gaussian_mixture(const GaussianMixtureSpec& spec,
                                       const VecView& theta,
                                       const DiffusionTime& time) {
  spec.validate();
  if (theta.size() != spec.dim())
    throw UsageError("theta dimension does not match the mixture");
  const Index m = spec.components();
  // p_t = Σ wᵢ N(e^{−t}μᵢ, I); responsibilities via max-shifted softmax.
  Vector logr(m);
  for (Index i = 0; i < m; ++i)
    logr[i] = std::log(spec.weights[i]) -
              0.5 * (theta - time.decay * spec.means.col(i)).squaredNorm();
  softmax_inplace(logr);
  Vector score = Vector::Zero(theta.size());
  for (Index i = 0; i < m; ++i)
    score += logr[i] * (time.decay * spec.means.col(i) - theta);
  return score;
}

double quadrature_score_1d(const TargetDensity& target, double theta,
                           const DiffusionTime& time, double grid_lo,
                           double grid_hi, double grid_step) {
  if (target.dim() != 1)
    throw UsageError("quadrature score is only defined for 1-D targets");
  if (!(time.t > 0.0)) throw UsageError("quadrature score needs t > 0");
  const Index n = grid_size(grid_lo, grid_hi, grid_step);
  const double sig2 = time.sigma * time.sigma;

  Vector expo(n), slope(n);
  Vector point(1);
  for (Index i = 0; i < n; ++i) {
    const double x = grid_lo + static_cast<double>(i) * grid_step;
    point[0] = x;
    const double resid = theta - time.decay * x;
    expo[i] = log_likelihood(target, point) - 0.5 * x * x -
              0.5 * resid * resid / sig2;
    slope[i] = -resid / sig2;
  }
  const double shift = expo.maxCoeff();
  Vector w = (expo.array() - shift).exp();
  if (w[0] > kEndpointMassTol || w[n - 1] > kEndpointMassTol)
    throw QuadratureError("integrand mass at the grid endpoints; widen the grid");
  const double den = trapezoid(w, grid_step);
  const double num = trapezoid((w.array() * slope.array()).matrix(), grid_step);
  return num / den;
}

double Density1D::at(const TargetDensity& target, double x) const {
  Vector point(1);
  point[0] = x;
  return std::exp(log_likelihood(target, point) - 0.5 * x * x - shift) / norm;
}

Density1D quadrature_density_1d(const TargetDensity& target, double grid_lo,
                                double grid_hi, double grid_step) {
  if (target.dim() != 1)
    throw UsageError("density table is only defined for 1-D targets");
  const Index n = grid_size(grid_lo, grid_hi, grid_step);
  Density1D out;
  out.grid.resize(n);
  out.density.resize(n);
  Vector point(1);
  for (Index i = 0; i < n; ++i) {
    const double x = grid_lo + static_cast<double>(i) * grid_step;
    out.grid[i] = x;
    point[0] = x;
    out.density[i] = log_likelihood(target, point) - 0.5 * x * x;
  }
  out.shift = out.density.maxCoeff();
  out.density = (out.density.array() - out.shift).exp();
  out.norm = trapezoid(out.density, grid_step);
  out.density /= out.norm;
  return out;
}

Vector window_masses_quadrature_1d(const TargetDensity& target,
                                   const ModeSpec& modes, double grid_lo,
                                   double grid_hi, double grid_step) {
  modes.validate();
  if (modes.dim() != 1) throw UsageError("window masses need 1-D mode centers");
  const Density1D table = quadrature_density_1d(target, grid_lo, grid_hi, grid_step);
  const Index m = modes.modes();
  Vector masses(m);
  for (Index i = 0; i < m; ++i) {
    const double lo = modes.centers(0, i) - modes.half_width;
    const double hi = modes.centers(0, i) + modes.half_width;
    Index first = 0;
    while (first < table.grid.size() && table.grid[first] < lo) ++first;
    Index last = table.grid.size() - 1;
    while (last > 0 && table.grid[last] > hi) --last;
    if (last <= first) throw QuadratureError("mode window narrower than the grid step");
    masses[i] = trapezoid(table.density.segment(first, last - first + 1), grid_step);
  }
  return masses / masses.sum();
}

std::vector<std::int64_t> mode_counts(const Matrix& samples, const ModeSpec& modes) {
  modes.validate();
  if (samples.rows() == 0) throw UsageError("no samples given");
  if (samples.cols() != modes.dim())
    throw UsageError("sample dimension does not match the mode centers");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(modes.modes()), 0);
  for (Index s = 0; s < samples.rows(); ++s) {
    for (Index i = 0; i < modes.modes(); ++i) {
      // Closed box: edge hits count as inside.
      const bool inside = ((samples.row(s).transpose() - modes.centers.col(i))
                               .cwiseAbs()
                               .array() <= modes.half_width)
                              .all();
      if (inside) ++counts[static_cast<std::size_t>(i)];
    }
  }
  return counts;
}

Vector mode_proportions(const Matrix& samples, const ModeSpec& modes) {
  const auto counts = mode_counts(samples, modes);
  Vector props = Vector::Zero(modes.modes());
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return props;
  for (Index i = 0; i < props.size(); ++i)
    props[i] = static_cast<double>(counts[static_cast<std::size_t>(i)]) /
               static_cast<double>(total);
  return props;
}

Vector mode_probability_estimates(const TargetDensity& target,
                                  const ModeSpec& modes, NoiseStream& noise,
                                  Vector* rel_stderr) {
  modes.validate();
  if (target.dim() != modes.dim())
    throw UsageError("mode centers do not match the target dimension");
  const Index m = modes.modes();
  const Index d = modes.dim();
  const Index N = modes.pdf_samples_per_mode;

  Matrix expo(N, m);
  Vector x(d);
  for (Index i = 0; i < m; ++i) {
    for (Index p = 0; p < N; ++p) {
      for (Index j = 0; j < d; ++j)
        x[j] = modes.centers(j, i) +
               modes.half_width * (2.0 * noise.uniform() - 1.0);
      expo(p, i) = log_likelihood(target, x) - 0.5 * x.squaredNorm();
    }
  }
  // One global shift keeps cross-mode ratios exact.
  const double shift = expo.maxCoeff();
  Matrix w = (expo.array() - shift).exp();
  Vector raw = w.colwise().mean().transpose();
  if (rel_stderr != nullptr) {
    rel_stderr->resize(m);
    for (Index i = 0; i < m; ++i) {
      const double sd = std::sqrt(
          (w.col(i).array() - raw[i]).square().sum() /
          static_cast<double>(N - 1));
      (*rel_stderr)[i] = sd / (std::sqrt(static_cast<double>(N)) * raw[i]);
    }
  }
  return raw / raw.sum();
}

ModeReport make_mode_report(const Matrix& samples, const TargetDensity& target,
                            const ModeSpec& modes, NoiseStream& noise) {
  ModeReport report;
  report.counts = mode_counts(samples, modes);
  report.sampled_proportions = mode_proportions(samples, modes);
  report.pdf_proportions = mode_probability_estimates(target, modes, noise);
  report.max_abs_deviation =
      (report.sampled_proportions - report.pdf_proportions).cwiseAbs().maxCoeff();
  return report;
}

ModeSpec builtin_modes(const std::string& target_name) {
  ModeSpec spec;
  if (target_name == "tanh1d") {
    spec.centers.resize(1, 4);
    spec.centers << -5.0, -1.0, 3.0, 4.0;
  } else if (target_name == "himmelblau") {
    spec.centers.resize(2, 4);
    spec.centers << 3.0, -2.81, -3.78, 3.58,
                    2.0,  3.13, -3.28, -1.85;
  } else {
    throw UsageError("no built-in mode list for target '" + target_name + "'");
  }
  return spec;
}

}  // namespace scoremc
