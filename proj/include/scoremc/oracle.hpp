#pragma once

#include <cstdint>
#include <vector>

#include "scoremc/diffusion.hpp"
#include "scoremc/rng.hpp"
#include "scoremc/target.hpp"
#include "scoremc/types.hpp"

namespace scoremc {

// Axis-aligned boxes around known mode locations, used by the
// sampled-vs-pdf mode diagnostic.
struct ModeSpec {
  Matrix centers;  // d × m, one mode per column
  double half_width = 0.5;
  Index pdf_samples_per_mode = 10000;

  Index dim() const { return centers.rows(); }
  Index modes() const { return centers.cols(); }
  void validate() const;
};

struct ModeReport {
  Vector sampled_proportions;        // per mode, sums to 1 if any box is hit
  Vector pdf_proportions;            // per mode, sums to 1
  std::vector<std::int64_t> counts;  // raw in-box sample counts
  double max_abs_deviation = 0;      // max |sampled − pdf| over modes
};

// Exact score of p_t when p0 = Σ wᵢ N(μᵢ, I): under the OU flow the mixture
// evolves to Σ wᵢ N(e^{−t}μᵢ, I), whose score is closed form.
Vector analytic_score_gaussian_mixture(const GaussianMixtureSpec& spec,
                                       const VecView& theta,
                                       const DiffusionTime& time);

// Brute-force reference score for any 1-D target: trapezoid evaluation of
// ∫ p0 ∇p_t(θ|θ0) dθ0 / ∫ p0 p_t(θ|θ0) dθ0 on a uniform grid, exponents
// max-shifted. Throws QuadratureError if the grid truncates visible mass.
double quadrature_score_1d(const TargetDensity& target, double theta,
                           const DiffusionTime& time, double grid_lo,
                           double grid_hi, double grid_step);

// Normalized density table for a 1-D target: density(x) ∝ exp(f(x) − x²/2),
// trapezoid-normalized over the grid. `shift` and `norm` let callers evaluate
// the same normalized density at off-grid points.
struct Density1D {
  Vector grid;
  Vector density;
  double shift = 0;
  double norm = 1;

  double at(const TargetDensity& target, double x) const;
};

Density1D quadrature_density_1d(const TargetDensity& target, double grid_lo,
                                double grid_hi, double grid_step);

// Trapezoid mass of p0 inside [c − h, c + h] around each 1-D mode center,
// normalized across modes to sum to 1.
Vector window_masses_quadrature_1d(const TargetDensity& target,
                                   const ModeSpec& modes, double grid_lo,
                                   double grid_hi, double grid_step);

// In-box sample counts per mode. A sample exactly on a box edge counts as
// inside (closed box).
std::vector<std::int64_t> mode_counts(const Matrix& samples, const ModeSpec& modes);

// Counts normalized across modes; all-zero if no sample lands in any box.
Vector mode_proportions(const Matrix& samples, const ModeSpec& modes);

// MC estimate of each mode box's probability mass: average of
// exp(f(x) − ½xᵀx − c) over uniform points in the box, with one global
// max-shift c across all modes so cross-mode ratios are preserved exactly,
// then normalized to sum to 1. Optionally reports each box average's
// relative MC standard error.
Vector mode_probability_estimates(const TargetDensity& target,
                                  const ModeSpec& modes, NoiseStream& noise,
                                  Vector* rel_stderr = nullptr);

ModeReport make_mode_report(const Matrix& samples, const TargetDensity& target,
                            const ModeSpec& modes, NoiseStream& noise);

// The two benchmark targets ship their published mode lists.
ModeSpec builtin_modes(const std::string& target_name);

}  // namespace scoremc
