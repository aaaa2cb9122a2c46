#pragma once

#include <cmath>
#include <limits>

#include "scoremc/types.hpp"

namespace scoremc {

// log(sum(exp(v))) with max subtraction. Safe for entries of any magnitude;
// returns -inf for an all--inf input.
inline double log_sum_exp(const VecView& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// Overwrites v with softmax(v), computed with max subtraction so the result
// depends only on the pairwise differences of the inputs.
inline void softmax_inplace(VecRef v) {
  const double m = v.maxCoeff();
  v = (v.array() - m).exp();
  v /= v.sum();
}

inline bool all_finite(const VecView& v) { return v.allFinite(); }

}  // namespace scoremc
