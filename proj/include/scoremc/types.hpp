#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace scoremc {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Read-only view over any contiguous-inner-stride vector expression.
using VecView = Eigen::Ref<const Vector>;
using VecRef = Eigen::Ref<Vector>;

// Caller passed something malformed (bad dimension, invalid parameter).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A score estimate could not be formed (non-finite oracle value).
struct EstimationError : std::runtime_error {
  explicit EstimationError(const std::string& what, Index index = -1)
      : std::runtime_error(what), index(index) {}
  Index index;  // offending sample index, -1 if not applicable
};

// The reverse-SDE state left the finite domain.
struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Quadrature grid does not cover the integrand's support.
struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kVersion = "0.1.0";

}  // namespace scoremc
