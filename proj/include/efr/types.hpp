#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace efr {

using cplx = std::complex<double>;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

// Base for failures of a numerical method on otherwise valid input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Γ₁ + Γ₂ is (numerically) singular: the two Gaussian states are orthogonal.
class OrthogonalStatesError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// ⟨ψ|P²|ψ⟩ fell below the configured overlap floor.
class InsufficientOverlapError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Tr{P_δ(E)} underflows in the requested particle-number sector.
class NoSpectralWeightError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace efr
