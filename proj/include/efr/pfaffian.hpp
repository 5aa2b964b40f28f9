#pragma once

#include "efr/types.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace efr {

// Pfaffian of a skew-symmetric matrix by Parlett-Reid elimination with
// partial pivoting. Works for real and complex scalars.
template <typename Derived>
typename Derived::Scalar pfaffian(const Eigen::MatrixBase<Derived>& input,
                                  double skew_tol = 1e-10) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = input.rows();
  if (input.cols() != n) throw std::invalid_argument("pfaffian: matrix must be square");
  if (n % 2 != 0) throw std::invalid_argument("pfaffian: odd dimension");
  if (n == 0) return Scalar(1);

  Mat a = input;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a + a.transpose()).cwiseAbs().maxCoeff() > skew_tol * scale)
    throw std::invalid_argument("pfaffian: matrix is not skew-symmetric");

  Scalar pf(1);
  for (Eigen::Index k = 0; k + 1 < n; k += 2) {
    Eigen::Index kp = 0;
    a.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&kp);
    kp += k + 1;
    if (kp != k + 1) {
      a.row(k + 1).swap(a.row(kp));
      a.col(k + 1).swap(a.col(kp));
      pf = -pf;
    }
    if (a(k + 1, k) == Scalar(0)) return Scalar(0);
    pf *= a(k, k + 1);
    const Eigen::Index rest = n - k - 2;
    if (rest > 0) {
      const auto tau = (a.row(k).tail(rest) / a(k, k + 1)).eval();
      const auto col = a.col(k + 1).tail(rest).eval();
      a.bottomRightCorner(rest, rest) +=
          tau.transpose() * col.transpose() - col * tau;
    }
  }
  return pf;
}

}  // namespace efr
