#include "efr/slater.hpp"

#include <stdexcept>

namespace efr {

SlaterTransition::SlaterTransition(const CMat& bra, const CMat& ket) {
  if (bra.rows() != ket.rows() || bra.cols() != ket.cols())
    throw std::invalid_argument("SlaterTransition: orbital shapes differ");
  const Eigen::Index p = bra.cols();
  skip_one_ = RVec::Ones(p);
  skip_two_ = RMat::Zero(p, p);
  if (p == 0) {
    u_ = bra;
    v_ = ket;
    return;
  }
  const CMat m = bra.adjoint() * ket;
  Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RVec& s = svd.singularValues();
  phase_ = svd.matrixU().determinant() * std::conj(svd.matrixV().determinant());
  u_ = bra * svd.matrixU();
  v_ = ket * svd.matrixV();
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (j != i) skip_one_(i) *= s(j);
      if (j == i) continue;
      double prod = 1.0;
      for (Eigen::Index l = 0; l < p; ++l)
        if (l != i && l != j) prod *= s(l);
      skip_two_(i, j) = prod;
    }
  }
  double all = 1.0;
  for (Eigen::Index i = 0; i < p; ++i) all *= s(i);
  overlap_ = phase_ * all;
}

CMat SlaterTransition::one_body() const {
  return phase_ * u_.conjugate() * skip_one_.cast<cplx>().asDiagonal() * v_.transpose();
}

cplx SlaterTransition::one_body(const CMat& x) const {
  // Σ_ab x_ab conj(u_ai) v_bi = (u† x v)_ii
  const CMat s = u_.adjoint() * x * v_;
  cplx acc = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) acc += skip_one_(i) * s(i, i);
  return phase_ * acc;
}

CMat SlaterTransition::pair_part(const CMat& x) const {
  const Eigen::Index p = u_.cols();
  if (p < 2) return CMat::Zero(u_.rows(), u_.rows());
  const CMat s = u_.adjoint() * x * v_;
  CMat core = CMat::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    cplx diag = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (j == i) continue;
      diag += skip_two_(i, j) * s(j, j);
      core(i, j) = -skip_two_(i, j) * s(j, i);
    }
    core(i, i) = diag;
  }
  return phase_ * u_.conjugate() * core * v_.transpose();
}

CMat SlaterTransition::two_body_right(const CMat& x) const {
  return one_body() * x.transpose() + pair_part(x);
}

CMat SlaterTransition::two_body_left(const CMat& x) const {
  return x.transpose() * one_body() + pair_part(x);
}

}  // namespace efr
