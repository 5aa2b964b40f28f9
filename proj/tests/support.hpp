#pragma once

#include "efr/ed_oracle.hpp"
#include "efr/gaussian.hpp"
#include "efr/model.hpp"

#include <random>
#include <vector>

namespace testing {

using namespace efr;

inline ModelSpec chain(int sites, double strength = 2.0) {
  ModelSpec s;
  s.sites = sites;
  s.strength = strength;
  return s;
}

// Hermitian matrix with entries uniform in the unit square.
inline CMat random_hermitian(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(u(rng), u(rng));
  return 0.5 * (m + m.adjoint());
}

inline RMat random_orthogonal(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  RMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  Eigen::HouseholderQR<RMat> qr(m);
  return qr.householderQ();
}

inline double max_abs(const CMat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Pure state |v⟩⟨v| as a density matrix.
inline CMat projector(const CVec& v) { return v * v.adjoint(); }

}  // namespace testing
