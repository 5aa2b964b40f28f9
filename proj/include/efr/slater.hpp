#pragma once

#include "efr/types.hpp"

namespace efr {

// Matrix elements ⟨Φ₁| … |Φ₂⟩ between two Slater determinants with the same
// particle number, given as N×N₀ orbital matrices. Built on the SVD of the
// orbital overlap so that (near-)orthogonal pairs stay finite.
class SlaterTransition {
 public:
  SlaterTransition(const CMat& bra, const CMat& ket);

  cplx overlap() const { return overlap_; }
  // T_ab = ⟨Φ₁|a†_a a_b|Φ₂⟩.
  CMat one_body() const;
  // Σ_ab x_ab T_ab without forming T.
  cplx one_body(const CMat& x) const;
  // Z_ab = Σ_cd x_cd ⟨Φ₁|a†_a a_b a†_c a_d|Φ₂⟩.
  CMat two_body_right(const CMat& x) const;
  // Z_cd = Σ_ab x_ab ⟨Φ₁|a†_a a_b a†_c a_d|Φ₂⟩.
  CMat two_body_left(const CMat& x) const;

 private:
  CMat pair_part(const CMat& x) const;

  cplx phase_{1.0};
  cplx overlap_{1.0};
  CMat u_;   // Φ₁U
  CMat v_;   // Φ₂V
  RVec skip_one_;  // ∏_{j≠i} σ_j
  RMat skip_two_;  // ∏_{l≠i,j} σ_l, zero diagonal
};

}  // namespace efr
