#pragma once

#include "efr/types.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace efr {

// H = Σ h_nm a†_n a_m + offset. The eigendecomposition of h is computed once
// at construction; copies share nothing mutable.
class QuadraticHamiltonian {
 public:
  explicit QuadraticHamiltonian(CMat h, double offset = 0.0, double hermiticity_tol = 1e-12);

  Eigen::Index sites() const { return h_.rows(); }
  const CMat& matrix() const { return h_; }
  double offset() const { return offset_; }
  // Ascending single-particle energies and the matching orthonormal columns.
  const RVec& energies() const { return energies_; }
  const CMat& modes() const { return modes_; }

  // Single-particle propagator e^{-iht}.
  CMat propagator(double t) const;
  // Rows `rows` and columns `cols` of e^{-iht} (cheaper than the full matrix).
  CMat propagator_block(double t, std::span<const int> rows, std::span<const int> cols) const;

 private:
  CMat h_;
  double offset_;
  RVec energies_;
  CMat modes_;
};

class FockState {
 public:
  FockState(int sites, std::vector<int> occupied);
  static FockState from_bits(std::string_view bits);

  int sites() const { return sites_; }
  int particles() const { return static_cast<int>(occupied_.size()); }
  bool occupied(int site) const;
  const std::vector<int>& occupied_sites() const { return occupied_; }
  std::vector<int> empty_sites() const;
  std::string bits() const;
  // The state with the fermion on `from` moved to the empty site `to`.
  FockState moved(int from, int to) const;
  // N×N₀ matrix whose columns are the occupied site orbitals.
  CMat orbitals() const;

  friend bool operator==(const FockState&, const FockState&) = default;
  friend auto operator<=>(const FockState&, const FockState&) = default;

 private:
  int sites_;
  std::vector<int> occupied_;
};

struct FockStateHash {
  std::size_t operator()(const FockState& s) const noexcept;
};

// All C(N, N₀) Fock states of a sector in lexicographic order of occupied sites.
std::vector<FockState> enumerate_sector(int sites, int particles);

class MajoranaCovariance {
 public:
  explicit MajoranaCovariance(RMat gamma, double antisymmetry_tol = 1e-12);

  const RMat& matrix() const { return gamma_; }
  Eigen::Index modes() const { return gamma_.rows(); }
  Eigen::Index sites() const { return gamma_.rows() / 2; }
  // max |Γ² + 1|; zero for pure states.
  double purity_defect() const;

 private:
  RMat gamma_;
};

struct MajoranaTerm {
  cplx coefficient;
  int first;
  int second;
};

// Number-conserving one-body form Σ c_nm a†_n a_m + constant.
struct OneBodyForm {
  CMat matrix;
  cplx constant;
  double pairing_norm;  // size of the discarded a a / a† a† part
};

// A = constant + Σ c ξ_first ξ_second with first < second after normalization.
class MajoranaMonomialSum {
 public:
  MajoranaMonomialSum(int sites, cplx constant, const std::vector<MajoranaTerm>& terms);

  static MajoranaMonomialSum identity(int sites);
  // Σ c_nm a†_n a_m + constant rewritten in Majorana modes.
  static MajoranaMonomialSum from_one_body(const CMat& c, cplx constant = 0.0);

  int sites() const { return sites_; }
  cplx constant() const { return constant_; }
  const std::vector<MajoranaTerm>& terms() const { return terms_; }

  // Upper-triangular 2N×2N coefficient matrix α with A = const + Σ_{a<b} α_ab ξ_a ξ_b.
  CMat coefficients() const;
  // Heisenberg image under the orthogonal map ξ → Oξ.
  MajoranaMonomialSum rotated(const RMat& o) const;
  bool is_hermitian(double tol = 1e-12) const;
  OneBodyForm one_body() const;

  // const + Σ α_ab G_ab for a full two-point matrix G_ab = ⟨ξ_a ξ_b⟩.
  cplx contract(const CMat& two_point) const;
  cplx expectation(const MajoranaCovariance& gamma) const;

 private:
  int sites_;
  cplx constant_;
  std::vector<MajoranaTerm> terms_;
};

MajoranaCovariance fock_covariance(const FockState& state);
RMat orthogonal_evolution(const QuadraticHamiltonian& h, double t);
MajoranaCovariance evolve_covariance(const MajoranaCovariance& gamma, const RMat& o);

// tr[ρ ξ_{i1} ⋯ ξ_{iK}] for strictly increasing indices.
cplx wick_expectation(const MajoranaCovariance& gamma, std::span<const int> indices);

// Two-point data of the mixed product ρ₂ρ₁ of two pure Gaussian states.
struct MixedTwoPoint {
  double weight;     // Tr[ρ₂ρ₁]
  CMat two_point;    // Tr[ρ₂ρ₁ ξ_a ξ_b] / Tr[ρ₂ρ₁], diagonal set to 1
};

MixedTwoPoint mixed_two_point(const MajoranaCovariance& g1, const MajoranaCovariance& g2,
                              double singular_tol = 1e-12);

// Tr[ρ₂ρ₁ ξ_{i1} ⋯ ξ_{iK}] (the empty list gives Tr[ρ₂ρ₁]).
cplx two_state_overlap_trace(const MajoranaCovariance& g1, const MajoranaCovariance& g2,
                             std::span<const int> indices, double singular_tol = 1e-12);

// Tr[e^{-iHt}] over the full Fock space.
cplx gaussian_trace_phase(const QuadraticHamiltonian& h, double t);

// C_nm = ⟨a†_n a_m⟩ of a number-conserving Gaussian state.
CMat correlation_matrix(const MajoranaCovariance& gamma);

// Tr[ρ e^{-iHt}] for a number-conserving Gaussian state ρ.
cplx density_trace_evolution(const MajoranaCovariance& gamma, const QuadraticHamiltonian& h,
                             double t);

// ⟨(A)(B)⟩ for quadratic A, B given a full two-point matrix G of a Gaussian
// (possibly mixed-product) state.
cplx contract_product(const MajoranaMonomialSum& a, const MajoranaMonomialSum& b,
                      const CMat& two_point);

}  // namespace efr
