#pragma once

#include "efr/gaussian.hpp"
#include "efr/model.hpp"
#include "efr/series.hpp"

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

namespace efr {

// Eigendecomposition of a dense Hermitian matrix with spectral calculus.
class DenseSpectrum {
 public:
  DenseSpectrum() = default;
  explicit DenseSpectrum(const CMat& hermitian);

  const RVec& energies() const { return energies_; }
  const CMat& vectors() const { return vectors_; }
  CMat function(const std::function<cplx(double)>& f) const;
  CMat propagator(double t) const;  // e^{-iHt}

 private:
  RVec energies_;
  CMat vectors_;
};

// Jordan-Wigner operators on the full 2^N Fock space. Basis index bit j is
// the occupation of site j; a_j carries the sign (−1)^{#occupied sites < j}.
class FockSpace {
 public:
  explicit FockSpace(int sites, int max_sites = 12);

  int sites() const { return sites_; }
  Eigen::Index dimension() const { return Eigen::Index{1} << sites_; }

  CMat annihilator(int site) const;
  CMat majorana(int mode) const;
  CMat one_body(const CMat& c, cplx constant = 0.0) const;
  CMat observable(const MajoranaMonomialSum& a) const;
  CMat hamiltonian(const QuadraticHamiltonian& h) const;
  CMat number() const;
  CVec basis_vector(const FockState& s) const;

 private:
  int sites_;
};

// Dense Hamiltonian restricted to the sector with a fixed particle number.
class DenseSector {
 public:
  DenseSector(const CMat& h, double offset, int particles, std::size_t cap = 2000);

  int sites() const { return sites_; }
  int particles() const { return particles_; }
  Eigen::Index dimension() const { return static_cast<Eigen::Index>(basis_.size()); }
  const std::vector<FockState>& basis() const { return basis_; }
  const CMat& hamiltonian() const { return hamiltonian_; }
  const DenseSpectrum& spectrum() const { return spectrum_; }
  const RVec& energies() const { return spectrum_.energies(); }
  const CMat& eigenvectors() const { return spectrum_.vectors(); }

  Eigen::Index index_of(const FockState& s) const;
  CVec vector(const FockState& s) const;
  // Σ c_nm a†_n a_m + constant restricted to the sector.
  CMat one_body(const CMat& c, cplx constant = 0.0) const;
  // Number-conserving part of a Majorana observable (pairing terms leave the sector).
  CMat observable(const MajoranaMonomialSum& a) const;
  CMat propagator(double t) const { return spectrum_.propagator(t); }

 private:
  int sites_;
  int particles_;
  std::vector<FockState> basis_;
  std::vector<std::uint64_t> masks_;
  std::unordered_map<std::uint64_t, Eigen::Index> lookup_;
  CMat hamiltonian_;
  DenseSpectrum spectrum_;
};

// Sector of the model chain; N = 2 is a single bond here.
DenseSector build_sector(const ModelSpec& spec, int particles, std::size_t cap = 2000);

// (2πδ²)^{-1/2} exp(−(H−E)²/2δ²) of a dense spectrum.
CMat gaussian_filter(const DenseSpectrum& spectrum, double energy, double width);

// Filtered value ⟨ψ|P A P|ψ⟩/⟨ψ|P²|ψ⟩ with the exact Gaussian filter.
double exact_filtered_value(const DenseSector& sector, const FockState& psi, const CMat& a,
                            double energy, double width);
cplx exact_filtered_value_complex(const DenseSector& sector, const FockState& psi, const CMat& a,
                                  double energy, double width);

// ⟨ψ|e^{iHt₁} A e^{iHt₂} B e^{iHt₃}|ψ⟩ by dense algebra.
cplx dense_three_time(const DenseSector& sector, const FockState& psi, const CMat& a, const CMat& b,
                      double t1, double t2, double t3);

// Λ(ω) = −i ∫₀^∞ dt e^{−iωt} e^{−t²/2σ²} Tr(ρ₀[j(t), j]) as a Lehmann sum.
SeriesRecord lehmann_lambda(const DenseSector& sector, const CMat& rho0, const CMat& current,
                            const std::vector<double>& omegas, double sigma);

// ∫₀^∞ e^{iνt} e^{−t²/2σ²} dt in closed form.
cplx gaussian_half_line(double nu, double sigma);

struct PerturbationSpec {
  std::function<double(double)> profile;  // g(t) / strength
  double strength = 1e-2;
  CMat coupling;  // B in the sector
  CMat rho0;      // initial density matrix in the sector
};

struct KuboResult {
  std::vector<double> times;
  std::vector<double> exact;
  std::vector<double> linear;
  double max_deviation = 0.0;
};

KuboResult kubo_check(const DenseSector& sector, const PerturbationSpec& pert, const CMat& a,
                      const std::vector<double>& times, double max_step = 0.0);

// χ_AB(t, t′) = −i θ(t − t′) Tr(ρ₀[A(t), B(t′)]).
cplx dense_susceptibility(const DenseSector& sector, const CMat& rho0, const CMat& a, const CMat& b,
                          double t, double t_prime);

struct CircuitIdentityReport {
  cplx product;      // two-copy evaluation
  cplx correlator;   // C^AB_ψ
  cplx echo;         // f_ψ(t₁ + t₂ + t₃)
  double factorization_deviation;
  double recovery_deviation;
};

CircuitIdentityReport circuit_c_identity_check(const DenseSector& sector, const FockState& psi,
                                               const CMat& a, const CMat& b, double t1, double t2,
                                               double t3);

}  // namespace efr
