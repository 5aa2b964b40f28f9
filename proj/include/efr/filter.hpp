#pragma once

#include "efr/gaussian.hpp"
#include "efr/series.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace efr {

struct FilterSpec {
  double energy = 0.0;
  double width = 1.0;
  double time_step = 0.1;
  int cutoff = 60;

  // Throws unless δ > 0, Δt > 0, K ≥ 1 and KδΔt ≥ 4.
  void validate() const;
  double reach() const { return cutoff * width * time_step; }
  bool well_resolved() const { return reach() >= 6.0; }
  std::string describe() const;

  // Δt = π/(2R), K = ceil(reach/(δΔt)).
  static FilterSpec resolved(double energy, double width, double radius, double reach = 6.0);
};

// Many-body spectral radius of H, over the full Fock space or one filling sector.
double spectral_radius(const QuadraticHamiltonian& h, std::optional<int> filling = std::nullopt);

// w_k for k = −K..K on the grid t_k = kΔt.
class FilterWeights {
 public:
  FilterWeights(double time_step, int cutoff, std::vector<cplx> values);

  double time_step() const { return time_step_; }
  int cutoff() const { return cutoff_; }
  double time(int k) const { return k * time_step_; }
  cplx operator[](int k) const { return values_[static_cast<std::size_t>(k + cutoff_)]; }
  const std::vector<cplx>& values() const { return values_; }
  // Σ_k w_k e^{−iεt_k}: the filter's value at energy ε.
  cplx response(double energy) const;

 private:
  double time_step_;
  int cutoff_;
  std::vector<cplx> values_;
};

FilterWeights riemann_filter_weights(const FilterSpec& spec);
// Weights of the operator product of two filters sharing a time step.
FilterWeights convolve(const FilterWeights& a, const FilterWeights& b);

// (2πδ²)^{-1/2} exp(−(H−E)²/2δ²) for a dense Hermitian matrix.
CMat dense_filter(const CMat& hamiltonian, double energy, double width, Eigen::Index cap = 4096);
// The same on the full Fock space of a quadratic Hamiltonian.
CMat dense_filter(const QuadraticHamiltonian& h, double energy, double width, int max_sites = 12);

enum class OverlapBackend { slater, majorana };

struct FilterOptions {
  double overlap_floor = 1e-10;  // relative to (2πδ²)^{-1}
  OverlapBackend backend = OverlapBackend::slater;
  double singular_tol = 1e-12;
  double echo_floor = 1e-10;
};

// ⟨ψ|e^{−iHt}|ψ⟩ from the occupied block of the single-particle propagator.
cplx fock_echo(const QuadraticHamiltonian& h, const FockState& psi, double t);

// Pure state P|ψ⟩ for a Fock state ψ, resolved in the single-particle eigenbasis.
// All one-body data of the filtered state follows from the transitions
// ⟨ψ| · e^{−iHτ_m}|ψ⟩ on the combined grid τ_m = mΔt, |m| ≤ 2K.
class FilteredFockState {
 public:
  FilteredFockState(const QuadraticHamiltonian& h, const FockState& psi, const FilterWeights& w);

  double norm() const { return norm_; }             // ⟨ψ|P²|ψ⟩
  cplx single_norm() const { return single_norm_; } // ⟨ψ|P|ψ⟩
  // ⟨a†_a a_b⟩ of P|ψ⟩ (normalized) in the eigenmode basis.
  const CMat& mode_density() const { return mode_density_; }
  // Same in the site basis.
  CMat site_density() const;
  // ⟨ψ|P X P|ψ⟩/⟨ψ|P²|ψ⟩ for X = Σ x_nm a†_n a_m + c (site basis).
  cplx expectation(const CMat& x, cplx constant = 0.0) const;
  // Σ_k w_k ⟨ψ|X e^{−iHt_k}|ψ⟩ / Σ_k w_k ⟨ψ|e^{−iHt_k}|ψ⟩.
  cplx single_expectation(const CMat& x, cplx constant = 0.0) const;

 private:
  const QuadraticHamiltonian* h_;
  double norm_ = 0.0;
  cplx single_norm_ = 0.0;
  CMat mode_density_;
  CMat single_numerator_;  // Σ_k w_k T^{(k)} in the mode basis
};

double filtered_expectation(const FockState& psi, const MajoranaMonomialSum& a, const FilterSpec& spec,
                            const QuadraticHamiltonian& h, const FilterOptions& opts = {});
cplx filtered_expectation_complex(const FockState& psi, const MajoranaMonomialSum& a,
                                  const FilterSpec& spec, const QuadraticHamiltonian& h,
                                  const FilterOptions& opts = {});
cplx single_filter_expectation(const FockState& psi, const MajoranaMonomialSum& a,
                               const FilterSpec& spec, const QuadraticHamiltonian& h,
                               const FilterOptions& opts = {});

struct Prefilter {
  double energy;
  double width;
};

// LDOS d(E) ∝ ⟨Ψ|P_η(E)|Ψ⟩ with Ψ = ψ or Ψ = P_δ(Ē)ψ, max-normalized (meta.scale keeps the raw peak).
SeriesRecord ldos(const FockState& psi, const QuadraticHamiltonian& h, const std::vector<double>& energies,
                  double eta, std::optional<Prefilter> prefilter = std::nullopt, double reach = 6.0);

// Mean and standard deviation of a nonnegative curve on its grid (trapezoid).
std::pair<double, double> curve_moments(const SeriesRecord& curve);

// DOS D(E) ∝ Tr{P_ν(E)} over the full space or one sector, max-normalized.
SeriesRecord dos(const QuadraticHamiltonian& h, const std::vector<double>& energies, double nu,
                 std::optional<int> filling = std::nullopt, double reach = 6.0);

struct ProjectorPhase {
  int k;
  cplx phase;    // e^{−i2πkN₀/(N+1)}
  double angle;  // 2πk/(N+1)
};

std::vector<ProjectorPhase> number_projector_phases(int sites, int particles);

enum class ProjectionMethod { fourier, symmetric_polynomial };

// Tr[e^{−iHt} δ_{N̂,N₀} A] (A absent means identity). The pairing part of A has
// zero trace against number-conserving operators and is dropped.
cplx projected_trace(const QuadraticHamiltonian& h, double t, int particles,
                     const MajoranaMonomialSum* a = nullptr,
                     ProjectionMethod method = ProjectionMethod::symmetric_polynomial);

// e_0..e_max of z.
std::vector<cplx> elementary_symmetric(std::span<const cplx> z, int max_degree);

// Filter-ensemble occupations of the eigenmodes at fixed filling:
// n_a = ⟨ã†_a ã_a⟩ and (optionally) nn_ab = ⟨n_a n_b⟩ for P_δ(E) δ_{N̂,N₀}.
// The sector trace is evaluated on the time contour shifted by −iβ₀ (β₀ = `tilt`,
// by default the canonical saddle point of E), which computes the same Gaussian
// filter without the cancellation that the real-time sum suffers near the edges.
struct EnsembleOccupations {
  double trace = 0.0;  // Tr{P δ_N}
  double tilt = 0.0;
  RVec n;
  RMat nn;  // empty unless pairs were requested
};

// Tilt β₀ whose canonical mean energy in the sector is E, capped at |β₀|δ ≤ 3.
double saddle_tilt(const QuadraticHamiltonian& h, int particles, double energy, double width);

EnsembleOccupations ensemble_occupations(const QuadraticHamiltonian& h, const FilterSpec& spec,
                                         int particles, bool pairs,
                                         std::optional<double> tilt = std::nullopt);

}  // namespace efr
