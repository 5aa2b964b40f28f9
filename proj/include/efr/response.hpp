#pragma once

#include "efr/filter.hpp"
#include "efr/gaussian.hpp"
#include "efr/series.hpp"

#include <vector>

namespace efr {

// Gaussian-windowed half-line transform settings. sign = −1 selects e^{−iωt},
// +1 selects e^{+iωt}; each caller fixes it for its own quantity.
struct TransformConfig {
  double sigma = 2.0;
  double t_max = 10.0;
  double time_step = 0.05;
  int sign = -1;

  void validate() const;
  std::vector<double> times() const { return uniform_grid(0.0, t_max, time_step); }
};

enum class EchoMethod { determinant, gaussian_trace };

// f(t) = ⟨ψ|e^{−iHt}|ψ⟩.
SeriesRecord loschmidt_echo(const FockState& psi, const QuadraticHamiltonian& h,
                            const std::vector<double>& times,
                            EchoMethod method = EchoMethod::determinant);

enum class CorrelatorMethod { slater, majorana };

// ⟨ψ|e^{iHt₁} A e^{iHt₂} B e^{iHt₃}|ψ⟩. The Slater route needs number-conserving A and B.
cplx three_time_correlator(const FockState& psi, const QuadraticHamiltonian& h,
                           const MajoranaMonomialSum& a, const MajoranaMonomialSum& b, double t1,
                           double t2, double t3, CorrelatorMethod method = CorrelatorMethod::slater);

enum class CommutatorMethod {
  one_body,    // commutator of one-body operators from the filtered density
  correlator,  // double filter sum over three-time correlators (slow reference)
};

struct ResponseOptions {
  FilterOptions filter;
  CommutatorMethod method = CommutatorMethod::one_body;
  int threads = 1;
};

// ⟨ψ|P[x(t), x]P|ψ⟩/⟨ψ|P²|ψ⟩ for a one-body x (site basis) and P = P_δ(E).
SeriesRecord filtered_commutator_trace(const FockState& psi, const QuadraticHamiltonian& h,
                                       const CMat& x, const FilterSpec& spec,
                                       const std::vector<double>& times,
                                       const ResponseOptions& opts = {});

// ⟨{δx(t), δx}⟩ in the filtered state P|ψ⟩ with δx(t) = x(t) − ⟨x(t)⟩; x must be Hermitian.
SeriesRecord filtered_anticommutator_trace(const FockState& psi, const QuadraticHamiltonian& h,
                                           const CMat& x, const FilterSpec& spec,
                                           const std::vector<double>& times,
                                           const ResponseOptions& opts = {});

// The same two quantities in the fixed-filling filter ensemble.
SeriesRecord ensemble_commutator_trace(const QuadraticHamiltonian& h, const CMat& x,
                                       const EnsembleOccupations& occ,
                                       const std::vector<double>& times);
SeriesRecord ensemble_anticommutator_trace(const QuadraticHamiltonian& h, const CMat& x,
                                           const EnsembleOccupations& occ,
                                           const std::vector<double>& times);

// Trapezoid ∫₀^{t_max} dt e^{sign·iωt} e^{−t²/2σ²} s(t) on the series' own grid.
SeriesRecord fourier_half_line(const SeriesRecord& series, const TransformConfig& cfg,
                               const std::vector<double>& omegas);

// Λ(ω) = −i ∫₀^∞ dt e^{−iωt} e^{−t²/2σ²} ⟨[j(t), j]⟩ (cfg.sign is ignored).
SeriesRecord lambda_frequency(const SeriesRecord& commutator, const TransformConfig& cfg,
                              const std::vector<double>& omegas);

// One-body operator Λ̂(ω) with Λ(ω) = ⟨Λ̂(ω)⟩ for every state, using the same
// trapezoid rule as lambda_frequency on the grid of cfg.
CMat response_operator(const QuadraticHamiltonian& h, const CMat& current,
                       const TransformConfig& cfg, double omega);

// π[(Λ̂ + Λ̂†)/2 − K]: its expectation value is the Drude weight at ω.
CMat drude_operator(const QuadraticHamiltonian& h, const CMat& current, const CMat& kinetic,
                    const TransformConfig& cfg, double omega);

struct ConductivityResult {
  double drude = 0.0;        // at ω_min
  double drude_check = 0.0;  // at 2ω_min
  bool converged = true;
  SeriesRecord regular;      // −Im Λ(ω)/ω, ω = 0 excluded
};

ConductivityResult conductivity(const SeriesRecord& lambda, double kinetic_expectation,
                                double omega_min = 0.01);

// D at ω_min and 2ω_min agree to 5% of the larger magnitude (with a small absolute floor).
bool drude_converged(double d1, double d2, double floor);

// (1/T)∫₀^T s(t) dt by trapezoid.
cplx time_average(const SeriesRecord& series, double horizon);

// Centered boxcar of width `window`; points whose window leaves the grid are dropped.
SeriesRecord moving_average(const SeriesRecord& series, double window);

}  // namespace efr
