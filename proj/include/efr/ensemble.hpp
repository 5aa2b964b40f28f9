#pragma once

#include "efr/filter.hpp"
#include "efr/gaussian.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace efr {

struct StateWeight {
  double value = 0.0;  // max(raw, 0)
  double raw = 0.0;    // Σ_k w_k f_ψ(t_k)
  bool clipped = false;
};

// ⟨ψ|P_δ(E)|ψ⟩ from the single filter sum over the Loschmidt echo.
StateWeight state_weight(const FockState& psi, const FilterSpec& spec, const QuadraticHamiltonian& h);

// Contour shift t → t − iβ₀ for filters centred at `energy` in the sector with
// `particles` fermions. β₀ = 0 is the plain real-time contour.
struct ContourTilt {
  double beta = 0.0;
  double energy = 0.0;
  int particles = 0;
};

// Saddle tilt for `spec` in the sector, reduced so that the periodic images of the
// Riemann sum, amplified by e^{β₀·2πn/Δt}, stay below e^{−40} of the window peak for
// the sampler filter and for the √2-wider estimator filters (β₀/2 each).
ContourTilt contour_tilt(const QuadraticHamiltonian& h, int particles, const FilterSpec& spec);

// Single-particle propagators e^{−ihτ_m} on τ_m = mΔt, |m| ≤ M. With a tilt the
// entries are e^{−ihτ_m − β₀(h − s)}, s = (E − offset)/N₀, so that the echo becomes
// ⟨ψ|e^{−iHτ_m} e^{−β₀(H − E)}|ψ⟩.
class PropagatorTable {
 public:
  PropagatorTable(const QuadraticHamiltonian& h, double time_step, int max_index, int threads = 1,
                  ContourTilt tilt = {});

  double time_step() const { return time_step_; }
  int max_index() const { return max_index_; }
  const ContourTilt& tilt() const { return tilt_; }
  const CMat& operator[](int m) const { return table_[static_cast<std::size_t>(m + max_index_)]; }
  // e^{−i·offset·τ_m} from the constant part of H.
  cplx phase(int m) const { return std::exp(cplx(0.0, -offset_ * m * time_step_)); }
  // ⟨ψ|e^{−iHτ_m}|ψ⟩ including the constant offset.
  cplx echo(const FockState& psi, int m) const;

 private:
  double time_step_;
  int max_index_;
  double offset_;
  ContourTilt tilt_;
  std::vector<CMat> table_;
};

// Weights ⟨ψ|P_δ(E)|ψ⟩ of many Fock states for one filter, sharing a propagator table.
// On a tilted table P_δ(E) = e^{β₀²δ²/2} e^{−β₀(H−E)} P_δ(E + β₀δ²), which keeps the
// discretization error of the sum relative to each weight rather than to the peak.
class WeightEvaluator {
 public:
  WeightEvaluator(std::shared_ptr<const PropagatorTable> table, const FilterSpec& spec);

  StateWeight operator()(const FockState& psi) const;
  const FilterSpec& spec() const { return spec_; }
  const PropagatorTable& table() const { return *table_; }
  const FilterWeights& weights() const { return weights_; }

 private:
  std::shared_ptr<const PropagatorTable> table_;
  FilterSpec spec_;
  FilterWeights weights_;
};

// ⟨ψ|P X P|ψ⟩/⟨ψ|P²|ψ⟩ for a fixed set of one-body observables X and Fock states ψ,
// where P has width `width`. On a plain table P may be centred at any energy E: it
// only enters as a phase e^{iEτ_m} on the transitions, so one instance serves a whole
// energy scan. On a table tilted by β₀ at energy E each filter is evaluated as
// e^{β²δ²/2} e^{−β(H−E)} P(E + βδ²) with β = β₀/2, and only that E is accepted.
// The bra is the Fock state itself, so each transition needs only the occupied
// block of a precomputed N×N matrix.
class FilteredObservableEstimator {
 public:
  FilteredObservableEstimator(std::shared_ptr<const PropagatorTable> table, const QuadraticHamiltonian& h,
                              double width, int cutoff, std::vector<CMat> observables, int threads = 1);

  struct Transitions {
    std::vector<cplx> echo;                  // per m
    std::vector<std::vector<cplx>> traces;   // per observable, per m
  };
  struct Value {
    double norm = 0.0;          // ⟨ψ|P²|ψ⟩
    double contour_norm = 0.0;  // the same sum on the tilted contour, where the quadrature error is absolute
    std::vector<cplx> values;
  };

  int cutoff() const { return cutoff_; }
  double width() const { return width_; }
  std::size_t observables() const { return constants_.size(); }
  Transitions transitions(const FockState& psi) const;
  Value combine(const Transitions& tr, double energy) const;
  Value evaluate(const FockState& psi, double energy) const { return combine(transitions(psi), energy); }

 private:
  std::shared_ptr<const PropagatorTable> table_;
  double width_;
  int cutoff_;
  double offset_;
  double beta_;
  double energy_;
  std::vector<double> norm_weights_;     // Σ_k g_k g_{m−k}
  std::vector<std::vector<CMat>> kernels_;  // per observable, per m: Y_m e^{−ihτ_m}
  std::vector<cplx> constants_;
};

enum class Proposal { single_fermion_move };

struct SamplerConfig {
  FilterSpec target;
  int particles = 1;
  int chains = 8;
  int samples_per_chain = 125;
  int burn_in = -1;  // −1: 10·N moves
  int stride = -1;   // −1: N moves
  std::uint64_t seed = 0;
  int retries = 100;
  Proposal proposal = Proposal::single_fermion_move;
  int threads = 1;

  int resolved_burn_in(int sites) const { return burn_in < 0 ? 10 * sites : burn_in; }
  int resolved_stride(int sites) const { return stride < 0 ? sites : stride; }
  long long chain_length(int sites) const {
    return resolved_burn_in(sites) + static_cast<long long>(resolved_stride(sites)) * samples_per_chain;
  }
  void validate(int sites) const;
};

struct ChainDiagnostics {
  double acceptance_rate = 0.0;
  double mean_energy = 0.0;       // of ⟨ψ|H|ψ⟩ over retained samples
  double energy_std = 0.0;
  double autocorrelation_time = 1.0;  // integrated, in retained samples
  int clipped_weights = 0;
  int redraws = 0;
  bool fallback_start = false;
};

struct SampleSet {
  std::vector<FockState> states;
  std::vector<int> chain;  // chain index of each state
  std::vector<ChainDiagnostics> diagnostics;
};

// Metropolis rule min(1, p_new/p_old); a move out of a zero-weight state is always accepted.
double acceptance_probability(double p_old, double p_new);

// Metropolis chains with stationary distribution ∝ ⟨ψ|P_δ(E)|ψ⟩ at fixed filling.
SampleSet mh_sample(const SamplerConfig& cfg, const QuadraticHamiltonian& h);
// Same with a caller-provided weight (shared tables across energies).
SampleSet mh_sample(const SamplerConfig& cfg, const QuadraticHamiltonian& h, const WeightEvaluator& weight);

// Diagonal energy ⟨ψ|H|ψ⟩.
double diagonal_energy(const FockState& psi, const QuadraticHamiltonian& h);

// Integrated autocorrelation time with the self-consistent window c·τ ≤ W (c = 5).
double integrated_autocorrelation(const std::vector<double>& series);

struct SampledEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  int used = 0;
  int skipped = 0;  // overlap floor failures
};

// Pools per-chain series: mean over all values, variance of the mean from the
// per-chain variance times the integrated autocorrelation time.
SampledEstimate pooled_estimate(const std::vector<double>& values, const std::vector<int>& chain);

// Sample mean of Re A_ψ evaluated with the filter width factor·δ; the ensemble
// identity Tr{A P_δ}/Tr{P_δ} = Σ_ψ p_ψ A_ψ holds for factor √2.
SampledEstimate ensemble_expectation_sampled(const SampleSet& samples, const CMat& a, cplx constant,
                                             const FilterSpec& spec, const QuadraticHamiltonian& h,
                                             double width_factor = 1.4142135623730951,
                                             double overlap_floor = 1e-10);

// Re A_ψ for every sample from a prebuilt estimator (observable `index`).
SampledEstimate ensemble_expectation_sampled(const SampleSet& samples, const FilteredObservableEstimator& est,
                                             std::size_t index, double energy, double overlap_floor = 1e-10);

// Tr{A P_δ(E) δ_N}/Tr{P_δ(E) δ_N} for a one-body A = Σ a_nm a†_n a_m + constant.
double ensemble_expectation_exact(const QuadraticHamiltonian& h, const FilterSpec& spec, const CMat& a,
                                  cplx constant, int particles);
// Pairing terms of A change N and drop out of the sector trace.
double ensemble_expectation_exact(const QuadraticHamiltonian& h, const FilterSpec& spec,
                                  const MajoranaMonomialSum& a, int particles);

// ∫dE e^{−βE} Tr[A P_δ(E) δ_N] / ∫dE e^{−βE} Tr[P_δ(E) δ_N] by trapezoid on `energies`.
double canonical_expectation(const QuadraticHamiltonian& h, const CMat& a, cplx constant, double beta,
                             double width, const std::vector<double>& energies, int particles);

}  // namespace efr
