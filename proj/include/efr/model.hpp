#pragma once

#include "efr/gaussian.hpp"

#include <cstdint>
#include <string>
#include <utility>

namespace efr {

enum class PotentialKind { mosaic_aa, aa, anderson };

PotentialKind parse_potential_kind(const std::string& name);
std::string to_string(PotentialKind kind);

inline constexpr double kGoldenRatio = 1.6180339887498948482;

// Periodic chain with hopping −J and onsite −λ ε_n (sites numbered from 1 in ε_n).
struct ModelSpec {
  int sites = 34;
  double hopping = 1.0;
  double strength = 2.0;
  double beta = kGoldenRatio;
  double phase = 0.0;
  int period = 2;
  PotentialKind kind = PotentialKind::mosaic_aa;
  std::uint64_t seed = 0;

  void validate() const;
};

// ε_n for n = 1..N (index 0 holds ε_1).
RVec onsite_profile(const ModelSpec& spec);

// Single-particle matrices. `allow_two_sites` treats N = 2 as one bond.
CMat hopping_matrix(const ModelSpec& spec, bool allow_two_sites = false);
CMat current_matrix(const ModelSpec& spec, bool allow_two_sites = false);
CMat kinetic_matrix(const ModelSpec& spec, bool allow_two_sites = false);

QuadraticHamiltonian build_hamiltonian(const ModelSpec& spec);
MajoranaMonomialSum current_operator(const ModelSpec& spec);
MajoranaMonomialSum kinetic_operator(const ModelSpec& spec);

struct SingleParticleSpectrum {
  RVec energies;
  CMat vectors;
};

SingleParticleSpectrum single_particle_spectrum(const QuadraticHamiltonian& h);

// N₀ fermions on distinct odd sites (1-based numbering), drawn by a seeded shuffle.
FockState random_odd_site_state(int sites, int particles, std::uint64_t seed);

std::pair<double, double> mobility_edges(double hopping, double strength);

double inverse_participation_ratio(const CVec& v, double norm_tol = 1e-8);

}  // namespace efr
