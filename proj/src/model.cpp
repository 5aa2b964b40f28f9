#include "efr/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace efr {

PotentialKind parse_potential_kind(const std::string& name) {
  if (name == "mosaic-aa") return PotentialKind::mosaic_aa;
  if (name == "aa") return PotentialKind::aa;
  if (name == "anderson") return PotentialKind::anderson;
  throw std::invalid_argument("unknown potential kind '" + name + "'");
}

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::mosaic_aa: return "mosaic-aa";
    case PotentialKind::aa: return "aa";
    case PotentialKind::anderson: return "anderson";
  }
  return "unknown";
}

void ModelSpec::validate() const {
  if (sites < 2) throw std::invalid_argument("ModelSpec: need N >= 2");
  if (period < 1) throw std::invalid_argument("ModelSpec: mosaic period must be >= 1");
  if (!(hopping > 0.0) || !std::isfinite(hopping)) throw std::invalid_argument("ModelSpec: J must be > 0");
  if (!std::isfinite(strength) || !std::isfinite(beta) || !std::isfinite(phase))
    throw std::invalid_argument("ModelSpec: non-finite parameter");
}

RVec onsite_profile(const ModelSpec& spec) {
  spec.validate();
  RVec eps = RVec::Zero(spec.sites);
  if (spec.kind == PotentialKind::anderson) {
    std::mt19937_64 rng(spec.seed);
    for (int i = 0; i < spec.sites; ++i) {
      // 53-bit uniform in [0, 1) mapped to [−1, 1); independent of the library's distributions
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      eps(i) = 2.0 * u - 1.0;
    }
    return eps;
  }
  const int kappa = spec.kind == PotentialKind::aa ? 1 : spec.period;
  for (int n = 1; n <= spec.sites; ++n)
    if (n % kappa == 0) eps(n - 1) = std::cos(2.0 * kPi * spec.beta * n + spec.phase);
  return eps;
}

namespace {

// Calls f(n, m) for each nearest-neighbour link n → m = n+1 (with wrap).
template <typename F>
void for_each_link(const ModelSpec& spec, bool allow_two_sites, F&& f) {
  spec.validate();
  const int n = spec.sites;
  if (n == 2 && !allow_two_sites)
    throw std::invalid_argument("periodic chain needs N >= 3 (N = 2 would double the bond)");
  const int links = (n == 2) ? 1 : n;
  for (int i = 0; i < links; ++i) f(i, (i + 1) % n);
}

}  // namespace

CMat hopping_matrix(const ModelSpec& spec, bool allow_two_sites) {
  CMat h = CMat::Zero(spec.sites, spec.sites);
  for_each_link(spec, allow_two_sites, [&](int a, int b) {
    h(a, b) = -spec.hopping;
    h(b, a) = -spec.hopping;
  });
  h.diagonal() = (-spec.strength * onsite_profile(spec)).cast<cplx>();
  return h;
}

CMat current_matrix(const ModelSpec& spec, bool allow_two_sites) {
  CMat c = CMat::Zero(spec.sites, spec.sites);
  // j = iJ Σ (a†_{n+1} a_n − a†_n a_{n+1})
  for_each_link(spec, allow_two_sites, [&](int a, int b) {
    c(b, a) += cplx(0.0, spec.hopping);
    c(a, b) -= cplx(0.0, spec.hopping);
  });
  return c;
}

CMat kinetic_matrix(const ModelSpec& spec, bool allow_two_sites) {
  CMat c = CMat::Zero(spec.sites, spec.sites);
  for_each_link(spec, allow_two_sites, [&](int a, int b) {
    c(b, a) -= spec.hopping;
    c(a, b) -= spec.hopping;
  });
  return c;
}

QuadraticHamiltonian build_hamiltonian(const ModelSpec& spec) {
  return QuadraticHamiltonian(hopping_matrix(spec));
}

MajoranaMonomialSum current_operator(const ModelSpec& spec) {
  return MajoranaMonomialSum::from_one_body(current_matrix(spec));
}

MajoranaMonomialSum kinetic_operator(const ModelSpec& spec) {
  return MajoranaMonomialSum::from_one_body(kinetic_matrix(spec));
}

SingleParticleSpectrum single_particle_spectrum(const QuadraticHamiltonian& h) {
  return {h.energies(), h.modes()};
}

std::pair<double, double> mobility_edges(double hopping, double strength) {
  if (strength == 0.0) throw std::invalid_argument("mobility_edges: lambda must be nonzero");
  const double e = std::abs(hopping / strength);
  return {-e, e};
}

double inverse_participation_ratio(const CVec& v, double norm_tol) {
  if (std::abs(v.squaredNorm() - 1.0) > norm_tol)
    throw std::invalid_argument("inverse_participation_ratio: vector is not normalized");
  return v.cwiseAbs2().cwiseAbs2().sum();
}

FockState random_odd_site_state(int sites, int particles, std::uint64_t seed) {
  std::vector<int> odd;
  for (int i = 0; i < sites; i += 2) odd.push_back(i);
  if (particles < 0 || particles > static_cast<int>(odd.size()))
    throw std::invalid_argument("random_odd_site_state: too many particles for the odd sites");
  std::mt19937_64 rng(seed);
  for (std::size_t i = odd.size(); i > 1; --i) std::swap(odd[i - 1], odd[rng() % i]);
  odd.resize(particles);
  std::sort(odd.begin(), odd.end());
  return FockState(sites, odd);
}

}  // namespace efr
