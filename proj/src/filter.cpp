#include "efr/filter.hpp"

#include "efr/ed_oracle.hpp"
#include "efr/slater.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace efr {

void FilterSpec::validate() const {
  if (!(width > 0.0) || !std::isfinite(width)) throw std::invalid_argument("FilterSpec: width must be > 0");
  if (!(time_step > 0.0) || !std::isfinite(time_step))
    throw std::invalid_argument("FilterSpec: time step must be > 0");
  if (cutoff < 1) throw std::invalid_argument("FilterSpec: cutoff must be >= 1");
  if (!std::isfinite(energy)) throw std::invalid_argument("FilterSpec: energy must be finite");
  if (reach() < 4.0) throw std::invalid_argument("FilterSpec: K*delta*dt must be >= 4");
}

std::string FilterSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "E=" << energy << " delta=" << width << " dt=" << time_step << " K=" << cutoff;
  return os.str();
}

FilterSpec FilterSpec::resolved(double energy, double width, double radius, double reach) {
  if (!(radius > 0.0)) throw std::invalid_argument("FilterSpec::resolved: radius must be > 0");
  if (!(width > 0.0)) throw std::invalid_argument("FilterSpec::resolved: width must be > 0");
  FilterSpec s;
  s.energy = energy;
  s.width = width;
  s.time_step = kPi / (2.0 * radius);
  s.cutoff = std::max(1, static_cast<int>(std::ceil(reach / (width * s.time_step) - 1e-9)));
  return s;
}

double spectral_radius(const QuadraticHamiltonian& h, std::optional<int> filling) {
  const RVec& e = h.energies();
  const Eigen::Index n = e.size();
  double base = 0.0;
  if (filling) {
    if (*filling < 0 || *filling > n) throw std::invalid_argument("spectral_radius: bad filling");
    const double low = e.head(*filling).sum();
    const double high = e.tail(*filling).sum();
    base = std::max(std::abs(low), std::abs(high));
  } else {
    double pos = 0.0, neg = 0.0;
    for (double x : e) (x > 0 ? pos : neg) += std::abs(x);
    base = std::max(pos, neg);
  }
  return 1.02 * (std::abs(h.offset()) + base) + 0.05;
}

FilterWeights::FilterWeights(double time_step, int cutoff, std::vector<cplx> values)
    : time_step_(time_step), cutoff_(cutoff), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(2 * cutoff_ + 1))
    throw std::invalid_argument("FilterWeights: expected 2K+1 values");
}

cplx FilterWeights::response(double energy) const {
  cplx acc = 0.0;
  for (int k = -cutoff_; k <= cutoff_; ++k) acc += (*this)[k] * std::exp(cplx(0.0, -energy * time(k)));
  return acc;
}

FilterWeights riemann_filter_weights(const FilterSpec& spec) {
  spec.validate();
  const double dt = spec.time_step;
  const double s = spec.width * dt;
  std::vector<cplx> w(2 * spec.cutoff + 1);
  for (int k = -spec.cutoff; k <= spec.cutoff; ++k) {
    const double mag = dt * std::exp(-0.5 * s * s * k * k) / (2.0 * kPi);
    w[k + spec.cutoff] = mag * std::exp(cplx(0.0, spec.energy * dt * k));
  }
  // exact conjugate symmetry
  for (int k = 1; k <= spec.cutoff; ++k) w[spec.cutoff - k] = std::conj(w[spec.cutoff + k]);
  w[spec.cutoff] = w[spec.cutoff].real();
  return FilterWeights(dt, spec.cutoff, std::move(w));
}

FilterWeights convolve(const FilterWeights& a, const FilterWeights& b) {
  if (std::abs(a.time_step() - b.time_step()) > 1e-14 * a.time_step())
    throw std::invalid_argument("convolve: filters use different time steps");
  const int k = a.cutoff() + b.cutoff();
  std::vector<cplx> out(2 * k + 1, cplx(0.0));
  for (int i = -a.cutoff(); i <= a.cutoff(); ++i)
    for (int j = -b.cutoff(); j <= b.cutoff(); ++j) out[i + j + k] += a[i] * b[j];
  return FilterWeights(a.time_step(), k, std::move(out));
}

CMat dense_filter(const CMat& hamiltonian, double energy, double width, Eigen::Index cap) {
  if (hamiltonian.rows() > cap) throw std::invalid_argument("dense_filter: dimension exceeds cap");
  return gaussian_filter(DenseSpectrum(hamiltonian), energy, width);
}

CMat dense_filter(const QuadraticHamiltonian& h, double energy, double width, int max_sites) {
  const FockSpace space(static_cast<int>(h.sites()), max_sites);
  return dense_filter(space.hamiltonian(h), energy, width, space.dimension());
}

cplx fock_echo(const QuadraticHamiltonian& h, const FockState& psi, double t) {
  const cplx phase = std::exp(cplx(0.0, -h.offset() * t));
  if (psi.particles() == 0) return phase;
  const auto& occ = psi.occupied_sites();
  return phase * h.propagator_block(t, occ, occ).determinant();
}

namespace {

// Orbitals of ψ in the eigenmode basis: column i is U† e_{occ_i}.
CMat mode_orbitals(const QuadraticHamiltonian& h, const FockState& psi) {
  CMat phi(h.sites(), psi.particles());
  for (int i = 0; i < psi.particles(); ++i) phi.col(i) = h.modes().row(psi.occupied_sites()[i]).adjoint();
  return phi;
}

CVec mode_phases(const QuadraticHamiltonian& h, double t) {
  return (h.energies().cast<cplx>() * cplx(0.0, -t)).array().exp();
}

double floor_scale(const FilterSpec& spec) { return 1.0 / (2.0 * kPi * spec.width * spec.width); }

}  // namespace

FilteredFockState::FilteredFockState(const QuadraticHamiltonian& h, const FockState& psi,
                                     const FilterWeights& w)
    : h_(&h) {
  if (psi.sites() != h.sites()) throw std::invalid_argument("FilteredFockState: size mismatch");
  const Eigen::Index n = h.sites();
  const int k_max = w.cutoff();
  const double dt = w.time_step();
  const CMat phi = mode_orbitals(h, psi);

  // Transitions ⟨ψ| a†_a a_b e^{−iHτ_m}|ψ⟩ for m = −2K..2K.
  std::vector<CMat> trans(4 * k_max + 1);
  std::vector<cplx> echo(4 * k_max + 1);
  for (int m = -2 * k_max; m <= 2 * k_max; ++m) {
    const double tau = m * dt;
    const cplx off = std::exp(cplx(0.0, -h.offset() * tau));
    const SlaterTransition tr(phi, mode_phases(h, tau).asDiagonal() * phi);
    trans[m + 2 * k_max] = off * tr.one_body();
    echo[m + 2 * k_max] = off * tr.overlap();
  }

  CMat numerator = CMat::Zero(n, n);
  cplx norm = 0.0;
  single_numerator_ = CMat::Zero(n, n);
  single_norm_ = 0.0;
  for (int k = -k_max; k <= k_max; ++k) {
    CMat v = CMat::Zero(n, n);
    cplx ve = 0.0;
    for (int kp = -k_max; kp <= k_max; ++kp) {
      v.noalias() += w[kp] * trans[k + kp + 2 * k_max];
      ve += w[kp] * echo[k + kp + 2 * k_max];
    }
    // ⟨ψ|e^{−iHt_k} X e^{−iHt_k′}|ψ⟩ = ⟨ψ|X_H(−t_k) e^{−iHτ}|ψ⟩: rotate by e^{−i(ε_a−ε_b)t_k}
    const CVec d = mode_phases(h, w.time(k));
    numerator.noalias() += w[k] * (d.asDiagonal() * v * d.conjugate().asDiagonal());
    norm += w[k] * ve;
    single_numerator_.noalias() += w[k] * trans[k + 2 * k_max];
    single_norm_ += w[k] * echo[k + 2 * k_max];
  }
  norm_ = norm.real();
  mode_density_ = norm_ != 0.0 ? CMat(numerator / norm_) : CMat(numerator);
}

CMat FilteredFockState::site_density() const {
  const CMat& u = h_->modes();
  return u.conjugate() * mode_density_ * u.transpose();
}

cplx FilteredFockState::expectation(const CMat& x, cplx constant) const {
  const CMat xt = h_->modes().adjoint() * x * h_->modes();
  return (xt.array() * mode_density_.array()).sum() + constant;
}

cplx FilteredFockState::single_expectation(const CMat& x, cplx constant) const {
  const CMat xt = h_->modes().adjoint() * x * h_->modes();
  return (xt.array() * single_numerator_.array()).sum() / single_norm_ + constant;
}

namespace {

cplx majorana_filtered(const FockState& psi, const MajoranaMonomialSum& a, const FilterSpec& spec,
                       const QuadraticHamiltonian& h, const FilterOptions& opts, bool single) {
  const FilterWeights w = riemann_filter_weights(spec);
  const int k_max = w.cutoff();
  const MajoranaCovariance gamma = fock_covariance(psi);
  std::vector<MajoranaCovariance> evolved;
  evolved.reserve(2 * k_max + 1);
  for (int k = -k_max; k <= k_max; ++k)
    evolved.push_back(evolve_covariance(gamma, orthogonal_evolution(h, w.time(k))));
  auto at = [&](int k) -> const MajoranaCovariance& { return evolved[k + k_max]; };

  // ⟨ψ₁|A|ψ₂⟩ = ⟨ψ₁|ψ₂⟩ Tr[ρ₂ρ₁A]/Tr[ρ₂ρ₁], ψ₁ = e^{iHt₁}ψ, ψ₂ = e^{−iHt₂}ψ
  auto element = [&](int k1, int k2, cplx& value, cplx& overlap) {
    overlap = fock_echo(h, psi, w.time(k1 + k2));
    value = 0.0;
    if (std::abs(overlap) < opts.echo_floor) {
      overlap = 0.0;
      return;
    }
    try {
      const MixedTwoPoint mixed = mixed_two_point(at(-k1), at(k2), opts.singular_tol);
      value = overlap * a.contract(mixed.two_point);
    } catch (const OrthogonalStatesError&) {
      overlap = 0.0;
    }
  };

  cplx num = 0.0, den = 0.0;
  if (single) {
    for (int k = -k_max; k <= k_max; ++k) {
      cplx v, o;
      element(0, k, v, o);
      num += w[k] * v;
      den += w[k] * o;
    }
    if (std::abs(den) < opts.overlap_floor * std::sqrt(floor_scale(spec)))
      throw InsufficientOverlapError("insufficient overlap with energy window");
    return num / den;
  }
  for (int k1 = -k_max; k1 <= k_max; ++k1)
    for (int k2 = -k_max; k2 <= k_max; ++k2) {
      cplx v, o;
      element(k1, k2, v, o);
      num += w[k1] * w[k2] * v;
      den += w[k1] * w[k2] * o;
    }
  if (den.real() < opts.overlap_floor * floor_scale(spec))
    throw InsufficientOverlapError("insufficient overlap with energy window");
  return num / den.real();
}

}  // namespace

cplx filtered_expectation_complex(const FockState& psi, const MajoranaMonomialSum& a,
                                  const FilterSpec& spec, const QuadraticHamiltonian& h,
                                  const FilterOptions& opts) {
  if (a.sites() != h.sites() || psi.sites() != h.sites())
    throw std::invalid_argument("filtered_expectation: size mismatch");
  if (opts.backend == OverlapBackend::majorana) return majorana_filtered(psi, a, spec, h, opts, false);
  const FilteredFockState state(h, psi, riemann_filter_weights(spec));
  if (state.norm() < opts.overlap_floor * floor_scale(spec))
    throw InsufficientOverlapError("insufficient overlap with energy window");
  const OneBodyForm f = a.one_body();
  return state.expectation(f.matrix, f.constant);
}

double filtered_expectation(const FockState& psi, const MajoranaMonomialSum& a, const FilterSpec& spec,
                            const QuadraticHamiltonian& h, const FilterOptions& opts) {
  return filtered_expectation_complex(psi, a, spec, h, opts).real();
}

cplx single_filter_expectation(const FockState& psi, const MajoranaMonomialSum& a,
                               const FilterSpec& spec, const QuadraticHamiltonian& h,
                               const FilterOptions& opts) {
  if (a.sites() != h.sites() || psi.sites() != h.sites())
    throw std::invalid_argument("single_filter_expectation: size mismatch");
  if (opts.backend == OverlapBackend::majorana) return majorana_filtered(psi, a, spec, h, opts, true);
  const FilterWeights w = riemann_filter_weights(spec);
  const OneBodyForm f = a.one_body();
  const CMat phi = mode_orbitals(h, psi);
  const CMat xt = h.modes().adjoint() * f.matrix * h.modes();
  cplx num = 0.0, den = 0.0;
  for (int k = -w.cutoff(); k <= w.cutoff(); ++k) {
    const double t = w.time(k);
    const cplx off = std::exp(cplx(0.0, -h.offset() * t));
    const SlaterTransition tr(phi, mode_phases(h, t).asDiagonal() * phi);
    num += w[k] * off * (tr.one_body(xt) + f.constant * tr.overlap());
    den += w[k] * off * tr.overlap();
  }
  if (std::abs(den) < opts.overlap_floor * std::sqrt(floor_scale(spec)))
    throw InsufficientOverlapError("insufficient overlap with energy window");
  return num / den;
}

SeriesRecord ldos(const FockState& psi, const QuadraticHamiltonian& h, const std::vector<double>& energies,
                  double eta, std::optional<Prefilter> prefilter, double reach) {
  if (!(eta > 0.0)) throw std::invalid_argument("ldos: eta must be positive");
  if (energies.empty()) throw std::invalid_argument("ldos: empty energy grid");
  const double radius = spectral_radius(h, psi.particles());
  const FilterSpec base = FilterSpec::resolved(0.0, eta, radius, reach);
  const FilterWeights w_eta = riemann_filter_weights(base);
  const int k_eta = w_eta.cutoff();
  const double dt = base.time_step;

  std::vector<cplx> pre{1.0};
  int k_pre = 0;
  if (prefilter) {
    const FilterSpec s = FilterSpec::resolved(prefilter->energy, prefilter->width, radius, reach);
    const FilterWeights wp = riemann_filter_weights(s);
    const FilterWeights w2 = convolve(wp, wp);
    pre = w2.values();
    k_pre = w2.cutoff();
  }
  const int span = k_eta + k_pre;
  std::vector<cplx> f(2 * span + 1);
  for (int k = 0; k <= span; ++k) {
    f[span + k] = fock_echo(h, psi, k * dt);
    f[span - k] = std::conj(f[span + k]);
  }
  // g(t_k) = ⟨Ψ|e^{−iHt_k}|Ψ⟩
  std::vector<cplx> g(2 * k_eta + 1, cplx(0.0));
  for (int k = -k_eta; k <= k_eta; ++k)
    for (int m = -k_pre; m <= k_pre; ++m) g[k + k_eta] += pre[m + k_pre] * f[k + m + span];

  SeriesRecord out;
  out.grid = energies;
  out.values.resize(energies.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    cplx acc = 0.0;
    for (int k = -k_eta; k <= k_eta; ++k)
      acc += w_eta[k] * std::exp(cplx(0.0, energies[i] * k * dt)) * g[k + k_eta];
    out.values[i] = acc.real();
    peak = std::max(peak, acc.real());
  }
  if (peak > 0.0)
    for (auto& v : out.values) v /= peak;
  out.meta.quantity = prefilter ? "ldos filtered" : "ldos";
  out.meta.grid_unit = "J";
  out.meta.scale = peak;
  out.meta.spacing = energies.size() > 1 ? energies[1] - energies[0] : 0.0;
  out.meta.state = psi.bits();
  std::ostringstream os;
  os.precision(17);
  os << "eta=" << eta << " dt=" << dt << " K=" << k_eta;
  if (prefilter) os << " prefilter E=" << prefilter->energy << " delta=" << prefilter->width;
  out.meta.filter = os.str();
  return out;
}

std::pair<double, double> curve_moments(const SeriesRecord& curve) {
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double h = curve.grid[i] - curve.grid[i - 1];
    for (std::size_t j : {i - 1, i}) {
      const double w = 0.5 * h * curve.values[j].real();
      z += w;
      m1 += w * curve.grid[j];
      m2 += w * curve.grid[j] * curve.grid[j];
    }
  }
  if (!(z > 0.0)) throw NumericalError("curve_moments: curve has no positive mass");
  const double mean = m1 / z;
  return {mean, std::sqrt(std::max(0.0, m2 / z - mean * mean))};
}

SeriesRecord dos(const QuadraticHamiltonian& h, const std::vector<double>& energies, double nu,
                 std::optional<int> filling, double reach) {
  if (!(nu > 0.0)) throw std::invalid_argument("dos: nu must be positive");
  const double radius = spectral_radius(h, filling);
  const FilterWeights w = riemann_filter_weights(FilterSpec::resolved(0.0, nu, radius, reach));
  const int k_max = w.cutoff();
  std::vector<cplx> tr(2 * k_max + 1);
  for (int k = 0; k <= k_max; ++k) {
    const double t = w.time(k);
    tr[k_max + k] = filling ? projected_trace(h, t, *filling) : gaussian_trace_phase(h, t);
    tr[k_max - k] = std::conj(tr[k_max + k]);
  }
  SeriesRecord out;
  out.grid = energies;
  out.values.resize(energies.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    cplx acc = 0.0;
    for (int k = -k_max; k <= k_max; ++k) acc += w[k] * std::exp(cplx(0.0, energies[i] * w.time(k))) * tr[k + k_max];
    out.values[i] = acc.real();
    peak = std::max(peak, acc.real());
  }
  if (peak > 0.0)
    for (auto& v : out.values) v /= peak;
  out.meta.quantity = filling ? "dos sector" : "dos";
  out.meta.grid_unit = "J";
  out.meta.scale = peak;
  out.meta.spacing = energies.size() > 1 ? energies[1] - energies[0] : 0.0;
  return out;
}

std::vector<ProjectorPhase> number_projector_phases(int sites, int particles) {
  if (sites < 0 || particles < 0 || particles > sites)
    throw std::invalid_argument("number_projector_phases: filling out of range");
  std::vector<ProjectorPhase> out;
  for (int k = 0; k <= sites; ++k) {
    const double angle = 2.0 * kPi * k / (sites + 1);
    out.push_back({k, std::exp(cplx(0.0, -angle * particles)), angle});
  }
  return out;
}

std::vector<cplx> elementary_symmetric(std::span<const cplx> z, int max_degree) {
  std::vector<cplx> e(static_cast<std::size_t>(max_degree) + 1, cplx(0.0));
  e[0] = 1.0;
  int filled = 0;
  for (const cplx& x : z) {
    filled = std::min(filled + 1, max_degree);
    for (int k = filled; k >= 1; --k) e[k] += x * e[k - 1];
  }
  return e;
}

namespace {

// Prefix/suffix symmetric polynomials for leave-one-out and leave-two-out sums.
class SymmetricTable {
 public:
  SymmetricTable(std::vector<cplx> z, int degree) : z_(std::move(z)), d_(degree) {
    const int n = static_cast<int>(z_.size());
    pre_.assign(n + 1, std::vector<cplx>(d_ + 1, cplx(0.0)));
    suf_.assign(n + 2, std::vector<cplx>(d_ + 1, cplx(0.0)));
    pre_[0][0] = 1.0;
    for (int i = 0; i < n; ++i) step(pre_[i], z_[i], pre_[i + 1]);
    suf_[n][0] = 1.0;
    suf_[n + 1][0] = 1.0;
    for (int i = n - 1; i >= 0; --i) step(suf_[i + 1], z_[i], suf_[i]);
  }

  cplx full(int degree) const { return degree < 0 || degree > d_ ? cplx(0.0) : pre_.back()[degree]; }

  cplx without(int a, int degree) const {
    if (degree < 0 || degree > d_) return 0.0;
    cplx acc = 0.0;
    for (int i = 0; i <= degree; ++i) acc += pre_[a][i] * suf_[a + 1][degree - i];
    return acc;
  }

  // out(b) = e_degree(z without a, b) for every b > a.
  void without_pairs(int a, int degree, std::vector<cplx>& out) const {
    const int n = static_cast<int>(z_.size());
    out.assign(n, cplx(0.0));
    if (degree < 0 || degree > d_) return;
    std::vector<cplx> mid(d_ + 1, cplx(0.0)), left(d_ + 1), next(d_ + 1);
    mid[0] = 1.0;
    for (int b = a + 1; b < n; ++b) {
      for (int i = 0; i <= degree; ++i) {
        cplx s = 0.0;
        for (int j = 0; j <= i; ++j) s += pre_[a][j] * mid[i - j];
        left[i] = s;
      }
      cplx acc = 0.0;
      for (int i = 0; i <= degree; ++i) acc += left[i] * suf_[b + 1][degree - i];
      out[b] = acc;
      step(mid, z_[b], next);
      mid.swap(next);
    }
  }

 private:
  void step(const std::vector<cplx>& in, cplx x, std::vector<cplx>& out) const {
    out[0] = in[0];
    for (int k = 1; k <= d_; ++k) out[k] = in[k] + x * in[k - 1];
  }

  std::vector<cplx> z_;
  int d_;
  std::vector<std::vector<cplx>> pre_, suf_;
};

CMat mode_matrix(const QuadraticHamiltonian& h, const CMat& site) {
  return h.modes().adjoint() * site * h.modes();
}

}  // namespace

cplx projected_trace(const QuadraticHamiltonian& h, double t, int particles, const MajoranaMonomialSum* a,
                     ProjectionMethod method) {
  const int n = static_cast<int>(h.sites());
  if (particles < 0 || particles > n) throw std::invalid_argument("projected_trace: filling out of range");
  const RVec& e = h.energies();
  const cplx off = std::exp(cplx(0.0, -h.offset() * t));
  CVec diag;
  cplx constant = 1.0;
  if (a) {
    if (a->sites() != n) throw std::invalid_argument("projected_trace: observable size mismatch");
    const OneBodyForm f = a->one_body();
    diag = mode_matrix(h, f.matrix).diagonal();
    constant = f.constant;
  }

  if (method == ProjectionMethod::fourier) {
    // δ_{N̂,N₀} = (N+1)^{-1} Σ_k e^{iθ_k(N̂−N₀)}; each term is the Gaussian trace of
    // H̃(t, k) = Ht − θ_k N̂ with single-particle eigenvalues ε_j t − θ_k.
    cplx acc = 0.0;
    for (const auto& p : number_projector_phases(n, particles)) {
      std::vector<cplx> factor(n);
      for (int j = 0; j < n; ++j) factor[j] = std::exp(cplx(0.0, -(e(j) * t - p.angle)));
      cplx prod = 1.0;
      for (int j = 0; j < n; ++j) prod *= 1.0 + factor[j];
      cplx term = constant * prod;
      if (a) {
        std::vector<cplx> left(n + 1, 1.0), right(n + 1, 1.0);
        for (int j = 0; j < n; ++j) left[j + 1] = left[j] * (1.0 + factor[j]);
        for (int j = n - 1; j >= 0; --j) right[j] = right[j + 1] * (1.0 + factor[j]);
        for (int j = 0; j < n; ++j) term += diag(j) * factor[j] * left[j] * right[j + 1];
      }
      acc += p.phase * term;
    }
    return off * acc / static_cast<double>(n + 1);
  }

  std::vector<cplx> z(n);
  for (int j = 0; j < n; ++j) z[j] = std::exp(cplx(0.0, -e(j) * t));
  if (!a) return off * elementary_symmetric(z, particles)[particles];
  const SymmetricTable table(z, particles);
  cplx acc = constant * table.full(particles);
  for (int j = 0; j < n; ++j) acc += diag(j) * z[j] * table.without(j, particles - 1);
  return off * acc;
}

namespace {

// Mean energy Σ ε_a n_a of e^{−βH} in the sector (positive weights, stable).
double canonical_energy(const RVec& e, int particles, double beta, double shift) {
  const int n = static_cast<int>(e.size());
  std::vector<cplx> z(n);
  for (int j = 0; j < n; ++j) z[j] = std::exp(-beta * (e(j) - shift));
  const SymmetricTable table(z, particles);
  const double total = table.full(particles).real();
  double acc = 0.0;
  for (int j = 0; j < n; ++j) acc += e(j) * z[j].real() * table.without(j, particles - 1).real();
  return acc / total;
}

}  // namespace

double saddle_tilt(const QuadraticHamiltonian& h, int particles, double energy, double width) {
  const RVec& e = h.energies();
  if (particles == 0 || particles == e.size()) return 0.0;
  const double shift = energy / particles;
  const double cap = 3.0 / width;
  const double target = energy - h.offset();
  auto mean = [&](double b) { return canonical_energy(e, particles, b, shift); };
  if (target <= mean(cap)) return cap;
  if (target >= mean(-cap)) return -cap;
  double lo = -cap, hi = cap;  // mean decreases with β
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

EnsembleOccupations ensemble_occupations(const QuadraticHamiltonian& h, const FilterSpec& spec,
                                         int particles, bool pairs, std::optional<double> tilt) {
  spec.validate();
  const int n = static_cast<int>(h.sites());
  if (particles < 0 || particles > n) throw std::invalid_argument("ensemble_occupations: bad filling");
  const RVec& e = h.energies();
  const double beta = tilt ? *tilt : saddle_tilt(h, particles, spec.energy, spec.width);
  const double d2 = spec.width * spec.width;
  const double dt = spec.time_step;
  const double s = spec.width * dt;
  const double shift = (spec.energy - h.offset()) / std::max(particles, 1);

  // Σ_s G(E_s − E) = Σ_k w̃_k Tr[e^{−iH(t_k − iβ₀)}] e^{β₀E}: the contour shift keeps
  // all terms of comparable size near the window.
  double trace = 0.0;
  RVec occ = RVec::Zero(n);
  RMat pair_occ = pairs ? RMat::Zero(n, n) : RMat();
  std::vector<cplx> z(n), row;
  for (int k = 0; k <= spec.cutoff; ++k) {
    const double t = k * dt;
    const double mult = (k == 0) ? 1.0 : 2.0;  // ±k are complex conjugates
    cplx wk = dt / (2.0 * kPi) * std::exp(-0.5 * s * s * k * k + 0.5 * d2 * beta * beta) *
              std::exp(cplx(0.0, d2 * beta * t));
    if (particles == 0) wk *= std::exp(cplx(-beta, -t) * (h.offset() - spec.energy));
    for (int j = 0; j < n; ++j) z[j] = std::exp(cplx(-beta, -t) * (e(j) - shift));
    const SymmetricTable table(z, particles);
    trace += mult * (wk * table.full(particles)).real();
    for (int a = 0; a < n; ++a) occ(a) += mult * (wk * z[a] * table.without(a, particles - 1)).real();
    if (pairs) {
      for (int a = 0; a < n; ++a) {
        table.without_pairs(a, particles - 2, row);
        for (int b = a + 1; b < n; ++b) pair_occ(a, b) += mult * (wk * z[a] * z[b] * row[b]).real();
      }
    }
  }
  if (!(trace > 0.0) || !std::isfinite(trace))
    throw NoSpectralWeightError("no spectral weight at E in this sector");
  EnsembleOccupations out;
  out.trace = trace;
  out.tilt = beta;
  out.n = occ / trace;
  if (pairs) {
    out.nn = pair_occ / trace;
    out.nn.triangularView<Eigen::StrictlyLower>() = out.nn.transpose();
    out.nn.diagonal() = out.n;
  }
  return out;
}

}  // namespace efr
