#include "efr/ed_oracle.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace efr {

namespace {

double jw_sign(std::uint64_t mask, int site) {
  const std::uint64_t below = mask & ((std::uint64_t{1} << site) - 1);
  return (std::popcount(below) % 2 == 0) ? 1.0 : -1.0;
}

// a†_n a_m |mask⟩ = coefficient |result⟩, or coefficient 0.
struct Hop {
  std::uint64_t result;
  double coefficient;
};

Hop hop(std::uint64_t mask, int n, int m) {
  const std::uint64_t bm = std::uint64_t{1} << m;
  const std::uint64_t bn = std::uint64_t{1} << n;
  if (!(mask & bm)) return {0, 0.0};
  const double s1 = jw_sign(mask, m);
  const std::uint64_t mid = mask ^ bm;
  if (mid & bn) return {0, 0.0};
  return {mid | bn, s1 * jw_sign(mid, n)};
}

// ξ_a |mask⟩ = coefficient |mask ^ bit⟩.
cplx majorana_action(std::uint64_t mask, int mode, std::uint64_t& out) {
  const int site = mode / 2;
  const std::uint64_t bit = std::uint64_t{1} << site;
  const double s = jw_sign(mask, site);
  out = mask ^ bit;
  if (mode % 2 == 0) return s;
  return (mask & bit) ? cplx(0.0, -s) : cplx(0.0, s);
}

// ∫₀^x e^{t²} dt · e^{−x²} by Rybicki's method.
double dawson(double x) {
  // Rybicki's sampling-theorem series; the truncation error is ~exp(−(π/2h)²).
  constexpr double h = 0.25;
  constexpr int terms = 14;
  static const auto coeffs = [] {
    std::array<double, terms> c{};
    for (int i = 0; i < terms; ++i) {
      const double a = (2.0 * i + 1.0) * h;
      c[i] = std::exp(-a * a);
    }
    return c;
  }();
  const double ax = std::abs(x);
  if (ax < 0.5) {
    // Σ (−2x²)ⁿ x / (2n+1)!!
    const double x2 = x * x;
    double term = x, sum = x;
    for (int n = 1; std::abs(term) > 1e-18 * std::abs(sum); ++n) {
      term *= -2.0 * x2 / (2.0 * n + 1.0);
      sum += term;
    }
    return sum;
  }
  const double n0 = 2.0 * std::round(0.5 * ax / h);
  const double xp = ax - n0 * h;
  double e1 = std::exp(2.0 * xp * h);
  const double e2 = e1 * e1;
  double d1 = n0 + 1.0, d2 = d1 - 2.0, sum = 0.0;
  for (int i = 0; i < terms; ++i, d1 += 2.0, d2 -= 2.0, e1 *= e2)
    sum += coeffs[i] * (e1 / d1 + 1.0 / (d2 * e1));
  return std::copysign(std::exp(-xp * xp), x) * sum / std::sqrt(kPi);
}

}  // namespace

DenseSpectrum::DenseSpectrum(const CMat& hermitian) {
  Eigen::SelfAdjointEigenSolver<CMat> solver(0.5 * (hermitian + hermitian.adjoint()));
  if (solver.info() != Eigen::Success) throw NumericalError("DenseSpectrum: eigensolver failed");
  energies_ = solver.eigenvalues();
  vectors_ = solver.eigenvectors();
}

CMat DenseSpectrum::function(const std::function<cplx(double)>& f) const {
  CVec d(energies_.size());
  for (Eigen::Index i = 0; i < energies_.size(); ++i) d(i) = f(energies_(i));
  return vectors_ * d.asDiagonal() * vectors_.adjoint();
}

CMat DenseSpectrum::propagator(double t) const {
  return function([t](double e) { return std::exp(cplx(0.0, -e * t)); });
}

FockSpace::FockSpace(int sites, int max_sites) : sites_(sites) {
  if (sites < 1 || sites > max_sites) throw std::invalid_argument("FockSpace: site count outside [1, cap]");
}

CMat FockSpace::annihilator(int site) const {
  const Eigen::Index d = dimension();
  CMat a = CMat::Zero(d, d);
  const std::uint64_t bit = std::uint64_t{1} << site;
  for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(d); ++s)
    if (s & bit) a(static_cast<Eigen::Index>(s ^ bit), static_cast<Eigen::Index>(s)) = jw_sign(s, site);
  return a;
}

CMat FockSpace::majorana(int mode) const {
  if (mode < 0 || mode >= 2 * sites_) throw std::invalid_argument("FockSpace::majorana: bad mode");
  const Eigen::Index d = dimension();
  CMat x = CMat::Zero(d, d);
  for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(d); ++s) {
    std::uint64_t out = 0;
    const cplx c = majorana_action(s, mode, out);
    x(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(s)) += c;
  }
  return x;
}

CMat FockSpace::one_body(const CMat& c, cplx constant) const {
  if (c.rows() != sites_ || c.cols() != sites_) throw std::invalid_argument("FockSpace::one_body: shape");
  const Eigen::Index d = dimension();
  CMat m = constant * CMat::Identity(d, d);
  for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(d); ++s)
    for (int n = 0; n < sites_; ++n)
      for (int q = 0; q < sites_; ++q) {
        if (c(n, q) == cplx(0.0)) continue;
        const Hop h = hop(s, n, q);
        if (h.coefficient != 0.0)
          m(static_cast<Eigen::Index>(h.result), static_cast<Eigen::Index>(s)) += c(n, q) * h.coefficient;
      }
  return m;
}

CMat FockSpace::observable(const MajoranaMonomialSum& a) const {
  if (a.sites() != sites_) throw std::invalid_argument("FockSpace::observable: size mismatch");
  const Eigen::Index d = dimension();
  CMat m = a.constant() * CMat::Identity(d, d);
  for (const auto& t : a.terms())
    for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(d); ++s) {
      std::uint64_t mid = 0, out = 0;
      const cplx c2 = majorana_action(s, t.second, mid);
      const cplx c1 = majorana_action(mid, t.first, out);
      m(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(s)) += t.coefficient * c1 * c2;
    }
  return m;
}

CMat FockSpace::hamiltonian(const QuadraticHamiltonian& h) const {
  return one_body(h.matrix(), h.offset());
}

CMat FockSpace::number() const {
  const Eigen::Index d = dimension();
  CMat m = CMat::Zero(d, d);
  for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(d); ++s)
    m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) = std::popcount(s);
  return m;
}

CVec FockSpace::basis_vector(const FockState& s) const {
  if (s.sites() != sites_) throw std::invalid_argument("FockSpace::basis_vector: size mismatch");
  std::uint64_t mask = 0;
  for (int o : s.occupied_sites()) mask |= std::uint64_t{1} << o;
  CVec v = CVec::Zero(dimension());
  v(static_cast<Eigen::Index>(mask)) = 1.0;
  return v;
}

DenseSector::DenseSector(const CMat& h, double offset, int particles, std::size_t cap)
    : sites_(static_cast<int>(h.rows())), particles_(particles) {
  if (h.rows() != h.cols()) throw std::invalid_argument("DenseSector: h must be square");
  if (sites_ > 62) throw std::invalid_argument("DenseSector: too many sites");
  if (particles < 0 || particles > sites_) throw std::invalid_argument("DenseSector: bad filling");
  double dim = 1.0;
  for (int i = 0; i < particles; ++i) dim = dim * (sites_ - i) / (i + 1);
  if (dim > static_cast<double>(cap)) throw std::invalid_argument("DenseSector: sector dimension exceeds cap");
  basis_ = enumerate_sector(sites_, particles);
  masks_.reserve(basis_.size());
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    std::uint64_t mask = 0;
    for (int o : basis_[i].occupied_sites()) mask |= std::uint64_t{1} << o;
    masks_.push_back(mask);
    lookup_.emplace(mask, static_cast<Eigen::Index>(i));
  }
  hamiltonian_ = one_body(h, offset);
  spectrum_ = DenseSpectrum(hamiltonian_);
}

Eigen::Index DenseSector::index_of(const FockState& s) const {
  if (s.sites() != sites_ || s.particles() != particles_)
    throw std::invalid_argument("DenseSector: state not in sector");
  std::uint64_t mask = 0;
  for (int o : s.occupied_sites()) mask |= std::uint64_t{1} << o;
  return lookup_.at(mask);
}

CVec DenseSector::vector(const FockState& s) const {
  CVec v = CVec::Zero(dimension());
  v(index_of(s)) = 1.0;
  return v;
}

CMat DenseSector::one_body(const CMat& c, cplx constant) const {
  if (c.rows() != sites_ || c.cols() != sites_) throw std::invalid_argument("DenseSector::one_body: shape");
  const Eigen::Index d = dimension();
  CMat m = constant * CMat::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (int n = 0; n < sites_; ++n)
      for (int q = 0; q < sites_; ++q) {
        if (c(n, q) == cplx(0.0)) continue;
        const Hop h = hop(masks_[i], n, q);
        if (h.coefficient != 0.0) m(lookup_.at(h.result), i) += c(n, q) * h.coefficient;
      }
  return m;
}

CMat DenseSector::observable(const MajoranaMonomialSum& a) const {
  const OneBodyForm f = a.one_body();
  return one_body(f.matrix, f.constant);
}

DenseSector build_sector(const ModelSpec& spec, int particles, std::size_t cap) {
  return DenseSector(hopping_matrix(spec, true), 0.0, particles, cap);
}

CMat gaussian_filter(const DenseSpectrum& spectrum, double energy, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian_filter: width must be positive");
  const double norm = 1.0 / std::sqrt(2.0 * kPi * width * width);
  return spectrum.function([=](double e) {
    const double x = (e - energy) / width;
    return cplx(norm * std::exp(-0.5 * x * x));
  });
}

cplx exact_filtered_value_complex(const DenseSector& sector, const FockState& psi, const CMat& a,
                                  double energy, double width) {
  const CVec v = gaussian_filter(sector.spectrum(), energy, width) * sector.vector(psi);
  const double den = v.squaredNorm();
  if (den == 0.0) throw NumericalError("exact_filtered_value: zero filtered norm");
  return v.dot(a * v) / den;
}

double exact_filtered_value(const DenseSector& sector, const FockState& psi, const CMat& a,
                            double energy, double width) {
  return exact_filtered_value_complex(sector, psi, a, energy, width).real();
}

cplx dense_three_time(const DenseSector& sector, const FockState& psi, const CMat& a, const CMat& b,
                      double t1, double t2, double t3) {
  const CVec v = sector.vector(psi);
  const CVec w = sector.propagator(-t1) *
                 (a * (sector.propagator(-t2) * (b * (sector.propagator(-t3) * v))));
  return v.dot(w);
}

cplx gaussian_half_line(double nu, double sigma) {
  const double x = nu * sigma / std::sqrt(2.0);
  return sigma * std::sqrt(kPi / 2.0) * std::exp(-x * x) + cplx(0.0, sigma * std::sqrt(2.0) * dawson(x));
}

SeriesRecord lehmann_lambda(const DenseSector& sector, const CMat& rho0, const CMat& current,
                            const std::vector<double>& omegas, double sigma) {
  const CMat& v = sector.eigenvectors();
  const RVec& e = sector.energies();
  const CMat rho = v.adjoint() * rho0 * v;
  const CMat j = v.adjoint() * current * v;
  const CMat x = j.cwiseProduct((j * rho - rho * j).transpose());
  SeriesRecord out;
  out.grid = omegas;
  out.values.resize(omegas.size());
  out.meta.quantity = "Lambda(omega) lehmann";
  out.meta.grid_unit = "J";
  out.meta.cutoff = sigma;
  for (std::size_t w = 0; w < omegas.size(); ++w) {
    cplx acc = 0.0;
    for (Eigen::Index m = 0; m < x.rows(); ++m)
      for (Eigen::Index n = 0; n < x.cols(); ++n)
        if (x(m, n) != cplx(0.0)) acc += x(m, n) * gaussian_half_line(e(m) - e(n) - omegas[w], sigma);
    out.values[w] = -kI * acc;
  }
  if (omegas.size() > 1) out.meta.spacing = omegas[1] - omegas[0];
  return out;
}

namespace {

// Operator in the eigenbasis rotated to the interaction picture at time t.
CMat interaction(const CMat& op_eig, const RVec& e, double t) {
  CMat out = op_eig;
  for (Eigen::Index m = 0; m < e.size(); ++m)
    for (Eigen::Index n = 0; n < e.size(); ++n) out(m, n) *= std::exp(cplx(0.0, (e(m) - e(n)) * t));
  return out;
}

}  // namespace

cplx dense_susceptibility(const DenseSector& sector, const CMat& rho0, const CMat& a, const CMat& b,
                          double t, double t_prime) {
  if (t < t_prime) return 0.0;
  const CMat& v = sector.eigenvectors();
  const RVec& e = sector.energies();
  const CMat at = interaction(v.adjoint() * a * v, e, t);
  const CMat bt = interaction(v.adjoint() * b * v, e, t_prime);
  const CMat rho = v.adjoint() * rho0 * v;
  return -kI * (rho * (at * bt - bt * at)).trace();
}

KuboResult kubo_check(const DenseSector& sector, const PerturbationSpec& pert, const CMat& a,
                      const std::vector<double>& times, double max_step) {
  if (!pert.profile) throw std::invalid_argument("kubo_check: missing perturbation profile");
  const CMat& v = sector.eigenvectors();
  const RVec& e = sector.energies();
  const CMat b_eig = v.adjoint() * pert.coupling * v;
  const CMat a_eig = v.adjoint() * a * v;
  const CMat rho0 = v.adjoint() * pert.rho0 * v;
  const double radius = std::max(e.cwiseAbs().maxCoeff(), 1e-3);
  double step = 0.01 / radius;
  if (max_step > 0.0) step = std::min(step, max_step);
  auto g = [&](double t) { return pert.strength * pert.profile(t); };
  auto rhs = [&](double t, const CMat& rho) -> CMat {
    const CMat bt = interaction(b_eig, e, t);
    return -kI * g(t) * (bt * rho - rho * bt);
  };

  KuboResult out;
  out.times = times;
  CMat rho = rho0;
  double now = 0.0;
  for (double target : times) {
    if (target < now - 1e-12) throw std::invalid_argument("kubo_check: times must be sorted and >= 0");
    const auto n = static_cast<int>(std::ceil((target - now) / step - 1e-9));
    const double h = n > 0 ? (target - now) / n : 0.0;
    for (int i = 0; i < n; ++i) {
      const CMat k1 = rhs(now, rho);
      const CMat k2 = rhs(now + 0.5 * h, rho + 0.5 * h * k1);
      const CMat k3 = rhs(now + 0.5 * h, rho + 0.5 * h * k2);
      const CMat k4 = rhs(now + h, rho + h * k3);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!rho.allFinite()) throw NumericalError("kubo_check: integrator produced non-finite state");
      now += h;
    }
    now = target;
    const CMat at = interaction(a_eig, e, target);
    out.exact.push_back((at * (rho - rho0)).trace().real());

    // Composite Simpson over t′ ∈ [0, t] of χ(t, t′) g(t′).
    int intervals = 2 * static_cast<int>(std::ceil(target / (2.0 * step)));
    double lin = 0.0;
    if (intervals > 0) {
      const double hs = target / intervals;
      for (int i = 0; i <= intervals; ++i) {
        const double tp = i * hs;
        const CMat bt = interaction(b_eig, e, tp);
        const cplx chi = -kI * (rho0 * (at * bt - bt * at)).trace();
        const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        lin += w * (chi * g(tp)).real();
      }
      lin *= hs / 3.0;
    }
    out.linear.push_back(lin);
    out.max_deviation = std::max(out.max_deviation, std::abs(out.exact.back() - lin));
  }
  return out;
}

CircuitIdentityReport circuit_c_identity_check(const DenseSector& sector, const FockState& psi,
                                               const CMat& a, const CMat& b, double t1, double t2,
                                               double t3) {
  const CVec v = sector.vector(psi);
  const double tau = t1 + t2 + t3;
  const CMat x = sector.propagator(-t1) * a * sector.propagator(-t2) * b * sector.propagator(-t3);
  const CMat y = sector.propagator(tau);
  CircuitIdentityReport r{};
  const Eigen::Index d = sector.dimension();
  if (d <= 64) {
    CMat kron(d * d, d * d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index k = 0; k < d; ++k) kron.block(i * d, k * d, d, d) = x(i, k) * y;
    CVec pair(d * d);
    for (Eigen::Index i = 0; i < d; ++i) pair.segment(i * d, d) = v(i) * v;
    r.product = pair.dot(kron * pair);
  } else {
    r.product = v.dot(x * v) * v.dot(y * v);
  }
  r.correlator = dense_three_time(sector, psi, a, b, t1, t2, t3);
  r.echo = v.dot(sector.propagator(tau) * v);
  r.factorization_deviation = std::abs(r.product - r.correlator * r.echo);
  if (std::abs(r.echo) < 1e-12)
    throw NumericalError("circuit identity: Loschmidt echo vanishes, division undefined");
  r.recovery_deviation = std::abs(r.product / r.echo - r.correlator);
  return r;
}

}  // namespace efr
