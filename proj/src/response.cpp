#include "efr/response.hpp"

#include "efr/parallel.hpp"
#include "efr/slater.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace efr {

void TransformConfig::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("transform: sigma must be positive");
  if (!(time_step > 0.0)) throw std::invalid_argument("transform: time_step must be positive");
  if (t_max < 4.0 * sigma) throw std::invalid_argument("transform: t_max must be at least 4 sigma");
  if (sign != 1 && sign != -1) throw std::invalid_argument("transform: sign must be +1 or -1");
}

namespace {

CMat mode_orbitals(const QuadraticHamiltonian& h, const FockState& psi) {
  CMat phi(h.sites(), psi.particles());
  for (int i = 0; i < psi.particles(); ++i) phi.col(i) = h.modes().row(psi.occupied_sites()[i]).adjoint();
  return phi;
}

CVec mode_phases(const QuadraticHamiltonian& h, double t) {
  return (h.energies().cast<cplx>() * cplx(0.0, -t)).array().exp();
}

CMat to_modes(const QuadraticHamiltonian& h, const CMat& x) {
  if (x.rows() != h.sites() || x.cols() != h.sites())
    throw std::invalid_argument("observable size does not match the Hamiltonian");
  return h.modes().adjoint() * x * h.modes();
}

// x̃_ab e^{i(ε_a−ε_b)t}: Heisenberg picture of a mode-basis one-body matrix.
CMat heisenberg(const QuadraticHamiltonian& h, const CMat& xt, double t) {
  const CVec d = mode_phases(h, -t);
  return d.asDiagonal() * xt * d.conjugate().asDiagonal();
}

OneBodyForm number_conserving(const MajoranaMonomialSum& a) {
  OneBodyForm f = a.one_body();
  if (f.pairing_norm > 1e-10)
    throw std::invalid_argument("the Slater route needs number-conserving operators");
  return f;
}

SeriesRecord make_series(const std::vector<double>& grid, std::vector<cplx> values, std::string quantity) {
  SeriesRecord s;
  s.grid = grid;
  s.values = std::move(values);
  s.meta.quantity = std::move(quantity);
  if (grid.size() > 1) s.meta.spacing = grid[1] - grid[0];
  return s;
}

void check_overlap(double norm, const FilterSpec& spec, const FilterOptions& opts) {
  const double scale = 1.0 / (2.0 * kPi * spec.width * spec.width);
  if (!(norm > opts.overlap_floor * scale))
    throw InsufficientOverlapError("<psi|P^2|psi> below the overlap floor");
}

}  // namespace

SeriesRecord loschmidt_echo(const FockState& psi, const QuadraticHamiltonian& h,
                            const std::vector<double>& times, EchoMethod method) {
  if (psi.sites() != h.sites()) throw std::invalid_argument("loschmidt_echo: size mismatch");
  std::vector<cplx> values;
  values.reserve(times.size());
  if (method == EchoMethod::determinant) {
    for (double t : times) values.push_back(fock_echo(h, psi, t));
  } else {
    const MajoranaCovariance g = fock_covariance(psi);
    for (double t : times) values.push_back(density_trace_evolution(g, h, t));
  }
  SeriesRecord s = make_series(times, std::move(values), "loschmidt_echo");
  s.meta.state = psi.bits();
  return s;
}

cplx three_time_correlator(const FockState& psi, const QuadraticHamiltonian& h,
                           const MajoranaMonomialSum& a, const MajoranaMonomialSum& b, double t1,
                           double t2, double t3, CorrelatorMethod method) {
  if (psi.sites() != h.sites() || a.sites() != h.sites() || b.sites() != h.sites())
    throw std::invalid_argument("three_time_correlator: size mismatch");
  const double tau = t1 + t2 + t3;

  if (method == CorrelatorMethod::majorana) {
    const MajoranaCovariance g1 = fock_covariance(psi);
    const MajoranaCovariance g2 = evolve_covariance(g1, orthogonal_evolution(h, -tau));
    const MixedTwoPoint mixed = mixed_two_point(g1, g2);
    const auto ah = a.rotated(orthogonal_evolution(h, t1));
    const auto bh = b.rotated(orthogonal_evolution(h, t1 + t2));
    return fock_echo(h, psi, -tau) * contract_product(ah, bh, mixed.two_point);
  }

  const OneBodyForm fa = number_conserving(a);
  const OneBodyForm fb = number_conserving(b);
  const CMat xa = heisenberg(h, to_modes(h, fa.matrix), t1);
  const CMat xb = heisenberg(h, to_modes(h, fb.matrix), t1 + t2);
  const CMat phi = mode_orbitals(h, psi);
  const SlaterTransition tr(phi, mode_phases(h, -tau).asDiagonal() * phi);
  const cplx ab = (xa.array() * tr.two_body_right(xb).array()).sum();
  const cplx value = ab + fa.constant * tr.one_body(xb) + fb.constant * tr.one_body(xa) +
                     fa.constant * fb.constant * tr.overlap();
  return std::exp(cplx(0.0, h.offset() * tau)) * value;
}

namespace {

SeriesRecord commutator_by_correlators(const FockState& psi, const QuadraticHamiltonian& h,
                                       const CMat& x, const FilterSpec& spec,
                                       const std::vector<double>& times, const ResponseOptions& opts) {
  const FilterWeights w = riemann_filter_weights(spec);
  const int k_max = w.cutoff();
  cplx norm = 0.0;
  for (int k = -k_max; k <= k_max; ++k)
    for (int kp = -k_max; kp <= k_max; ++kp) norm += w[k] * w[kp] * fock_echo(h, psi, w.time(k + kp));
  check_overlap(norm.real(), spec, opts.filter);
  const auto j = MajoranaMonomialSum::from_one_body(x);
  auto values = parallel_map<cplx>(times.size(), opts.threads, [&](std::size_t i) {
    const double t = times[i];
    cplx acc = 0.0;
    for (int k = -k_max; k <= k_max; ++k) {
      const double tk = w.time(k);
      for (int kp = -k_max; kp <= k_max; ++kp) {
        const double tkp = w.time(kp);
        const cplx forward = three_time_correlator(psi, h, j, j, t - tk, -t, -tkp);
        const cplx backward = three_time_correlator(psi, h, j, j, -tk, t, -t - tkp);
        acc += w[k] * w[kp] * (forward - backward);
      }
    }
    return acc / norm.real();
  });
  return make_series(times, std::move(values), "commutator");
}

}  // namespace

SeriesRecord filtered_commutator_trace(const FockState& psi, const QuadraticHamiltonian& h,
                                       const CMat& x, const FilterSpec& spec,
                                       const std::vector<double>& times, const ResponseOptions& opts) {
  spec.validate();
  if (psi.sites() != h.sites()) throw std::invalid_argument("filtered_commutator_trace: size mismatch");
  SeriesRecord out;
  if (opts.method == CommutatorMethod::correlator) {
    out = commutator_by_correlators(psi, h, x, spec, times, opts);
  } else {
    const FilteredFockState fs(h, psi, riemann_filter_weights(spec));
    check_overlap(fs.norm(), spec, opts.filter);
    const CMat xt = to_modes(h, x);
    const CMat& r = fs.mode_density();
    // Σ_ab x̃_ab e^{i(ε_a−ε_b)t} (R x̃ᵀ − x̃ᵀ R)_ab
    const CMat kernel = xt.array() * (r * xt.transpose() - xt.transpose() * r).array();
    std::vector<cplx> values;
    values.reserve(times.size());
    for (double t : times) values.push_back((heisenberg(h, kernel, t)).sum());
    out = make_series(times, std::move(values), "commutator");
  }
  out.meta.filter = spec.describe();
  out.meta.state = psi.bits();
  return out;
}

SeriesRecord filtered_anticommutator_trace(const FockState& psi, const QuadraticHamiltonian& h,
                                           const CMat& x, const FilterSpec& spec,
                                           const std::vector<double>& times,
                                           const ResponseOptions& opts) {
  spec.validate();
  if (psi.sites() != h.sites()) throw std::invalid_argument("filtered_anticommutator_trace: size mismatch");
  if ((x - x.adjoint()).norm() > 1e-12 * std::max(1.0, x.norm()))
    throw std::invalid_argument("filtered_anticommutator_trace: observable must be Hermitian");
  const FilterWeights w = riemann_filter_weights(spec);
  const FilteredFockState fs(h, psi, w);
  check_overlap(fs.norm(), spec, opts.filter);

  const int k_max = w.cutoff();
  const CMat xt = to_modes(h, x);
  const CMat phi = mode_orbitals(h, psi);
  const Eigen::Index n = h.sites();

  // Y = Σ_{k,m} w_k w_{m−k} e^{−i(ε_a−ε_b)t_k} ∘ Z^{(m)}(x̃(−t_k)), where Z^{(m)} is the
  // right two-body transition ⟨ψ|a†_a a_b X e^{−iHτ_m}|ψ⟩.
  auto parts = parallel_map<CMat>(static_cast<std::size_t>(4 * k_max + 1), opts.threads, [&](std::size_t idx) {
    const int m = static_cast<int>(idx) - 2 * k_max;
    const double tau = m * w.time_step();
    const SlaterTransition tr(phi, mode_phases(h, tau).asDiagonal() * phi);
    CMat acc = CMat::Zero(n, n);
    const int lo = std::max(-k_max, m - k_max);
    const int hi = std::min(k_max, m + k_max);
    for (int k = lo; k <= hi; ++k) {
      const double tk = w.time(k);
      const CMat z = tr.two_body_right(heisenberg(h, xt, -tk));
      acc.noalias() += (w[k] * w[m - k]) * CMat(heisenberg(h, z, -tk));
    }
    return CMat(std::exp(cplx(0.0, -h.offset() * tau)) * acc);
  });
  CMat y = CMat::Zero(n, n);
  for (const auto& p : parts) y += p;
  y /= fs.norm();

  const CMat& r = fs.mode_density();
  const double mean0 = (xt.array() * r.array()).sum().real();
  const CMat kernel = xt.array() * y.array();
  const CMat mean_kernel = xt.array() * r.array();
  std::vector<cplx> values;
  values.reserve(times.size());
  for (double t : times) {
    const double corr = heisenberg(h, kernel, t).sum().real();
    const double mean_t = heisenberg(h, mean_kernel, t).sum().real();
    values.emplace_back(2.0 * corr - 2.0 * mean_t * mean0, 0.0);
  }
  SeriesRecord out = make_series(times, std::move(values), "anticommutator");
  out.meta.filter = spec.describe();
  out.meta.state = psi.bits();
  return out;
}

SeriesRecord ensemble_commutator_trace(const QuadraticHamiltonian& h, const CMat& x,
                                       const EnsembleOccupations& occ,
                                       const std::vector<double>& times) {
  const CMat xt = to_modes(h, x);
  const RVec& e = h.energies();
  const Eigen::Index n = h.sites();
  std::vector<cplx> values;
  values.reserve(times.size());
  for (double t : times) {
    cplx acc = 0.0;
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) {
        if (a == b) continue;
        const double occ_diff = occ.n(a) - occ.n(b);
        if (occ_diff == 0.0) continue;
        acc += std::norm(xt(a, b)) * std::exp(cplx(0.0, (e(a) - e(b)) * t)) * occ_diff;
      }
    values.push_back(acc);
  }
  return make_series(times, std::move(values), "commutator");
}

SeriesRecord ensemble_anticommutator_trace(const QuadraticHamiltonian& h, const CMat& x,
                                           const EnsembleOccupations& occ,
                                           const std::vector<double>& times) {
  if (occ.nn.size() == 0) throw std::invalid_argument("ensemble_anticommutator_trace: pair occupations required");
  const CMat xt = to_modes(h, x);
  const RVec& e = h.energies();
  const Eigen::Index n = h.sites();
  double static_part = 0.0;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index c = 0; c < n; ++c) {
      const double nn = a == c ? occ.n(a) : occ.nn(a, c);
      static_part += (xt(a, a) * xt(c, c)).real() * (nn - occ.n(a) * occ.n(c));
    }
  std::vector<cplx> values;
  values.reserve(times.size());
  for (double t : times) {
    double acc = static_part;
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) {
        if (a == b) continue;
        acc += std::norm(xt(a, b)) * std::cos((e(a) - e(b)) * t) * (occ.n(a) - occ.nn(a, b));
      }
    values.emplace_back(2.0 * acc, 0.0);
  }
  return make_series(times, std::move(values), "anticommutator");
}

namespace {

// Trapezoid nodes t_i = iΔt on [0, t_max] with their weights.
std::size_t horizon_count(double step, double t_max) {
  return static_cast<std::size_t>(std::floor(t_max / step + 1e-9)) + 1;
}

double trapezoid_weight(std::size_t i, std::size_t count, double step) {
  return (i == 0 || i + 1 == count) ? 0.5 * step : step;
}

}  // namespace

SeriesRecord fourier_half_line(const SeriesRecord& series, const TransformConfig& cfg,
                               const std::vector<double>& omegas) {
  cfg.validate();
  series.validate();
  if (series.size() < 2 || std::abs(series.grid.front()) > 1e-12)
    throw std::invalid_argument("fourier_half_line: time grid must start at 0");
  const double step = series.spacing();
  if (series.grid.back() < cfg.t_max - 1e-9 * std::max(1.0, cfg.t_max))
    throw std::invalid_argument("fourier_half_line: series shorter than t_max");
  const std::size_t count = std::min(series.size(), horizon_count(step, cfg.t_max));
  std::vector<cplx> windowed(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = series.grid[i];
    windowed[i] = trapezoid_weight(i, count, step) * std::exp(-t * t / (2.0 * cfg.sigma * cfg.sigma)) *
                  series.values[i];
  }
  std::vector<cplx> values;
  values.reserve(omegas.size());
  for (double w : omegas) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < count; ++i)
      acc += std::exp(cplx(0.0, cfg.sign * w * series.grid[i])) * windowed[i];
    values.push_back(acc);
  }
  SeriesRecord out = make_series(omegas, std::move(values), series.meta.quantity + "_omega");
  out.meta.grid_unit = "J";
  out.meta.cutoff = cfg.sigma;
  out.meta.filter = series.meta.filter;
  out.meta.state = series.meta.state;
  return out;
}

SeriesRecord lambda_frequency(const SeriesRecord& commutator, const TransformConfig& cfg,
                              const std::vector<double>& omegas) {
  TransformConfig c = cfg;
  c.sign = -1;
  SeriesRecord out = fourier_half_line(commutator, c, omegas);
  for (auto& v : out.values) v *= cplx(0.0, -1.0);
  out.meta.quantity = "lambda";
  return out;
}

CMat response_operator(const QuadraticHamiltonian& h, const CMat& current, const TransformConfig& cfg,
                       double omega) {
  cfg.validate();
  const CMat jt = to_modes(h, current);
  const RVec& e = h.energies();
  const Eigen::Index n = h.sites();
  const std::size_t count = horizon_count(cfg.time_step, cfg.t_max);
  std::vector<cplx> window(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) * cfg.time_step;
    window[i] = trapezoid_weight(i, count, cfg.time_step) * std::exp(-t * t / (2.0 * cfg.sigma * cfg.sigma)) *
                std::exp(cplx(0.0, -omega * t));
  }
  // G_ab = Σ_i W_i e^{i(ε_a−ε_b)t_i}
  CMat g(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      const cplx step = std::exp(cplx(0.0, (e(a) - e(b)) * cfg.time_step));
      cplx phase = 1.0;
      cplx acc = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        acc += window[i] * phase;
        phase *= step;
      }
      g(a, b) = acc;
    }
  const CMat jg = jt.array() * g.array();
  const CMat lam = cplx(0.0, -1.0) * (jg * jt - jt * jg);
  return h.modes() * lam * h.modes().adjoint();
}

CMat drude_operator(const QuadraticHamiltonian& h, const CMat& current, const CMat& kinetic,
                    const TransformConfig& cfg, double omega) {
  const CMat lam = response_operator(h, current, cfg, omega);
  return kPi * (0.5 * (lam + lam.adjoint()) - kinetic);
}

bool drude_converged(double d1, double d2, double floor) {
  const double scale = std::max({std::abs(d1), std::abs(d2), floor});
  return std::abs(d1 - d2) <= 0.05 * scale;
}

ConductivityResult conductivity(const SeriesRecord& lambda, double kinetic_expectation, double omega_min) {
  lambda.validate();
  if (!(omega_min > 0.0)) throw std::invalid_argument("conductivity: omega_min must be positive");
  if (lambda.size() < 2 || lambda.grid.front() > omega_min || lambda.grid.back() < 2.0 * omega_min)
    throw std::invalid_argument("conductivity: frequency grid lacks points at omega_min");
  ConductivityResult r;
  r.drude = kPi * (lambda.at(omega_min).real() - kinetic_expectation);
  r.drude_check = kPi * (lambda.at(2.0 * omega_min).real() - kinetic_expectation);
  r.converged = drude_converged(r.drude, r.drude_check, 1e-3 * kPi * std::abs(kinetic_expectation));
  std::vector<double> grid;
  std::vector<cplx> values;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const double w = lambda.grid[i];
    if (w <= 1e-12) continue;
    grid.push_back(w);
    values.emplace_back(-lambda.values[i].imag() / w, 0.0);
  }
  r.regular = make_series(grid, std::move(values), "regular_conductivity");
  r.regular.meta.grid_unit = "J";
  r.regular.meta.cutoff = lambda.meta.cutoff;
  r.regular.meta.filter = lambda.meta.filter;
  r.regular.meta.state = lambda.meta.state;
  return r;
}

cplx time_average(const SeriesRecord& series, double horizon) {
  series.validate();
  if (!(horizon > 0.0)) throw std::invalid_argument("time_average: horizon must be positive");
  if (series.size() < 2 || series.grid.front() > 1e-12 || series.grid.back() < horizon - 1e-9)
    throw std::invalid_argument("time_average: grid does not cover [0, T]");
  std::vector<double> t{0.0};
  std::vector<cplx> v{series.at(0.0)};
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double g = series.grid[i];
    if (g > 1e-12 && g < horizon - 1e-12) {
      t.push_back(g);
      v.push_back(series.values[i]);
    }
  }
  t.push_back(horizon);
  v.push_back(series.at(horizon));
  cplx acc = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) acc += 0.5 * (t[i] - t[i - 1]) * (v[i] + v[i - 1]);
  return acc / horizon;
}

SeriesRecord moving_average(const SeriesRecord& series, double window) {
  series.validate();
  if (series.size() < 2) return series;
  const double step = series.spacing();
  if (window < step * (1.0 - 1e-9)) throw std::invalid_argument("moving_average: window shorter than spacing");
  const auto half = static_cast<std::size_t>(std::floor(window / (2.0 * step) + 1e-9));
  if (2 * half + 1 > series.size()) throw std::invalid_argument("moving_average: window longer than series");
  SeriesRecord out;
  out.meta = series.meta;
  out.meta.quantity = series.meta.quantity + "_moving_average";
  for (std::size_t i = half; i + half < series.size(); ++i) {
    cplx acc = 0.0;
    for (std::size_t j = i - half; j <= i + half; ++j) acc += series.values[j];
    out.grid.push_back(series.grid[i]);
    out.values.push_back(acc / static_cast<double>(2 * half + 1));
  }
  return out;
}

}  // namespace efr
