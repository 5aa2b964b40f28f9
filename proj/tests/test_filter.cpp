#include "support.hpp"

#include "efr/filter.hpp"

#include <doctest.h>

using namespace efr;
using testing::max_abs;

namespace {

struct Fixture {
  ModelSpec model = testing::chain(6);
  QuadraticHamiltonian h = build_hamiltonian(model);
  DenseSector sector = build_sector(model, 2);
  FockState psi{6, {1, 4}};
  double radius = spectral_radius(h, 2);

  FilterSpec spec(double energy, double width, double reach = 8.0) const {
    return FilterSpec::resolved(energy, width, radius, reach);
  }
};

}  // namespace

TEST_CASE("filter spec validation") {
  FilterSpec s;
  s.width = 0.5;
  s.time_step = 0.1;
  s.cutoff = 80;
  CHECK_NOTHROW(s.validate());
  CHECK_FALSE(s.well_resolved());
  s.cutoff = 79;  // KδΔt = 3.95
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.cutoff = 120;
  CHECK(s.well_resolved());
  s.width = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("Riemann weights are conjugate symmetric and resolve a Gaussian") {
  const FilterSpec s = FilterSpec::resolved(0.7, 0.5, 10.0);
  CHECK(s.time_step == doctest::Approx(kPi / 20.0));
  CHECK(s.cutoff == static_cast<int>(std::ceil(6.0 / (0.5 * kPi / 20.0))));
  const FilterWeights w = riemann_filter_weights(s);
  for (int k = 1; k <= w.cutoff(); ++k) CHECK(w[-k] == std::conj(w[k]));
  CHECK(w[0].imag() == 0.0);
  for (double e : {-3.0, 0.0, 0.7, 1.2, 5.0}) {
    const double g = std::exp(-(e - 0.7) * (e - 0.7) / 0.5) / std::sqrt(2 * kPi * 0.25);
    CHECK(std::abs(w.response(e) - g) < 1e-7);
  }
}

TEST_CASE("convolved weights represent the product of two filters") {
  const FilterSpec s = FilterSpec::resolved(0.3, 0.8, 8.0, 8.0);
  const FilterWeights w = riemann_filter_weights(s);
  const FilterWeights w2 = convolve(w, w);
  for (double e : {-1.0, 0.3, 2.0}) CHECK(std::abs(w2.response(e) - w.response(e) * w.response(e)) < 1e-12);
}

TEST_CASE("dense filter of a quadratic Hamiltonian") {
  const auto h = build_hamiltonian(testing::chain(4));
  const double d = 0.7;
  const CMat p = dense_filter(h, 0.5, d);
  CHECK(max_abs(p - p.adjoint()) < 1e-12);
  // P_δ = √(8π) δ P_{√2δ}²
  const CMat q = dense_filter(h, 0.5, std::sqrt(2.0) * d);
  CHECK(max_abs(p - std::sqrt(8 * kPi) * d * q * q) < 1e-12);
}

TEST_CASE("filtered expectation matches the exact filter (both backends)") {
  Fixture f;
  const auto j = current_operator(f.model);
  const auto k = kinetic_operator(f.model);
  const CMat jd = f.sector.one_body(current_matrix(f.model));
  const CMat kd = f.sector.one_body(kinetic_matrix(f.model));
  for (double e : {-2.0, -0.5, 0.8}) {
    const FilterSpec s = f.spec(e, 0.6);
    CHECK(std::abs(filtered_expectation(f.psi, j, s, f.h) - exact_filtered_value(f.sector, f.psi, jd, e, 0.6)) < 1e-8);
    CHECK(std::abs(filtered_expectation(f.psi, k, s, f.h) - exact_filtered_value(f.sector, f.psi, kd, e, 0.6)) < 1e-8);
    FilterOptions opts;
    opts.backend = OverlapBackend::majorana;
    opts.echo_floor = 0.0;
    CHECK(std::abs(filtered_expectation(f.psi, k, s, f.h, opts) - exact_filtered_value(f.sector, f.psi, kd, e, 0.6)) <
          1e-8);
  }
}

TEST_CASE("filtered density and single-filter variant") {
  Fixture f;
  const FilterSpec s = f.spec(-0.4, 0.5);
  const FilteredFockState fs(f.h, f.psi, riemann_filter_weights(s));
  const CMat p = gaussian_filter(f.sector.spectrum(), -0.4, 0.5);
  const CVec v = f.sector.vector(f.psi);
  CHECK(std::abs(fs.norm() - v.dot(p * p * v).real()) < 1e-9);
  CHECK(std::abs(fs.single_norm() - v.dot(p * v)) < 1e-9);
  // ⟨n_site⟩ of the filtered state
  const CMat rho = fs.site_density();
  for (int n = 0; n < 6; ++n) {
    CMat c = CMat::Zero(6, 6);
    c(n, n) = 1.0;
    const double dense = exact_filtered_value(f.sector, f.psi, f.sector.one_body(c), -0.4, 0.5);
    CHECK(std::abs(rho(n, n).real() - dense) < 1e-8);
  }
  CHECK(std::abs(rho.trace() - 2.0) < 1e-9);
  const CMat jd = f.sector.one_body(current_matrix(f.model));
  const cplx single = v.dot(jd * p * v) / v.dot(p * v);
  CHECK(std::abs(single_filter_expectation(f.psi, current_operator(f.model), s, f.h) - single) < 1e-8);
  FilterOptions opts;
  opts.backend = OverlapBackend::majorana;
  opts.echo_floor = 0.0;
  CHECK(std::abs(single_filter_expectation(f.psi, current_operator(f.model), s, f.h, opts) - single) < 1e-8);
}

TEST_CASE("overlap floor") {
  Fixture f;
  CHECK_THROWS_AS(filtered_expectation(f.psi, current_operator(f.model), f.spec(f.radius + 3.0, 0.2, 6.0), f.h),
                  InsufficientOverlapError);
}

TEST_CASE("LDOS and DOS against dense spectra") {
  Fixture f;
  const auto grid = uniform_grid(-5.0, 5.0, 0.25);
  const CVec v = f.sector.vector(f.psi);
  auto dense_curve = [&](auto value) {
    std::vector<double> out;
    for (double e : grid) out.push_back(value(e));
    const double peak = *std::max_element(out.begin(), out.end());
    for (auto& x : out) x /= peak;
    return out;
  };
  const SeriesRecord l = ldos(f.psi, f.h, grid, 0.3, std::nullopt, 8.0);
  const auto ref = dense_curve([&](double e) { return v.dot(gaussian_filter(f.sector.spectrum(), e, 0.3) * v).real(); });
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(l.values[i].real() - ref[i]) < 1e-8);

  const CMat pre = gaussian_filter(f.sector.spectrum(), -1.0, 0.7);
  const SeriesRecord lf = ldos(f.psi, f.h, grid, 0.3, Prefilter{-1.0, 0.7}, 8.0);
  const auto ref_f = dense_curve(
      [&](double e) { return v.dot(pre * gaussian_filter(f.sector.spectrum(), e, 0.3) * pre * v).real(); });
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(lf.values[i].real() - ref_f[i]) < 1e-8);

  const SeriesRecord d = dos(f.h, grid, 0.3, 2, 8.0);
  const auto ref_d = dense_curve([&](double e) { return gaussian_filter(f.sector.spectrum(), e, 0.3).trace().real(); });
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(d.values[i].real() - ref_d[i]) < 1e-8);
}

TEST_CASE("curve moments of a sampled Gaussian") {
  SeriesRecord c;
  c.grid = uniform_grid(-10.0, 10.0, 0.01);
  for (double x : c.grid) c.values.emplace_back(std::exp(-(x - 1.0) * (x - 1.0) / (2 * 0.64)), 0.0);
  const auto [mean, sd] = curve_moments(c);
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sd == doctest::Approx(0.8).epsilon(1e-4));
}

TEST_CASE("number projector and elementary symmetric polynomials") {
  const auto phases = number_projector_phases(4, 2);
  CHECK(phases.size() == 5);
  cplx sum = 0.0;
  for (const auto& p : phases) sum += p.phase;
  CHECK(std::abs(sum) < 1e-12);
  const std::vector<cplx> z{1.0, 2.0, 3.0};
  const auto e = elementary_symmetric(z, 3);
  CHECK(std::abs(e[1] - 6.0) < 1e-14);
  CHECK(std::abs(e[2] - 11.0) < 1e-14);
  CHECK(std::abs(e[3] - 6.0) < 1e-14);
}

TEST_CASE("projected traces by both methods") {
  Fixture f;
  const auto k = kinetic_operator(f.model);
  const CMat kd = f.sector.one_body(kinetic_matrix(f.model));
  for (double t : {0.0, 0.4, 3.7, 19.0}) {
    const CMat u = f.sector.propagator(t);
    const cplx ref = u.trace();
    const cplx ref_k = (u * kd).trace();
    for (auto m : {ProjectionMethod::fourier, ProjectionMethod::symmetric_polynomial}) {
      CHECK(std::abs(projected_trace(f.h, t, 2, nullptr, m) - ref) < 1e-10);
      CHECK(std::abs(projected_trace(f.h, t, 2, &k, m) - ref_k) < 1e-10);
    }
  }
}

TEST_CASE("ensemble occupations against the dense sector") {
  Fixture f;
  const int n = 6;
  const CMat& u = f.h.modes();
  for (double e : {-4.0, -1.5, 0.0, 2.5}) {
    const double width = 0.5;
    const auto occ = ensemble_occupations(f.h, f.spec(e, width), 2, true);
    const CMat p = gaussian_filter(f.sector.spectrum(), e, width);
    const double tr = p.trace().real();
    CHECK(std::abs(occ.trace - tr) < 1e-9 * std::max(1.0, tr));
    for (int a = 0; a < n; ++a) {
      const CMat na = f.sector.one_body(u.col(a) * u.col(a).adjoint());
      CHECK(std::abs(occ.n(a) - (na * p).trace().real() / tr) < 1e-8);
      for (int b = a + 1; b < n; ++b) {
        const CMat nb = f.sector.one_body(u.col(b) * u.col(b).adjoint());
        CHECK(std::abs(occ.nn(a, b) - (na * nb * p).trace().real() / tr) < 1e-8);
      }
    }
  }
}
