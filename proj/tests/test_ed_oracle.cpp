#include "support.hpp"

#include "efr/ed_oracle.hpp"

#include <doctest.h>

using namespace efr;

namespace {

CMat site_density(int sites, int site) {
  CMat n = CMat::Zero(sites, sites);
  n(site, site) = 1.0;
  return n;
}

}  // namespace

TEST_CASE("Jordan-Wigner operators obey the canonical algebra") {
  const FockSpace fs(4);
  const CMat one = CMat::Identity(fs.dimension(), fs.dimension());
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const CMat ai = fs.annihilator(i), aj = fs.annihilator(j);
      CHECK(testing::max_abs(ai * aj.adjoint() + aj.adjoint() * ai - (i == j ? one : CMat(CMat::Zero(16, 16)))) < 1e-14);
      CHECK(testing::max_abs(ai * aj + aj * ai) < 1e-14);
    }
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      const CMat xa = fs.majorana(a), xb = fs.majorana(b);
      CHECK(testing::max_abs(xa * xb + xb * xa - (a == b ? CMat(2.0 * one) : CMat(CMat::Zero(16, 16)))) < 1e-14);
    }
  CHECK_THROWS(FockSpace(13));
}

TEST_CASE("sector Hamiltonian is the block of the full one") {
  const ModelSpec m = testing::chain(5);
  const auto h = build_hamiltonian(m);
  const FockSpace fs(5);
  const CMat full = fs.hamiltonian(h);
  const DenseSector sector = build_sector(m, 2);
  CHECK(sector.dimension() == 10);
  for (Eigen::Index r = 0; r < sector.dimension(); ++r)
    for (Eigen::Index c = 0; c < sector.dimension(); ++c) {
      const cplx ref = fs.basis_vector(sector.basis()[r]).dot(full * fs.basis_vector(sector.basis()[c]));
      CHECK(std::abs(sector.hamiltonian()(r, c) - ref) < 1e-13);
    }
  const CMat k = kinetic_matrix(m);
  const CMat kd = sector.one_body(k, 0.5);
  const CMat kf = fs.one_body(k, 0.5);
  for (Eigen::Index r = 0; r < sector.dimension(); ++r) {
    const cplx ref = fs.basis_vector(sector.basis()[r]).dot(kf * fs.basis_vector(sector.basis()[0]));
    CHECK(std::abs(kd(r, 0) - ref) < 1e-13);
  }
  CHECK(testing::max_abs(sector.propagator(0.7) * sector.propagator(-0.7) - CMat::Identity(10, 10)) < 1e-12);
  CHECK_THROWS_AS(DenseSector(h.matrix(), 0.0, 2, 5), std::invalid_argument);
}

TEST_CASE("Gaussian half-line transform") {
  // Frozen Dawson values D(x).
  const std::pair<double, double> dawson[] = {
      {0.3, 0.282631665021312}, {1.0, 0.5380795069127684}, {2.5, 0.22308372216743555}, {7.0, 0.0721809746582363}};
  const double sigma = 1.7;
  for (const auto& [x, d] : dawson) {
    const double nu = x * std::sqrt(2.0) / sigma;
    const cplx v = gaussian_half_line(nu, sigma);
    CHECK(v.imag() == doctest::Approx(sigma * std::sqrt(2.0) * d).epsilon(1e-12));
    CHECK(v.real() == doctest::Approx(sigma * std::sqrt(kPi / 2) * std::exp(-x * x)).epsilon(1e-12));
    CHECK(std::abs(gaussian_half_line(-nu, sigma) - std::conj(v)) < 1e-14);
  }
  // Direct quadrature.
  const double nu = 0.8;
  cplx acc = 0.0;
  const double h = 1e-3;
  for (int i = 0; i <= 20000; ++i) {
    const double t = i * h;
    acc += (i == 0 || i == 20000 ? 0.5 : 1.0) * h * std::exp(cplx(0.0, nu * t) - t * t / (2 * sigma * sigma));
  }
  CHECK(std::abs(acc - gaussian_half_line(nu, sigma)) < 1e-6);
}

TEST_CASE("linear response oracle converges at second order") {
  const ModelSpec m = testing::chain(6);
  const DenseSector sector = build_sector(m, 3);
  const CMat j = sector.one_body(current_matrix(m));
  const CMat x = sector.one_body(site_density(6, 2));
  const CVec v0 = sector.eigenvectors().col(0);
  PerturbationSpec pert;
  pert.profile = [](double t) { return std::sin(0.9 * t) * std::exp(-0.1 * t); };
  pert.coupling = x;
  pert.rho0 = v0 * v0.adjoint();
  const std::vector<double> times = {0.5, 1.5, 3.0, 5.0};
  pert.strength = 1e-2;
  const KuboResult a = kubo_check(sector, pert, j, times);
  pert.strength = 2e-2;
  const KuboResult b = kubo_check(sector, pert, j, times);
  const double ratio = b.max_deviation / a.max_deviation;
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
  double scale = 0.0;
  for (double l : a.linear) scale = std::max(scale, std::abs(l));
  CHECK(scale > 1e-4);
  CHECK(a.max_deviation < 1e-2 * scale);
  pert.profile = nullptr;
  CHECK_THROWS_AS(kubo_check(sector, pert, j, times), std::invalid_argument);
}

TEST_CASE("susceptibility of a stationary state depends on t - t'") {
  const ModelSpec m = testing::chain(6);
  const DenseSector sector = build_sector(m, 2);
  const CMat j = sector.one_body(current_matrix(m));
  const CVec v = sector.eigenvectors().col(3);
  const CMat rho = v * v.adjoint();
  const cplx a = dense_susceptibility(sector, rho, j, j, 2.0, 0.5);
  const cplx b = dense_susceptibility(sector, rho, j, j, 3.7, 2.2);
  CHECK(std::abs(a - b) < 1e-12);
  CHECK(std::abs(a) > 1e-6);
  CHECK(dense_susceptibility(sector, rho, j, j, 0.5, 2.0) == cplx(0.0));
  // A Hermitian pair gives a real susceptibility.
  CHECK(std::abs(a.imag()) < 1e-12);
}

TEST_CASE("two-copy circuit identity") {
  const ModelSpec m = testing::chain(5);
  const DenseSector sector = build_sector(m, 2);
  const CMat a = sector.one_body(site_density(5, 1));
  const CMat b = sector.one_body(current_matrix(m));
  const FockState psi(5, {0, 3});
  const auto r = circuit_c_identity_check(sector, psi, a, b, 0.3, -0.8, 1.1);
  CHECK(r.factorization_deviation < 1e-12);
  CHECK(r.recovery_deviation < 1e-12);
  CHECK(std::abs(r.correlator) > 1e-6);
}

TEST_CASE("filtered values from the dense oracle") {
  const ModelSpec m = testing::chain(6);
  const DenseSector sector = build_sector(m, 3);
  const CMat k = sector.one_body(kinetic_matrix(m));
  const FockState psi(6, {0, 2, 4});
  // Wide filter returns the plain expectation value, a narrow one the eigenvalue average.
  const CVec v = sector.vector(psi);
  CHECK(std::abs(exact_filtered_value(sector, psi, k, 0.0, 1e4) - v.dot(k * v).real()) < 1e-6);
  const double e0 = sector.energies()(0);
  const CVec g = sector.eigenvectors().col(0);
  if (std::norm(g.dot(v)) > 1e-6 && sector.energies()(1) - e0 > 0.2)
    CHECK(exact_filtered_value(sector, psi, k, e0 - 1.0, 0.05) == doctest::Approx(g.dot(k * g).real()).epsilon(1e-6));
}
