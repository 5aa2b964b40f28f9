#include "support.hpp"

#include "efr/slater.hpp"

#include <doctest.h>

using namespace efr;
using testing::max_abs;

namespace {

// ⟨ξ_a ξ_b⟩ of a dense state vector.
CMat dense_two_point(const FockSpace& space, const CVec& v) {
  const int m = 2 * space.sites();
  CMat g(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) g(a, b) = v.dot(space.majorana(a) * space.majorana(b) * v);
  return g;
}

QuadraticHamiltonian test_hamiltonian(int n, std::uint64_t seed, double offset = 0.0) {
  return QuadraticHamiltonian(testing::random_hermitian(n, seed), offset);
}

}  // namespace

TEST_CASE("Fock covariance blocks and dense two-point function") {
  const FockState s(4, {1, 2});
  const MajoranaCovariance g = fock_covariance(s);
  CHECK(g.matrix()(0, 1) == doctest::Approx(1.0));
  CHECK(g.matrix()(1, 0) == doctest::Approx(-1.0));
  CHECK(g.matrix()(2, 3) == doctest::Approx(-1.0));
  CHECK(g.purity_defect() < 1e-14);

  const FockSpace space(4);
  const CMat dense = dense_two_point(space, space.basis_vector(s));
  const CMat model = CMat::Identity(8, 8) + kI * g.matrix().cast<cplx>();
  CHECK(max_abs(dense - model) < 1e-12);
}

TEST_CASE("orthogonal evolution reproduces the evolved covariance") {
  const auto h = test_hamiltonian(4, 11, 0.3);
  const FockSpace space(4);
  const FockState s(4, {0, 3});
  for (double t : {0.0, 0.7, -2.3}) {
    const CVec v = DenseSpectrum(space.hamiltonian(h)).propagator(t) * space.basis_vector(s);
    const MajoranaCovariance g = evolve_covariance(fock_covariance(s), orthogonal_evolution(h, t));
    const CMat model = CMat::Identity(8, 8) + kI * g.matrix().cast<cplx>();
    CHECK(max_abs(dense_two_point(space, v) - model) < 1e-10);
    CHECK(g.purity_defect() < 1e-10);
  }
}

TEST_CASE("Wick expectation of four Majoranas matches dense algebra") {
  const auto h = test_hamiltonian(3, 5);
  const FockSpace space(3);
  const FockState s(3, {1});
  const double t = 1.1;
  const CVec v = DenseSpectrum(space.hamiltonian(h)).propagator(t) * space.basis_vector(s);
  const MajoranaCovariance g = evolve_covariance(fock_covariance(s), orthogonal_evolution(h, t));
  const std::vector<std::vector<int>> sets = {{0, 1}, {0, 2, 3, 5}, {1, 2, 4, 5}, {0, 1, 2, 3, 4, 5}, {}};
  for (const auto& idx : sets) {
    CMat op = CMat::Identity(8, 8);
    for (int i : idx) op = op * space.majorana(i);
    const cplx dense = v.dot(op * v);
    CHECK(std::abs(wick_expectation(g, idx) - dense) < 1e-10);
  }
}

TEST_CASE("two-state overlap trace against dense algebra") {
  const auto h = test_hamiltonian(4, 21);
  const FockSpace space(4);
  const FockState s(4, {0, 2});
  const double t = 0.9;
  const CVec v1 = space.basis_vector(s);
  const CVec v2 = DenseSpectrum(space.hamiltonian(h)).propagator(t) * v1;
  const MajoranaCovariance g1 = fock_covariance(s);
  const MajoranaCovariance g2 = evolve_covariance(g1, orthogonal_evolution(h, t));
  const cplx ov = v2.dot(v1);  // ⟨ψ₂|ψ₁⟩
  const std::vector<std::vector<int>> sets = {{}, {0, 3}, {1, 2, 5, 6}, {0, 1, 2, 3, 4, 7}};
  for (const auto& idx : sets) {
    CMat op = CMat::Identity(16, 16);
    for (int i : idx) op = op * space.majorana(i);
    const cplx dense = ov * v1.dot(op * v2);  // Tr[|ψ₂⟩⟨ψ₂|ψ₁⟩⟨ψ₁| X]
    CHECK(std::abs(two_state_overlap_trace(g1, g2, idx) - dense) < 1e-10);
  }
}

TEST_CASE("orthogonal Gaussian states are rejected") {
  const MajoranaCovariance a = fock_covariance(FockState(3, {0}));
  const MajoranaCovariance b = fock_covariance(FockState(3, {1}));
  CHECK_THROWS_AS(mixed_two_point(a, b), OrthogonalStatesError);
}

TEST_CASE("full-space trace and pure-state trace evolution") {
  const auto h = test_hamiltonian(4, 3, -0.4);
  const FockSpace space(4);
  const DenseSpectrum spec(space.hamiltonian(h));
  const FockState s(4, {1, 2, 3});
  for (double t : {0.0, 0.5, 3.0}) {
    const CMat u = spec.propagator(t);
    CHECK(std::abs(gaussian_trace_phase(h, t) - u.trace()) < 1e-10);
    const CVec v = space.basis_vector(s);
    const cplx echo = v.dot(u * v);
    CHECK(std::abs(density_trace_evolution(fock_covariance(s), h, t) - echo) < 1e-11);
  }
}

TEST_CASE("correlation matrix of a Fock state") {
  const CMat c = correlation_matrix(fock_covariance(FockState(3, {0, 2})));
  CHECK(max_abs(c - CMat(RVec(Eigen::Vector3d(1, 0, 1)).cast<cplx>().asDiagonal())) < 1e-14);
}

TEST_CASE("one-body forms survive the Majorana round trip") {
  const CMat c = testing::random_hermitian(4, 9);
  const auto a = MajoranaMonomialSum::from_one_body(c, 0.25);
  const OneBodyForm f = a.one_body();
  CHECK(max_abs(f.matrix - c) < 1e-13);
  CHECK(std::abs(f.constant - 0.25) < 1e-13);
  CHECK(f.pairing_norm < 1e-13);
  CHECK(a.is_hermitian());
  const FockSpace space(4);
  CHECK(max_abs(space.observable(a) - space.one_body(c, 0.25)) < 1e-12);
}

TEST_CASE("Heisenberg rotation of a quadratic form") {
  const auto h = test_hamiltonian(3, 17);
  const FockSpace space(3);
  const CMat u = DenseSpectrum(space.hamiltonian(h)).propagator(0.8);
  const auto a = MajoranaMonomialSum(3, 0.1, {{1.0, 0, 3}, {cplx(0.0, 0.5), 2, 5}, {0.3, 1, 4}});
  const CMat dense = u.adjoint() * space.observable(a) * u;
  CHECK(max_abs(space.observable(a.rotated(orthogonal_evolution(h, 0.8))) - dense) < 1e-10);
}

TEST_CASE("contract_product for a mixed product state") {
  const auto h = test_hamiltonian(3, 23);
  const FockSpace space(3);
  const FockState s(3, {0, 2});
  const CVec v1 = space.basis_vector(s);
  const CVec v2 = DenseSpectrum(space.hamiltonian(h)).propagator(-0.6) * v1;
  const MajoranaCovariance g1 = fock_covariance(s);
  const MajoranaCovariance g2 = evolve_covariance(g1, orthogonal_evolution(h, -0.6));
  const MixedTwoPoint mixed = mixed_two_point(g1, g2);
  const auto a = MajoranaMonomialSum(3, 0.2, {{1.0, 0, 1}, {cplx(0.0, 0.5), 1, 4}});
  const auto b = MajoranaMonomialSum(3, -0.1, {{0.7, 2, 5}, {cplx(0.3, 0.2), 0, 3}});
  const cplx dense = v1.dot(space.observable(a) * space.observable(b) * v2) / v1.dot(v2);
  CHECK(std::abs(contract_product(a, b, mixed.two_point) - dense) < 1e-10);
}

TEST_CASE("Slater transitions against dense algebra") {
  const auto h = test_hamiltonian(4, 31);
  const FockSpace space(4);
  const FockState s(4, {0, 3});
  const double t = 1.3;
  const CVec v1 = space.basis_vector(s);
  const CVec v2 = DenseSpectrum(space.hamiltonian(h)).propagator(t) * v1;
  const SlaterTransition tr(s.orbitals(), h.propagator(t) * s.orbitals());
  CHECK(std::abs(tr.overlap() - v1.dot(v2)) < 1e-12);
  const CMat t1 = tr.one_body();
  const CMat x = testing::random_hermitian(4, 2);
  const CMat z = tr.two_body_right(x);
  const CMat zl = tr.two_body_left(x);
  const CMat xop = space.one_body(x);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const CMat ab = space.annihilator(a).adjoint() * space.annihilator(b);
      CHECK(std::abs(t1(a, b) - v1.dot(ab * v2)) < 1e-12);
      CHECK(std::abs(z(a, b) - v1.dot(ab * xop * v2)) < 1e-11);
      CHECK(std::abs(zl(a, b) - v1.dot(xop * ab * v2)) < 1e-11);
    }
  CHECK(std::abs(tr.one_body(x) - v1.dot(xop * v2)) < 1e-12);
}

TEST_CASE("Slater transitions between orthogonal determinants stay finite") {
  const FockSpace space(4);
  const FockState s1(4, {0, 1});
  const FockState s2(4, {0, 2});
  const SlaterTransition tr(s1.orbitals(), s2.orbitals());
  CHECK(std::abs(tr.overlap()) < 1e-14);
  const CMat t1 = tr.one_body();
  const CMat x = testing::random_hermitian(4, 5);
  const CMat z = tr.two_body_right(x);
  const CVec v1 = space.basis_vector(s1), v2 = space.basis_vector(s2);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const CMat ab = space.annihilator(a).adjoint() * space.annihilator(b);
      CHECK(std::abs(t1(a, b) - v1.dot(ab * v2)) < 1e-12);
      CHECK(std::abs(z(a, b) - v1.dot(ab * space.one_body(x) * v2)) < 1e-11);
    }
}
