#include "support.hpp"

#include "efr/ensemble.hpp"

#include <doctest.h>

#include <map>

using namespace efr;

namespace {

struct Fixture {
  ModelSpec model = testing::chain(6);
  QuadraticHamiltonian h = build_hamiltonian(model);
  DenseSector sector = build_sector(model, 2);
  double radius = spectral_radius(h, 2);

  FilterSpec spec(double energy, double width, double reach = 8.0) const {
    return FilterSpec::resolved(energy, width, radius, reach);
  }
  SamplerConfig sampler(double energy, double width) const {
    SamplerConfig cfg;
    cfg.target = spec(energy, width, 6.0);
    cfg.particles = 2;
    return cfg;
  }
};

// Diagonal H: every Fock state is an eigenstate with energy Σ ε_occ.
QuadraticHamiltonian diagonal_hamiltonian() {
  RVec e(5);
  e << -1.0, -0.4, 0.3, 0.9, 1.6;
  return QuadraticHamiltonian(e.cast<cplx>().asDiagonal());
}

}  // namespace

TEST_CASE("state weight of eigenstates") {
  const auto h = diagonal_hamiltonian();
  const FockState psi(5, {0, 3});  // E = −0.1
  const double width = 0.4;
  const double radius = spectral_radius(h, 2);
  const double peak = 1.0 / std::sqrt(2 * kPi * width * width);
  const StateWeight at = state_weight(psi, FilterSpec::resolved(-0.1, width, radius), h);
  CHECK(at.value == doctest::Approx(peak).epsilon(1e-8));
  CHECK_FALSE(at.clipped);
  const StateWeight tail = state_weight(psi, FilterSpec::resolved(-0.1 + 10 * width, width, radius, 11.0), h);
  CHECK(tail.value < 1e-20 * peak);
}

TEST_CASE("state weight against the dense filter diagonal") {
  const ModelSpec m = testing::chain(8);
  const auto h = build_hamiltonian(m);
  const DenseSector sector = build_sector(m, 3);
  const FockState psi(8, {0, 4, 5});
  for (double e : {-3.0, -0.5, 1.0}) {
    const FilterSpec s = FilterSpec::resolved(e, 0.5, spectral_radius(h, 3), 8.0);
    const CVec v = sector.vector(psi);
    CHECK(std::abs(state_weight(psi, s, h).value - v.dot(gaussian_filter(sector.spectrum(), e, 0.5) * v).real()) <
          1e-8);
    auto table = std::make_shared<PropagatorTable>(h, s.time_step, s.cutoff);
    CHECK(std::abs(WeightEvaluator(table, s)(psi).raw - state_weight(psi, s, h).raw) < 1e-13);
  }
}

TEST_CASE("tilted contour weights near the spectral edge") {
  const ModelSpec m = testing::chain(8);
  const auto h = build_hamiltonian(m);
  const DenseSector sector = build_sector(m, 3);
  const double width = 0.5;
  const double e0 = sector.energies()(0);
  const FilterSpec s = FilterSpec::resolved(e0, width, spectral_radius(h, 3), 6.0);
  const double beta = saddle_tilt(h, 3, e0, width);
  CHECK(beta > 0.0);
  auto plain = std::make_shared<PropagatorTable>(h, s.time_step, s.cutoff);
  auto tilted = std::make_shared<PropagatorTable>(h, s.time_step, s.cutoff, 1, ContourTilt{beta, e0, 3});
  const WeightEvaluator a(plain, s), b(tilted, s);
  const CMat p = gaussian_filter(sector.spectrum(), e0, width);
  double plain_err = 0.0, tilted_err = 0.0;
  for (const auto& psi : sector.basis()) {
    const CVec v = sector.vector(psi);
    const double exact = v.dot(p * v).real();
    plain_err = std::max(plain_err, std::abs(a(psi).raw - exact) / exact);
    tilted_err = std::max(tilted_err, std::abs(b(psi).raw - exact) / exact);
  }
  // The real-time sum has an absolute error floor, large relative to far-off states.
  CHECK(tilted_err < 1e-6);
  CHECK(tilted_err < 0.1 * plain_err);

  // The estimator on a table of twice the length carries half the tilt on each filter.
  const double wide = std::sqrt(2.0) * width;
  const int cutoff = static_cast<int>(std::ceil(s.reach() / (wide * s.time_step)));
  auto long_plain = std::make_shared<PropagatorTable>(h, s.time_step, 2 * cutoff);
  auto long_tilted = std::make_shared<PropagatorTable>(h, s.time_step, 2 * cutoff, 1, ContourTilt{beta, e0, 3});
  const CMat k = kinetic_matrix(m);
  const CMat kd = sector.one_body(k);
  const FilteredObservableEstimator ep(long_plain, h, wide, cutoff, {k}), et(long_tilted, h, wide, cutoff, {k});
  const CMat p2 = gaussian_filter(sector.spectrum(), e0, wide);
  double est_plain = 0.0, est_tilted = 0.0, norm_tilted = 0.0;
  for (const auto& psi : sector.basis()) {
    const CVec v = p2 * sector.vector(psi);
    const double norm = v.squaredNorm();
    const double exact = v.dot(kd * v).real() / norm;
    const auto a1 = ep.evaluate(psi, e0), a2 = et.evaluate(psi, e0);
    est_plain = std::max(est_plain, std::abs(a1.values[0].real() - exact));
    est_tilted = std::max(est_tilted, std::abs(a2.values[0].real() - exact));
    norm_tilted = std::max(norm_tilted, std::abs(a2.norm - norm) / norm);
  }
  CHECK(est_tilted < 1e-6);
  CHECK(norm_tilted < 1e-6);
  CHECK_THROWS_AS(et.evaluate(sector.basis()[0], e0 + 0.5), std::invalid_argument);

  FilterSpec other = s;
  other.energy += 1.0;
  CHECK_THROWS_AS(WeightEvaluator(tilted, other), std::invalid_argument);
  CHECK_THROWS_AS(PropagatorTable(h, s.time_step, 4, 1, ContourTilt{1.0, e0, 0}), std::invalid_argument);
}

TEST_CASE("filtered observable estimator matches the filtered Fock state") {
  Fixture f;
  const FilterSpec s = f.spec(-0.7, 0.9);
  auto table = std::make_shared<PropagatorTable>(f.h, s.time_step, 2 * s.cutoff);
  const CMat k = kinetic_matrix(f.model);
  const CMat j = current_matrix(f.model);
  const FilteredObservableEstimator est(table, f.h, s.width, s.cutoff, {k, j});
  for (const auto& psi : enumerate_sector(6, 2)) {
    const FilteredFockState fs(f.h, psi, riemann_filter_weights(s));
    const auto v = est.evaluate(psi, s.energy);
    CHECK(v.norm == doctest::Approx(fs.norm()).epsilon(1e-9));
    CHECK(std::abs(v.values[0] - fs.expectation(k)) < 1e-9);
    CHECK(std::abs(v.values[1] - fs.expectation(j)) < 1e-9);
  }
}

TEST_CASE("acceptance rule satisfies detailed balance") {
  const ModelSpec m = testing::chain(4);
  const auto h = build_hamiltonian(m);
  const FilterSpec s = FilterSpec::resolved(-0.5, 0.6, spectral_radius(h, 2));
  const auto states = enumerate_sector(4, 2);
  std::map<FockState, double> p;
  for (const auto& st : states) p[st] = state_weight(st, s, h).value;
  const double proposal = 1.0 / (2 * 2);
  for (const auto& a : states)
    for (int from : a.occupied_sites())
      for (int to : a.empty_sites()) {
        const FockState b = a.moved(from, to);
        const double forward = p[a] * proposal * acceptance_probability(p[a], p[b]);
        const double backward = p[b] * proposal * acceptance_probability(p[b], p[a]);
        CHECK(forward == doctest::Approx(backward).epsilon(1e-12));
      }
  CHECK(acceptance_probability(0.0, 0.0) == 1.0);
  CHECK(acceptance_probability(2.0, 1.0) == 0.5);
}

TEST_CASE("sampler reproduces the weight distribution") {
  Fixture f;
  SamplerConfig cfg = f.sampler(-1.0, 0.8);
  cfg.samples_per_chain = 1500;
  cfg.stride = 18;
  const SampleSet s = mh_sample(cfg, f.h);
  std::map<FockState, int> counts;
  for (const auto& st : s.states) ++counts[st];
  double total = 0.0;
  std::map<FockState, double> w;
  for (const auto& st : enumerate_sector(6, 2)) total += (w[st] = state_weight(st, cfg.target, f.h).value);
  const double n = static_cast<double>(s.states.size());
  for (const auto& [st, weight] : w) {
    const double p = weight / total;
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(counts[st] / n - p) < 3 * se + 1e-12);
  }
  for (const auto& d : s.diagnostics) {
    CHECK(d.acceptance_rate >= 0.0);
    CHECK(d.acceptance_rate <= 1.0);
  }
}

TEST_CASE("very wide filter accepts every move") {
  Fixture f;
  SamplerConfig cfg = f.sampler(0.0, 1e4);
  cfg.target = FilterSpec{0.0, 1e4, 1e-3, 4};
  const SampleSet s = mh_sample(cfg, f.h);
  for (const auto& d : s.diagnostics) CHECK(d.acceptance_rate > 0.999);
}

TEST_CASE("sampler determinism and thread independence") {
  Fixture f;
  SamplerConfig cfg = f.sampler(0.5, 0.7);
  cfg.seed = 1234;
  const SampleSet a = mh_sample(cfg, f.h);
  cfg.threads = 3;
  const SampleSet b = mh_sample(cfg, f.h);
  CHECK(a.states == b.states);
  cfg.seed = 1235;
  CHECK(mh_sample(cfg, f.h).states != a.states);
}

TEST_CASE("sampler configuration errors") {
  Fixture f;
  SamplerConfig cfg = f.sampler(0.0, 1.0);
  cfg.particles = 0;
  CHECK_THROWS_AS(mh_sample(cfg, f.h), std::invalid_argument);
  cfg.particles = 6;
  CHECK_THROWS_AS(mh_sample(cfg, f.h), std::invalid_argument);
  cfg.particles = 2;
  cfg.stride = 0;
  CHECK_THROWS_AS(mh_sample(cfg, f.h), std::invalid_argument);
}

TEST_CASE("zero-weight start falls back to the closest diagonal energy") {
  // Only |0,1⟩ (E = −1.4) lies in the window; without redraws most chains need the fallback.
  const auto h = diagonal_hamiltonian();
  SamplerConfig cfg;
  cfg.target = FilterSpec::resolved(-1.4, 0.02, spectral_radius(h, 2));
  cfg.particles = 2;
  cfg.chains = 6;
  cfg.samples_per_chain = 5;
  cfg.retries = 0;
  const SampleSet s = mh_sample(cfg, h);
  int fallbacks = 0;
  for (const auto& d : s.diagnostics) fallbacks += d.fallback_start ? 1 : 0;
  CHECK(fallbacks >= 1);
  for (const auto& st : s.states) CHECK(st == FockState(5, {0, 1}));

  // A window far below the sector has no weight anywhere, the fallback included.
  Fixture f;
  SamplerConfig out = f.sampler(-4.6, 0.05);
  out.chains = 2;
  out.samples_per_chain = 5;
  CHECK_THROWS_AS(mh_sample(out, f.h), NoSpectralWeightError);
}

TEST_CASE("negligible-weight states are essentially never sampled") {
  const auto h = diagonal_hamiltonian();
  SamplerConfig cfg;
  cfg.target = FilterSpec::resolved(-1.4, 0.1, spectral_radius(h, 2));
  cfg.particles = 2;
  cfg.samples_per_chain = 500;
  const SampleSet s = mh_sample(cfg, h);
  double top = 0.0;
  std::map<FockState, double> w;
  for (const auto& st : enumerate_sector(5, 2)) top = std::max(top, w[st] = state_weight(st, cfg.target, h).value);
  int rare = 0;
  for (const auto& st : s.states) rare += w[st] < 1e-12 * top;
  CHECK(rare < 1e-3 * s.states.size());
}

TEST_CASE("sampled estimate of identical eigenstates") {
  const auto h = diagonal_hamiltonian();
  SampleSet s;
  for (int i = 0; i < 20; ++i) {
    s.states.emplace_back(5, std::vector<int>{1, 2});
    s.chain.push_back(i % 2);
  }
  CMat a = CMat::Zero(5, 5);
  a(1, 1) = 2.0;
  a(0, 0) = 5.0;
  const FilterSpec spec = FilterSpec::resolved(-0.1, 0.5, spectral_radius(h, 2));
  const SampledEstimate e = ensemble_expectation_sampled(s, a, 0.5, spec, h);
  CHECK(e.mean == doctest::Approx(2.5));
  CHECK(e.standard_error == 0.0);
}

TEST_CASE("exact ensemble value against the dense sector") {
  Fixture f;
  const CMat k = kinetic_matrix(f.model);
  const CMat kd = f.sector.one_body(k);
  for (double e : {-3.5, -1.0, 0.0, 2.0}) {
    const FilterSpec s = f.spec(e, 0.5);
    const CMat p = gaussian_filter(f.sector.spectrum(), e, 0.5);
    CHECK(std::abs(ensemble_expectation_exact(f.h, s, k, 0.0, 2) - (p * kd).trace().real() / p.trace().real()) <
          1e-8);
    CHECK(ensemble_expectation_exact(f.h, s, MajoranaMonomialSum::identity(6), 2) == doctest::Approx(1.0));
  }
}

TEST_CASE("filter-ensemble identity over all Fock states") {
  Fixture f;
  const double width = 0.5;
  const CMat k = kinetic_matrix(f.model);
  for (double e : {-2.0, 0.3}) {
    const FilterSpec s = f.spec(e, width);
    const double exact = ensemble_expectation_exact(f.h, s, k, 0.0, 2);
    const FilterSpec wide = f.spec(e, std::sqrt(2.0) * width);
    double num = 0.0, den = 0.0;
    for (const auto& psi : enumerate_sector(6, 2)) {
      const double p = state_weight(psi, s, f.h).raw;
      const FilteredFockState fs(f.h, psi, riemann_filter_weights(wide));
      num += p * fs.expectation(k).real();
      den += p;
    }
    CHECK(std::abs(num / den - exact) < 1e-8 * std::abs(exact));
  }
}

TEST_CASE("sampled and exact ensemble values agree") {
  Fixture f;
  const CMat k = kinetic_matrix(f.model);
  SamplerConfig cfg = f.sampler(-1.2, 0.8);
  cfg.samples_per_chain = 400;
  cfg.seed = 99;
  const SampleSet s = mh_sample(cfg, f.h);
  const SampledEstimate e = ensemble_expectation_sampled(s, k, 0.0, cfg.target, f.h);
  const double exact = ensemble_expectation_exact(f.h, cfg.target, k, 0.0, 2);
  CHECK(e.standard_error > 0.0);
  CHECK(std::abs(e.mean - exact) < 3 * e.standard_error);
}

TEST_CASE("standard-error coverage over repeated runs") {
  Fixture f;
  const CMat k = kinetic_matrix(f.model);
  SamplerConfig cfg = f.sampler(-0.8, 0.8);
  cfg.chains = 4;
  cfg.samples_per_chain = 60;
  const double width = std::sqrt(2.0) * cfg.target.width;
  const int cutoff = static_cast<int>(std::ceil(cfg.target.reach() / (width * cfg.target.time_step) - 1e-9));
  auto table = std::make_shared<PropagatorTable>(f.h, cfg.target.time_step, std::max(2 * cutoff, cfg.target.cutoff));
  const FilteredObservableEstimator est(table, f.h, width, cutoff, {k});
  const WeightEvaluator weight(table, cfg.target);
  const double exact = ensemble_expectation_exact(f.h, cfg.target, k, 0.0, 2);
  int covered = 0;
  for (int run = 0; run < 100; ++run) {
    cfg.seed = 1000 + run;
    const SampleSet s = mh_sample(cfg, f.h, weight);
    const SampledEstimate e = ensemble_expectation_sampled(s, est, 0, cfg.target.energy);
    covered += std::abs(e.mean - exact) <= 2 * e.standard_error;
  }
  CHECK(covered >= 90);
}

TEST_CASE("canonical average") {
  Fixture f;
  const CMat k = kinetic_matrix(f.model);
  const CMat kd = f.sector.one_body(k);
  const RVec& es = f.sector.energies();
  const double bandwidth = es(es.size() - 1) - es(0);
  const double width = 0.1 * bandwidth;
  const auto grid = uniform_grid(es(0) - 12 * width, es(es.size() - 1) + 12 * width, width / 4);
  CHECK(canonical_expectation(f.h, CMat::Zero(6, 6), 1.0, 1.0, width, grid, 2) == doctest::Approx(1.0));
  for (double beta : {0.5, 1.0}) {
    const CMat gibbs = f.sector.spectrum().function([&](double e) { return std::exp(-beta * (e - es(0))); });
    const double dense = (gibbs * kd).trace().real() / gibbs.trace().real();
    const double value = canonical_expectation(f.h, k, 0.0, beta, width, grid, 2);
    CHECK(std::abs(value - dense) < 0.02 * std::abs(dense));
  }
  const double flat = canonical_expectation(f.h, k, 0.0, 0.0, width, grid, 2);
  CHECK(std::abs(flat - kd.trace().real() / kd.rows()) < 1e-6);
  CHECK_THROWS_AS(canonical_expectation(f.h, k, 0.0, 1.0, width, uniform_grid(-1.0, 1.0, width), 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(canonical_expectation(f.h, k, 0.0, 1.0, width, uniform_grid(-1.0, 1.0, width / 4), 2),
                  std::invalid_argument);
}
