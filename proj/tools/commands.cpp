#include "commands.hpp"

#include "output.hpp"

#include "efr/ed_oracle.hpp"
#include "efr/ensemble.hpp"
#include "efr/filter.hpp"
#include "efr/parallel.hpp"
#include "efr/response.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

namespace efr::cli {

namespace {

using json = nlohmann::ordered_json;

FockState initial_state(const ExperimentConfig& c) {
  if (c.occupied.empty()) return random_odd_site_state(c.sites, c.particles, c.state_seed);
  std::vector<int> sites;
  for (int s : c.occupied) sites.push_back(s - 1);
  std::sort(sites.begin(), sites.end());
  return FockState(c.sites, sites);
}

std::vector<int> one_based(const FockState& psi) {
  std::vector<int> out;
  for (int s : psi.occupied_sites()) out.push_back(s + 1);
  return out;
}

std::string describe_state(const FockState& psi) {
  std::ostringstream os;
  os << "occupied (1-based)";
  for (int s : one_based(psi)) os << ' ' << s;
  return os.str();
}

double filter_centre(const ExperimentConfig& c, const FockState& psi, const QuadraticHamiltonian& h) {
  return c.filter_energy == "mean" ? diagonal_energy(psi, h) : std::stod(c.filter_energy);
}

// A width so large that only the t = 0 term survives: P ∝ 1.
FilterSpec identity_filter(double energy, double radius) {
  FilterSpec s = FilterSpec::resolved(energy, 1.0, radius);
  s.width = 1e6;
  s.cutoff = 1;
  return s;
}

struct Variant {
  std::string label;
  FilterSpec spec;
  bool filtered;
};

std::vector<Variant> variants(const ExperimentConfig& c, double energy, double radius) {
  std::vector<Variant> out;
  if (c.unfiltered) out.push_back({"unfiltered", identity_filter(energy, radius), false});
  for (double w : c.widths)
    out.push_back({"delta_" + number_label(w), FilterSpec::resolved(energy, w, radius, c.reach), true});
  return out;
}

CMat observable_matrix(const ExperimentConfig& c, const ModelSpec& m) {
  if (c.observable == "current") return current_matrix(m);
  if (c.observable == "kinetic") return kinetic_matrix(m);
  if (c.observable == "number") return CMat::Identity(m.sites, m.sites);
  return CMat::Zero(m.sites, m.sites);  // identity: constant operator, commutes with everything
}

std::pair<double, double> sector_range(const QuadraticHamiltonian& h, int particles) {
  const RVec& e = h.energies();
  return {h.offset() + e.head(particles).sum(), h.offset() + e.tail(particles).sum()};
}

std::vector<double> ensemble_energies(const ExperimentConfig& c, const QuadraticHamiltonian& h) {
  if (!c.energies.empty()) return c.energies;
  const auto [lo, hi] = sector_range(h, c.particles);
  std::vector<double> out;
  if (c.ensemble_points == 1) return {0.5 * (lo + hi)};
  for (int i = 0; i < c.ensemble_points; ++i) out.push_back(lo + (hi - lo) * i / (c.ensemble_points - 1));
  return out;
}

// Σ_a (U† X U)_aa n_a for mode occupations n.
double mode_expectation(const QuadraticHamiltonian& h, const CMat& x, const RVec& n) {
  const CMat xm = h.modes().adjoint() * x * h.modes();
  return xm.diagonal().real().dot(n);
}

SeriesRecord energy_series(const std::vector<double>& grid, const std::vector<double>& values,
                           const std::string& quantity) {
  SeriesRecord s;
  s.grid = grid;
  for (double v : values) s.values.emplace_back(v, 0.0);
  s.meta.quantity = quantity;
  s.meta.grid_unit = "J";
  return s;
}

double late_rms(const SeriesRecord& s, double from) {
  double acc = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.grid[i] >= from) {
      acc += std::norm(s.values[i]);
      ++n;
    }
  return n > 0 ? std::sqrt(acc / n) : 0.0;
}

}  // namespace

RunResult run_ldos(const RunContext& ctx) {
  const auto& c = ctx.config;
  const ModelSpec m = c.model();
  const auto h = build_hamiltonian(m);
  const FockState psi = initial_state(c);
  const double centre = filter_centre(c, psi, h);
  const double radius = spectral_radius(h, c.particles);
  const auto grid = uniform_grid(c.energy_min, c.energy_max, c.energy_step);
  RunResult r;
  r.results["state"] = one_based(psi);
  r.results["mean_energy"] = diagonal_energy(psi, h);
  r.results["filter_energy"] = centre;
  for (const auto& v : variants(c, centre, radius)) {
    std::optional<Prefilter> pre;
    if (v.filtered) pre = Prefilter{centre, v.spec.width};
    SeriesRecord d = ldos(psi, h, grid, c.eta, pre, c.reach);
    d.meta.state = describe_state(psi);
    if (v.filtered) d.meta.filter = v.spec.describe();
    write_series_csv(ctx.out / ("ldos_" + v.label + ".csv"), d, {"eta: " + number_label(c.eta)});
    const auto [mean, std] = curve_moments(d);
    r.results["ldos"][v.label] = {{"mean", mean}, {"std", std}, {"peak", d.meta.scale}};
  }
  return r;
}

RunResult run_response(const RunContext& ctx) {
  const auto& c = ctx.config;
  const ModelSpec m = c.model();
  const auto h = build_hamiltonian(m);
  const FockState psi = initial_state(c);
  const double centre = filter_centre(c, psi, h);
  const double radius = spectral_radius(h, c.particles);
  const CMat x = observable_matrix(c, m);
  const TransformConfig tc = c.transform();
  const auto times = tc.times();
  const auto omegas = uniform_grid(c.omega_min, c.omega_max, c.omega_step);
  ResponseOptions opts;
  opts.filter.backend = c.overlap_backend();
  opts.threads = ctx.threads;
  RunResult r;
  r.results["state"] = one_based(psi);
  r.results["filter_energy"] = centre;
  for (const auto& v : variants(c, centre, radius)) {
    SeriesRecord comm = filtered_commutator_trace(psi, h, x, v.spec, times, opts);
    comm.meta.state = describe_state(psi);
    comm.meta.filter = v.filtered ? v.spec.describe() : "none";
    SeriesRecord avg = moving_average(comm, c.moving_window);
    avg.meta = comm.meta;
    avg.meta.quantity = "moving average of " + comm.meta.quantity;
    SeriesRecord lambda = lambda_frequency(comm, tc, omegas);
    lambda.meta.state = comm.meta.state;
    lambda.meta.filter = comm.meta.filter;
    write_series_csv(ctx.out / ("commutator_" + v.label + ".csv"), comm);
    write_series_csv(ctx.out / ("commutator_avg_" + v.label + ".csv"), avg,
                     {"window: " + number_label(c.moving_window)});
    write_series_csv(ctx.out / ("lambda_" + v.label + ".csv"), lambda);

    double odd = 0.0, peak = 0.0, peak_omega = 0.0;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
      const std::size_t k = omegas.size() - 1 - i;
      if (std::abs(omegas[i] + omegas[k]) < 1e-9)
        odd = std::max(odd, std::abs(lambda.values[i].imag() + lambda.values[k].imag()));
      if (omegas[i] > 0.0 && std::abs(lambda.values[i].imag()) > peak) {
        peak = std::abs(lambda.values[i].imag());
        peak_omega = omegas[i];
      }
    }
    r.results["response"][v.label] = {{"late_average_rms", late_rms(avg, 0.5 * c.t_max)},
                                      {"im_lambda_peak_omega", peak_omega},
                                      {"im_lambda_peak", peak},
                                      {"im_lambda_odd_deviation", odd}};
  }
  return r;
}

RunResult run_ensemble(const RunContext& ctx) {
  const auto& c = ctx.config;
  const ModelSpec m = c.model();
  const auto h = build_hamiltonian(m);
  const double radius = spectral_radius(h, c.particles);
  const auto energies = ensemble_energies(c, h);
  const CMat j = current_matrix(m);
  const CMat k = kinetic_matrix(m);
  const TransformConfig tc = c.transform();
  auto has = [&](const char* q) { return std::find(c.quantities.begin(), c.quantities.end(), q) != c.quantities.end(); };
  const bool pairs = has("time_average") || has("omega");
  const CMat drude = has("drude") ? drude_operator(h, j, k, tc, c.drude_omega) : CMat();
  const auto times = tc.times();
  const auto omegas = uniform_grid(c.omega_min, c.omega_max, c.omega_step);

  RunResult r;
  const auto [lo, hi] = sector_range(h, c.particles);
  r.results["sector_range"] = {lo, hi};
  r.results["energies"] = energies;
  {
    SeriesRecord d = dos(h, uniform_grid(lo - 2.0, hi + 2.0, c.energy_step), c.eta, c.particles, c.reach);
    write_series_csv(ctx.out / "dos.csv", d, {"nu: " + number_label(c.eta)});
  }
  for (double w : c.widths) {
    const std::string label = "delta_" + number_label(w);
    struct Point {
      double drude = 0.0, average = 0.0;
      SeriesRecord omega;
    };
    auto points = parallel_map<Point>(energies.size(), ctx.threads, [&](std::size_t i) {
      const FilterSpec spec = FilterSpec::resolved(energies[i], w, radius, std::max(c.reach, 8.0));
      const EnsembleOccupations occ = ensemble_occupations(h, spec, c.particles, pairs);
      Point p;
      if (has("drude")) p.drude = mode_expectation(h, drude, occ.n);
      if (pairs) {
        const SeriesRecord om = ensemble_anticommutator_trace(h, j, occ, times);
        if (has("time_average")) p.average = time_average(om, c.average_horizon).real();
        if (has("omega")) {
          p.omega = fourier_half_line(om, tc, omegas);
          p.omega.meta.quantity = "Omega(omega) ensemble";
          p.omega.meta.grid_unit = "J";
          p.omega.meta.filter = spec.describe();
        }
      }
      return p;
    });
    std::vector<double> dv, av;
    for (const auto& p : points) {
      dv.push_back(p.drude);
      av.push_back(p.average);
    }
    if (has("drude")) {
      write_series_csv(ctx.out / ("drude_" + label + ".csv"), energy_series(energies, dv, "Drude weight (exact ensemble)"),
                       {"drude_omega: " + number_label(c.drude_omega), "sigma: " + number_label(c.sigma)});
      r.results["drude"][label] = dv;
    }
    if (has("time_average")) {
      write_series_csv(ctx.out / ("time_average_" + label + ".csv"),
                       energy_series(energies, av, "time average of Omega(t) (exact ensemble)"),
                       {"horizon: " + number_label(c.average_horizon)});
      r.results["time_average"][label] = av;
    }
    if (has("omega"))
      for (std::size_t i = 0; i < energies.size(); ++i)
        write_series_csv(ctx.out / ("omega_E_" + number_label(energies[i]) + "_" + label + ".csv"), points[i].omega);

    if (c.sample && has("drude")) {
      json sampled = json::array(), diag = json::array();
      std::vector<double> means;
      for (std::size_t i = 0; i < energies.size(); ++i) {
        SamplerConfig sc;
        sc.target = FilterSpec::resolved(energies[i], w, radius, c.reach);
        sc.particles = c.particles;
        sc.chains = c.chains;
        sc.samples_per_chain = c.samples_per_chain;
        sc.burn_in = c.burn_in;
        sc.stride = c.stride;
        sc.retries = c.retries;
        sc.seed = c.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1));
        sc.threads = ctx.threads;
        const double width = std::sqrt(2.0) * w;
        const int cutoff = static_cast<int>(std::ceil(sc.target.reach() / (width * sc.target.time_step) - 1e-9));
        const ContourTilt tilt = contour_tilt(h, c.particles, sc.target);
        auto table = std::make_shared<PropagatorTable>(h, sc.target.time_step, std::max(2 * cutoff, sc.target.cutoff),
                                                       ctx.threads, tilt);
        const FilteredObservableEstimator est(table, h, width, cutoff, {drude}, ctx.threads);
        const SampleSet s = mh_sample(sc, h, WeightEvaluator(table, sc.target));
        const SampledEstimate e = ensemble_expectation_sampled(s, est, 0, energies[i], c.overlap_floor);
        means.push_back(e.mean);
        sampled.push_back({{"energy", energies[i]},
                           {"mean", e.mean},
                           {"standard_error", e.standard_error},
                           {"used", e.used},
                           {"skipped", e.skipped}});
        json chains = json::array();
        for (const auto& d : s.diagnostics)
          chains.push_back({{"acceptance_rate", d.acceptance_rate},
                            {"mean_energy", d.mean_energy},
                            {"energy_std", d.energy_std},
                            {"autocorrelation_time", d.autocorrelation_time},
                            {"clipped_weights", d.clipped_weights},
                            {"redraws", d.redraws},
                            {"fallback_start", d.fallback_start}});
        diag.push_back({{"energy", energies[i]}, {"chains", chains}});
      }
      write_series_csv(ctx.out / ("drude_sampled_" + label + ".csv"),
                       energy_series(energies, means, "Drude weight (Metropolis sample mean)"));
      r.results["drude_sampled"][label] = sampled;
      r.diagnostics["sampler"][label] = diag;
    }
  }
  return r;
}

RunResult run_drude(const RunContext& ctx) {
  const auto& c = ctx.config;
  const ModelSpec m = c.model();
  const auto h = build_hamiltonian(m);
  const double radius = spectral_radius(h, c.particles);
  const auto energies = ensemble_energies(c, h);
  const CMat j = current_matrix(m);
  const CMat k = kinetic_matrix(m);
  const TransformConfig tc = c.transform();
  const auto times = tc.times();
  const auto omegas = uniform_grid(c.drude_omega, std::max(c.omega_max, 3.0 * c.drude_omega), c.drude_omega);
  RunResult r;
  bool all_converged = true;
  for (double w : c.widths) {
    const std::string label = "delta_" + number_label(w);
    auto points = parallel_map<ConductivityResult>(energies.size(), ctx.threads, [&](std::size_t i) {
      const FilterSpec spec = FilterSpec::resolved(energies[i], w, radius, std::max(c.reach, 8.0));
      const EnsembleOccupations occ = ensemble_occupations(h, spec, c.particles, false);
      const SeriesRecord comm = ensemble_commutator_trace(h, j, occ, times);
      return conductivity(lambda_frequency(comm, tc, omegas), mode_expectation(h, k, occ.n), c.drude_omega);
    });
    std::vector<double> dv;
    json rows = json::array();
    for (std::size_t i = 0; i < energies.size(); ++i) {
      const auto& p = points[i];
      dv.push_back(p.drude);
      all_converged = all_converged && p.converged;
      rows.push_back({{"energy", energies[i]}, {"drude", p.drude}, {"drude_check", p.drude_check},
                      {"converged", p.converged}});
      SeriesRecord reg = p.regular;
      reg.meta.quantity = "regular conductivity";
      reg.meta.grid_unit = "J";
      write_series_csv(ctx.out / ("sigma_reg_E_" + number_label(energies[i]) + "_" + label + ".csv"), reg);
    }
    write_series_csv(ctx.out / ("drude_" + label + ".csv"), energy_series(energies, dv, "Drude weight (exact ensemble)"),
                     {"drude_omega: " + number_label(c.drude_omega), "sigma: " + number_label(c.sigma)});
    r.results["drude"][label] = rows;
  }
  r.diagnostics["converged"] = all_converged;
  if (!all_converged) {
    std::cerr << "drude: weight at omega_min and 2 omega_min disagree; increase sigma or lower drude_omega\n";
    r.exit_code = 3;
  }
  return r;
}

namespace {

struct Check {
  std::string name;
  double tolerance;
  std::function<double()> measure;  // deviation; passes when ≤ tolerance
};

double worst(double a, double b) { return std::max(a, b); }

}  // namespace

RunResult run_validate(const RunContext& ctx) {
  ModelSpec m;
  m.sites = 8;
  const int n0 = 3;
  const auto h = build_hamiltonian(m);
  const DenseSector sector = build_sector(m, n0);
  CMat j = current_matrix(m);
  if (ctx.inject == "current-sign-flip") j(1, 0) = -j(1, 0);
  const CMat jd = sector.one_body(j);
  const CMat k = kinetic_matrix(m);
  const CMat kd = sector.one_body(k);
  const double radius = spectral_radius(h, n0);
  const std::vector<FockState> states = {FockState(8, {0, 3, 5}), FockState(8, {1, 2, 6}), FockState(8, {0, 4, 7})};
  auto heisenberg = [&](const CMat& a, double t) { return CMat(sector.propagator(-t) * a * sector.propagator(t)); };
  auto filtered = [&](const FockState& psi, double e, double w) {
    CVec v = gaussian_filter(sector.spectrum(), e, w) * sector.vector(psi);
    return CVec(v / v.norm());
  };

  std::vector<Check> checks;
  checks.push_back({"current operator is Hermitian", 1e-12, [&] { return (j - j.adjoint()).cwiseAbs().maxCoeff(); }});
  checks.push_back({"Loschmidt echo, Gaussian trace and determinant vs ED", 1e-8, [&] {
                      double d = 0.0;
                      const auto times = uniform_grid(0.0, 20.0, 0.5);
                      for (const auto& psi : states) {
                        const auto a = loschmidt_echo(psi, h, times, EchoMethod::gaussian_trace);
                        const auto b = loschmidt_echo(psi, h, times, EchoMethod::determinant);
                        const CVec v = sector.vector(psi);
                        for (std::size_t i = 0; i < times.size(); ++i) {
                          const cplx ref = v.dot(sector.propagator(times[i]) * v);
                          d = worst(d, worst(std::abs(a.values[i] - ref), std::abs(b.values[i] - ref)));
                        }
                      }
                      return d;
                    }});
  checks.push_back({"three-time current correlator vs ED", 1e-8, [&] {
                      const auto jo = current_operator(m);
                      double d = 0.0;
                      for (const auto& psi : states)
                        for (double t : {0.0, 1.3, 7.5, 20.0}) {
                          const cplx ref = dense_three_time(sector, psi, jd, jd, t, -0.4 * t, 0.7);
                          d = worst(d, std::abs(three_time_correlator(psi, h, jo, jo, t, -0.4 * t, 0.7) - ref));
                          d = worst(d, std::abs(three_time_correlator(psi, h, jo, jo, t, -0.4 * t, 0.7,
                                                                      CorrelatorMethod::majorana) - ref));
                        }
                      return d;
                    }});
  checks.push_back({"filtered expectation vs ED", 1e-8, [&] {
                      double d = 0.0;
                      for (const auto& psi : states)
                        for (double e : {-3.0, -1.0, 0.5, 2.0}) {
                          const FilterSpec s = FilterSpec::resolved(e, 0.7, radius, 8.0);
                          const FilteredFockState fs(h, psi, riemann_filter_weights(s));
                          d = worst(d, std::abs(fs.expectation(j) - exact_filtered_value_complex(sector, psi, jd, e, 0.7)));
                          d = worst(d, std::abs(fs.expectation(k) - exact_filtered_value_complex(sector, psi, kd, e, 0.7)));
                        }
                      return d;
                    }});
  checks.push_back({"filtered commutator trace vs ED", 1e-8, [&] {
                      double d = 0.0;
                      const std::vector<double> times{0.0, 1.0, 4.0, 12.0};
                      for (const auto& psi : states) {
                        const FilterSpec s = FilterSpec::resolved(-0.5, 0.8, radius, 8.0);
                        const auto c = filtered_commutator_trace(psi, h, j, s, times);
                        const CVec v = filtered(psi, -0.5, 0.8);
                        for (std::size_t i = 0; i < times.size(); ++i) {
                          const CMat jt = heisenberg(jd, times[i]);
                          d = worst(d, std::abs(c.values[i] - v.dot((jt * jd - jd * jt) * v)));
                        }
                      }
                      return d;
                    }});
  checks.push_back({"LDOS vs ED", 1e-8, [&] {
                      double d = 0.0;
                      const auto grid = uniform_grid(-4.0, 4.0, 0.25);
                      for (const auto& psi : states) {
                        const SeriesRecord l = ldos(psi, h, grid, 0.3, std::nullopt, 8.0);
                        const CVec v = sector.vector(psi);
                        for (std::size_t i = 0; i < grid.size(); ++i) {
                          const double ref = v.dot(gaussian_filter(sector.spectrum(), grid[i], 0.3) * v).real();
                          d = worst(d, std::abs(l.values[i].real() * l.meta.scale - ref));
                        }
                      }
                      return d;
                    }});
  checks.push_back({"sector DOS vs ED", 1e-8, [&] {
                      const auto grid = uniform_grid(-6.0, 6.0, 0.25);
                      const SeriesRecord d = dos(h, grid, 0.3, n0, 8.0);
                      double dev = 0.0;
                      for (std::size_t i = 0; i < grid.size(); ++i) {
                        const double ref = gaussian_filter(sector.spectrum(), grid[i], 0.3).trace().real();
                        dev = worst(dev, std::abs(d.values[i].real() * d.meta.scale - ref));
                      }
                      return dev;
                    }});
  checks.push_back({"number-projected trace vs ED", 1e-8, [&] {
                      double d = 0.0;
                      for (double t : {0.0, 0.7, 5.0, 20.0})
                        d = worst(d, std::abs(projected_trace(h, t, n0) - sector.propagator(t).trace()));
                      return d;
                    }});
  checks.push_back({"Majorana and Slater overlap backends agree", 1e-8, [&] {
                      const auto jo = current_operator(m);
                      FilterOptions maj;
                      maj.backend = OverlapBackend::majorana;
                      double d = 0.0;
                      for (const auto& psi : states) {
                        const FilterSpec s = FilterSpec::resolved(diagonal_energy(psi, h), 1.0, radius, 8.0);
                        d = worst(d, std::abs(filtered_expectation_complex(psi, jo, s, h) -
                                              filtered_expectation_complex(psi, jo, s, h, maj)));
                      }
                      return d;
                    }});
  checks.push_back({"fixed-filling ensemble value vs ED", 1e-8, [&] {
                      double d = 0.0;
                      for (double e : {-4.0, -1.5, 0.0, 1.0}) {
                        const FilterSpec s = FilterSpec::resolved(e, 0.6, radius, 8.0);
                        const CMat p = gaussian_filter(sector.spectrum(), e, 0.6);
                        const double ref = (p * kd).trace().real() / p.trace().real();
                        d = worst(d, std::abs(ensemble_expectation_exact(h, s, k, 0.0, n0) - ref));
                      }
                      return d;
                    }});
  checks.push_back({"Lambda(omega) vs Lehmann sum", 1e-3, [&] {
                      const FockState& psi = states[0];
                      TransformConfig tc;
                      tc.sigma = 2.0;
                      tc.t_max = 16.0;
                      tc.time_step = 0.01;
                      const auto c = filtered_commutator_trace(psi, h, j, identity_filter(0.0, radius), tc.times());
                      const auto omegas = uniform_grid(-3.0, 3.0, 0.25);
                      const auto lam = lambda_frequency(c, tc, omegas);
                      const CVec v = sector.vector(psi);
                      const auto ref = lehmann_lambda(sector, v * v.adjoint(), jd, omegas, tc.sigma);
                      double d = 0.0;
                      for (std::size_t i = 0; i < omegas.size(); ++i) d = worst(d, std::abs(lam.values[i] - ref.values[i]));
                      return d;
                    }});
  checks.push_back({"Kubo error ratio under g -> 2g minus 4", 0.5, [&] {
                      ModelSpec small = m;
                      small.sites = 6;
                      const DenseSector s6 = build_sector(small, 3);
                      CMat n2 = CMat::Zero(6, 6);
                      n2(2, 2) = 1.0;
                      PerturbationSpec pert;
                      pert.profile = [](double t) { return std::sin(0.9 * t) * std::exp(-0.1 * t); };
                      pert.coupling = s6.one_body(n2);
                      const CVec g = s6.eigenvectors().col(0);
                      pert.rho0 = g * g.adjoint();
                      CMat j6 = current_matrix(small);
                      if (ctx.inject == "current-sign-flip") j6(1, 0) = -j6(1, 0);
                      const CMat a = s6.one_body(j6);
                      const std::vector<double> times{0.5, 1.5, 3.0, 5.0};
                      pert.strength = 1e-2;
                      const double e1 = kubo_check(s6, pert, a, times).max_deviation;
                      pert.strength = 2e-2;
                      const double e2 = kubo_check(s6, pert, a, times).max_deviation;
                      return std::abs(e2 / e1 - 4.0);
                    }});
  checks.push_back({"two-copy circuit identity", 1e-10, [&] {
                      ModelSpec small = m;
                      small.sites = 6;
                      const DenseSector s6 = build_sector(small, 2);
                      CMat j6 = current_matrix(small);
                      if (ctx.inject == "current-sign-flip") j6(1, 0) = -j6(1, 0);
                      const auto rep = circuit_c_identity_check(s6, FockState(6, {0, 3}), s6.one_body(j6),
                                                                s6.one_body(j6), 0.4, 1.1, -0.6);
                      return rep.factorization_deviation;
                    }});
  checks.push_back({"Metropolis estimate within 3 standard errors (N=6)", 3.0, [&] {
                      ModelSpec small = m;
                      small.sites = 6;
                      const auto h6 = build_hamiltonian(small);
                      const CMat k6 = kinetic_matrix(small);
                      SamplerConfig sc;
                      sc.target = FilterSpec::resolved(-1.0, 0.8, spectral_radius(h6, 2));
                      sc.particles = 2;
                      sc.seed = ctx.config.seed;
                      sc.samples_per_chain = 200;
                      sc.threads = ctx.threads;
                      const auto s = mh_sample(sc, h6);
                      const auto e = ensemble_expectation_sampled(s, k6, 0.0, sc.target, h6);
                      const double exact = ensemble_expectation_exact(h6, sc.target, k6, 0.0, 2);
                      return std::abs(e.mean - exact) / e.standard_error;
                    }});

  RunResult r;
  json report = json::array();
  bool ok = true;
  for (const auto& c : checks) {
    const auto start = std::chrono::steady_clock::now();
    double value = INFINITY;
    std::string error;
    try {
      value = c.measure();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = error.empty() && value <= c.tolerance;
    ok = ok && pass;
    char line[256];
    std::snprintf(line, sizeof line, "%s  %-56s value %.3e  tol %.1e  %.2fs", pass ? "PASS" : "FAIL", c.name.c_str(),
                  value, c.tolerance, seconds);
    std::cout << line;
    if (!error.empty()) std::cout << "  (" << error << ")";
    std::cout << '\n';
    json entry = {{"name", c.name}, {"tolerance", c.tolerance}, {"passed", pass}};
    entry["value"] = error.empty() ? json(value) : json(nullptr);
    if (!error.empty()) entry["error"] = error;
    if (ctx.timing) entry["seconds"] = seconds;
    report.push_back(entry);
  }
  r.results["checks"] = report;
  r.results["passed"] = ok;
  if (!ok) r.exit_code = 4;
  return r;
}

}  // namespace efr::cli
