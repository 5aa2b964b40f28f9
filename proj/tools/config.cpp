#include "config.hpp"

#include <algorithm>
#include <stdexcept>
#include <type_traits>

namespace efr::cli {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("config: " + what);
}

}  // namespace

ModelSpec ExperimentConfig::model() const {
  ModelSpec m;
  m.sites = sites;
  m.hopping = hopping;
  m.strength = strength;
  m.beta = beta;
  m.phase = phase;
  m.period = period;
  m.kind = parse_potential_kind(potential);
  m.seed = disorder_seed;
  return m;
}

TransformConfig ExperimentConfig::transform() const {
  TransformConfig t;
  t.sigma = sigma;
  t.t_max = t_max;
  t.time_step = time_step;
  return t;
}

OverlapBackend ExperimentConfig::overlap_backend() const {
  if (backend == "slater") return OverlapBackend::slater;
  if (backend == "majorana") return OverlapBackend::majorana;
  throw std::invalid_argument("config: backend must be 'slater' or 'majorana'");
}

void ExperimentConfig::validate() const {
  model().validate();
  require(particles > 0 && particles < sites, "need 0 < particles < sites");
  for (int s : occupied) require(s >= 1 && s <= sites, "occupied sites are 1-based and within the chain");
  require(occupied.empty() || static_cast<int>(occupied.size()) == particles,
          "occupied list must hold `particles` sites");
  for (double w : widths) require(w > 0.0, "filter widths must be positive");
  require(reach >= 4.0, "reach must be at least 4");
  overlap_backend();
  if (filter_energy != "mean") {
    std::size_t used = 0;
    try {
      (void)std::stod(filter_energy, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == filter_energy.size() && used > 0, "filter_energy must be 'mean' or a number");
  }
  require(eta > 0.0, "eta must be positive");
  require(energy_step > 0.0 && energy_max > energy_min, "bad energy grid");
  require(observable == "current" || observable == "kinetic" || observable == "number" ||
              observable == "identity",
          "observable must be current, kinetic, number or identity");
  transform().validate();
  require(omega_step > 0.0 && omega_max > omega_min, "bad frequency grid");
  require(moving_window >= time_step, "moving_window must cover at least one time step");
  require(ensemble_points >= 1, "ensemble_points must be >= 1");
  for (const auto& q : quantities)
    require(q == "drude" || q == "time_average" || q == "omega",
            "quantities may contain drude, time_average, omega");
  require(average_horizon > 0.0 && average_horizon <= t_max, "average_horizon must lie in (0, t_max]");
  require(drude_omega > 0.0, "drude_omega must be positive");
  require(chains >= 1 && samples_per_chain >= 1, "sampler needs chains and samples");
  require(stride == -1 || stride >= 1, "stride must be >= 1 (or -1 for the default)");
  require(burn_in >= -1, "burn_in must be >= 0 (or -1 for the default)");
  require(retries >= 0, "retries must be >= 0");
  require(overlap_floor >= 0.0, "overlap_floor must be >= 0");
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["sites"] = sites;
  j["particles"] = particles;
  j["hopping"] = hopping;
  j["strength"] = strength;
  j["beta"] = beta;
  j["phase"] = phase;
  j["period"] = period;
  j["potential"] = potential;
  j["disorder_seed"] = disorder_seed;
  j["occupied"] = occupied;
  j["state_seed"] = state_seed;
  j["filter_energy"] = filter_energy;
  j["widths"] = widths;
  j["unfiltered"] = unfiltered;
  j["reach"] = reach;
  j["backend"] = backend;
  j["eta"] = eta;
  j["energy_min"] = energy_min;
  j["energy_max"] = energy_max;
  j["energy_step"] = energy_step;
  j["observable"] = observable;
  j["sigma"] = sigma;
  j["t_max"] = t_max;
  j["time_step"] = time_step;
  j["omega_min"] = omega_min;
  j["omega_max"] = omega_max;
  j["omega_step"] = omega_step;
  j["moving_window"] = moving_window;
  j["energies"] = energies;
  j["ensemble_points"] = ensemble_points;
  j["quantities"] = quantities;
  j["average_horizon"] = average_horizon;
  j["drude_omega"] = drude_omega;
  j["sample"] = sample;
  j["chains"] = chains;
  j["samples_per_chain"] = samples_per_chain;
  j["burn_in"] = burn_in;
  j["stride"] = stride;
  j["retries"] = retries;
  j["overlap_floor"] = overlap_floor;
  return j;
}

void register_options(CLI::App& app, ExperimentConfig& c) {
  auto opt = [&](const char* name, auto& field, const char* help) {
    auto* o = app.add_option(std::string("--") + name, field, help)->capture_default_str();
    if constexpr (requires { field.clear(); } && !std::is_same_v<std::decay_t<decltype(field)>, std::string>)
      o->expected(0, CLI::detail::expected_max_vector_size);
  };
  opt("seed", c.seed, "global seed (sampler chains)");
  opt("sites", c.sites, "number of lattice sites N");
  opt("particles", c.particles, "filling N0");
  opt("hopping", c.hopping, "hopping J");
  opt("strength", c.strength, "potential strength lambda");
  opt("beta", c.beta, "potential wave number");
  opt("phase", c.phase, "potential phase");
  opt("period", c.period, "mosaic period kappa");
  opt("potential", c.potential, "mosaic-aa | aa | anderson");
  opt("disorder_seed", c.disorder_seed, "seed of the Anderson potential");
  opt("occupied", c.occupied, "1-based occupied sites of the initial Fock state");
  opt("state_seed", c.state_seed, "seed of the random odd-site state when `occupied` is empty");
  opt("filter_energy", c.filter_energy, "filter centre: 'mean' or a number");
  opt("widths", c.widths, "filter widths delta");
  opt("unfiltered", c.unfiltered, "also emit the unfiltered state");
  opt("reach", c.reach, "filter reach K*delta*dt");
  opt("backend", c.backend, "overlap backend: slater | majorana");
  opt("eta", c.eta, "LDOS resolution width");
  opt("energy_min", c.energy_min, "LDOS/DOS grid start");
  opt("energy_max", c.energy_max, "LDOS/DOS grid end");
  opt("energy_step", c.energy_step, "LDOS/DOS grid step");
  opt("observable", c.observable, "response observable: current | kinetic | number | identity");
  opt("sigma", c.sigma, "Gaussian time window of Fourier transforms");
  opt("t_max", c.t_max, "time horizon");
  opt("time_step", c.time_step, "time step of series");
  opt("omega_min", c.omega_min, "frequency grid start");
  opt("omega_max", c.omega_max, "frequency grid end");
  opt("omega_step", c.omega_step, "frequency grid step");
  opt("moving_window", c.moving_window, "moving-average window");
  opt("energies", c.energies, "ensemble energies (empty: evenly spaced over the sector)");
  opt("ensemble_points", c.ensemble_points, "number of ensemble energies when `energies` is empty");
  opt("quantities", c.quantities, "ensemble quantities: drude, time_average, omega");
  opt("average_horizon", c.average_horizon, "horizon T of the time average");
  opt("drude_omega", c.drude_omega, "frequency at which the Drude weight is read off");
  opt("sample", c.sample, "add Metropolis estimates next to the exact ensemble values");
  opt("chains", c.chains, "sampler chains");
  opt("samples_per_chain", c.samples_per_chain, "retained samples per chain");
  opt("burn_in", c.burn_in, "burn-in moves (-1: 10 N)");
  opt("stride", c.stride, "moves between retained samples (-1: N)");
  opt("retries", c.retries, "start-state redraws before the fallback start");
  opt("overlap_floor", c.overlap_floor, "skip samples with <psi|P^2|psi> below this times (2 pi width^2)^-1");
}

}  // namespace efr::cli
