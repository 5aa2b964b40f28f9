#pragma once

#include "efr/ensemble.hpp"
#include "efr/model.hpp"
#include "efr/response.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace efr::cli {

// Every key of the configuration file. The file is flat TOML: `key = value`
// lines with `#` comments; command-line flags of the same name override it.
struct ExperimentConfig {
  std::uint64_t seed = 0;

  // model
  int sites = 34;
  int particles = 6;
  double hopping = 1.0;
  double strength = 2.0;
  double beta = kGoldenRatio;
  double phase = 0.0;
  int period = 2;
  std::string potential = "mosaic-aa";
  std::uint64_t disorder_seed = 0;

  // initial Fock state for ldos/response: 1-based occupied sites, or a seeded
  // draw over the odd sites when empty
  std::vector<int> occupied;
  std::uint64_t state_seed = 0;

  // filters
  std::string filter_energy = "mean";  // "mean" = ⟨ψ|H|ψ⟩, or a number
  std::vector<double> widths = {2.0, 1.0, 0.5};
  bool unfiltered = true;
  double reach = 6.0;
  std::string backend = "slater";

  // ldos
  double eta = 0.05;
  double energy_min = -6.0;
  double energy_max = 6.0;
  double energy_step = 0.02;

  // response and transforms
  std::string observable = "current";
  double sigma = 10.0;
  double t_max = 50.0;
  double time_step = 0.05;
  double omega_min = -4.0;
  double omega_max = 4.0;
  double omega_step = 0.02;
  double moving_window = 1.0;

  // ensemble / drude
  std::vector<double> energies;  // empty: ensemble_points over the sector range
  int ensemble_points = 25;
  std::vector<std::string> quantities = {"drude", "time_average"};
  double average_horizon = 10.0;
  double drude_omega = 0.01;

  // sampler
  bool sample = false;
  int chains = 8;
  int samples_per_chain = 125;
  int burn_in = -1;
  int stride = -1;
  int retries = 100;
  double overlap_floor = 1e-10;  // relative to (2πδ²)^{-1}

  ModelSpec model() const;
  TransformConfig transform() const;
  OverlapBackend overlap_backend() const;
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

// Binds every field to a long option `--<key>`, usable in the config file as `<key> = ...`.
void register_options(CLI::App& app, ExperimentConfig& cfg);

}  // namespace efr::cli
