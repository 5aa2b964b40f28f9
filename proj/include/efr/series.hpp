#pragma once

#include "efr/types.hpp"

#include <string>
#include <vector>

namespace efr {

struct SeriesMeta {
  std::string quantity;
  std::string grid_unit = "1/J";
  double spacing = 0.0;
  double cutoff = 0.0;  // Gaussian window σ, zero when none
  double scale = 1.0;   // raw value = value * scale
  std::string filter;
  std::string state;
};

// Complex samples on a uniform, strictly increasing grid.
struct SeriesRecord {
  std::vector<double> grid;
  std::vector<cplx> values;
  SeriesMeta meta;

  static SeriesRecord uniform(double start, double step, std::size_t count);
  std::size_t size() const { return grid.size(); }
  double spacing() const;
  // Throws if the grid is not uniform/increasing or values are non-finite.
  void validate(double tol = 1e-12) const;
  // Linear interpolation (real and imaginary parts) at x inside the grid.
  cplx at(double x) const;
};

// Grid start, start+step, ... up to and including stop (within half a step).
std::vector<double> uniform_grid(double start, double stop, double step);

}  // namespace efr
