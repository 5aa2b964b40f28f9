#include "efr/series.hpp"

#include <cmath>
#include <stdexcept>

namespace efr {

SeriesRecord SeriesRecord::uniform(double start, double step, std::size_t count) {
  if (!(step > 0.0)) throw std::invalid_argument("SeriesRecord: step must be positive");
  SeriesRecord s;
  s.grid.resize(count);
  for (std::size_t i = 0; i < count; ++i) s.grid[i] = start + step * static_cast<double>(i);
  s.values.assign(count, cplx(0.0));
  s.meta.spacing = step;
  return s;
}

double SeriesRecord::spacing() const {
  if (grid.size() < 2) return meta.spacing;
  return (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
}

void SeriesRecord::validate(double tol) const {
  if (grid.size() != values.size()) throw std::invalid_argument("SeriesRecord: grid/value size mismatch");
  const double h = spacing();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || !std::isfinite(values[i].real()) || !std::isfinite(values[i].imag()))
      throw std::invalid_argument("SeriesRecord: non-finite entry");
    if (i > 0) {
      if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("SeriesRecord: grid not increasing");
      if (std::abs((grid[i] - grid[i - 1]) - h) > tol * std::max(1.0, std::abs(h)) * 1e3)
        throw std::invalid_argument("SeriesRecord: grid not uniform");
    }
  }
}

cplx SeriesRecord::at(double x) const {
  if (grid.empty()) throw std::invalid_argument("SeriesRecord::at: empty series");
  const double h = spacing();
  if (x < grid.front() - 1e-12 || x > grid.back() + 1e-12)
    throw std::out_of_range("SeriesRecord::at: point outside grid");
  if (grid.size() == 1) return values.front();
  const double pos = (x - grid.front()) / h;
  auto i = static_cast<std::size_t>(std::floor(pos));
  if (i >= grid.size() - 1) i = grid.size() - 2;
  const double frac = pos - static_cast<double>(i);
  return values[i] * (1.0 - frac) + values[i + 1] * frac;
}

std::vector<double> uniform_grid(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) throw std::invalid_argument("uniform_grid: bad range");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 0.5)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = start + step * static_cast<double>(i);
  return g;
}

}  // namespace efr
