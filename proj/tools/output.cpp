#include "output.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace efr::cli {

namespace {

std::string format(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_series_csv(const std::filesystem::path& path, const SeriesRecord& series,
                      const std::vector<std::string>& extra) {
  auto out = open(path);
  const SeriesMeta& m = series.meta;
  out << "# quantity: " << m.quantity << '\n';
  out << "# grid_unit: " << m.grid_unit << '\n';
  if (!m.filter.empty()) out << "# filter: " << m.filter << '\n';
  if (!m.state.empty()) out << "# state: " << m.state << '\n';
  if (m.cutoff > 0.0) out << "# window_sigma: " << format(m.cutoff) << '\n';
  if (m.scale != 1.0) out << "# scale: " << format(m.scale) << '\n';
  for (const auto& line : extra) out << "# " << line << '\n';
  out << "grid_value,real,imag\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    out << format(series.grid[i]) << ',' << format(series.values[i].real()) << ','
        << format(series.values[i].imag()) << '\n';
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  auto out = open(path);
  out << doc.dump(2) << '\n';
}

std::string number_label(double x) {
  std::string s = format(x);
  if (s.size() > 1 && s[0] == '-') s = "m" + s.substr(1);
  return s;
}

}  // namespace efr::cli
