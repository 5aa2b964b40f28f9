#pragma once

#include "efr/series.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace efr::cli {

// `grid_value,real,imag` rows after `#` header lines (metadata first, then `extra`).
void write_series_csv(const std::filesystem::path& path, const SeriesRecord& series,
                      const std::vector<std::string>& extra = {});

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);

// Compact label for a number in file names: 0.5 → "0.5", -3 → "m3".
std::string number_label(double x);

}  // namespace efr::cli
