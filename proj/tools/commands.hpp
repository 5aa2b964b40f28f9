#pragma once

#include "config.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace efr::cli {

struct RunContext {
  ExperimentConfig config;
  std::filesystem::path out;
  int threads = 1;
  bool timing = false;
  std::string inject;  // validate only: "current-sign-flip"
};

struct RunResult {
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();
  int exit_code = 0;
};

RunResult run_ldos(const RunContext& ctx);
RunResult run_response(const RunContext& ctx);
RunResult run_ensemble(const RunContext& ctx);
RunResult run_drude(const RunContext& ctx);
RunResult run_validate(const RunContext& ctx);

}  // namespace efr::cli
