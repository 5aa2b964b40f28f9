#include "commands.hpp"
#include "config.hpp"
#include "output.hpp"

#include "efr/types.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <thread>

namespace {

constexpr const char* kVersion = "0.1.0";

std::string toml_value(const nlohmann::ordered_json& v) {
  if (v.is_array()) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + toml_value(v[i]);
    return s + "]";
  }
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  return v.dump();
}

// Effective configuration in the same flat format the --config reader accepts.
void dump_config(const efr::cli::ExperimentConfig& cfg, std::ostream& os) {
  os << "# efr " << kVersion << " configuration\n";
  const auto doc = cfg.to_json();
  for (const auto& [key, value] : doc.items()) os << key << " = " << toml_value(value) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  using namespace efr::cli;
  CLI::App app{"Energy-filtered response of free-fermion chains"};
  app.set_config("--config", "", "flat TOML file of `key = value` lines");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", kVersion);

  ExperimentConfig cfg;
  register_options(app, cfg);
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string out = "out";
  bool dump = false;
  bool timing = false;
  std::string inject;
  app.add_option("--threads", threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory")->capture_default_str();
  app.add_flag("--dump-config", dump, "print the effective configuration and exit");
  app.add_flag("--timing", timing, "record wall-clock time in the JSON output");

  using Runner = RunResult (*)(const RunContext&);
  const std::vector<std::tuple<std::string, std::string, Runner>> commands = {
      {"ldos", "local density of states of a Fock state, with and without prefilters", run_ldos},
      {"response", "filtered commutator ⟨[x(t), x]⟩ and Λ(ω) for a Fock state", run_response},
      {"ensemble", "DOS, Drude weight, time averages and Ω(ω) in the filter ensemble", run_ensemble},
      {"drude", "Drude weight and regular conductivity from the ensemble commutator", run_drude},
      {"validate", "self-checks against exact diagonalization on small chains", run_validate},
  };
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    if (name == "validate")
      sub->add_option("--inject", inject, "deliberately break an operator (current-sign-flip)")
          ->check(CLI::IsMember({"current-sign-flip"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (dump) {
    dump_config(cfg, std::cout);
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << "a subcommand is required (ldos, response, ensemble, drude, validate)\n";
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Runner runner = nullptr;
  for (const auto& [name, help, fn] : commands)
    if (name == command) runner = fn;

  try {
    cfg.validate();
    RunContext ctx{cfg, out, threads, timing, inject};
    const auto start = std::chrono::steady_clock::now();
    RunResult r = runner(ctx);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::ordered_json doc;
    doc["command"] = command;
    doc["version"] = kVersion;
    doc["config"] = cfg.to_json();
    doc["results"] = r.results;
    doc["diagnostics"] = r.diagnostics;
    doc["runtime_seconds"] = timing ? nlohmann::ordered_json(seconds) : nlohmann::ordered_json(nullptr);
    write_json(ctx.out / (command + ".json"), doc);
    return r.exit_code;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const efr::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
