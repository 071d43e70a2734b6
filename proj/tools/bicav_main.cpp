// Command-line front end: scenario runs, parameter sweeps, routing curves and
// transmission-lineshape fits. CSV outputs are the contract; plots (--plots)
// are a convenience.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bicav/emission.hpp"
#include "bicav/errors.hpp"
#include "bicav/lineshape.hpp"
#include "bicav/scenario.hpp"

namespace {

using nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  bool plots = false;
  int workers = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_workers = true) {
  cmd->add_option("--config", args.config_path, "scenario config file (JSON)");
  cmd->add_option("--preset", args.preset, "bundled preset name");
  cmd->add_option("--set", args.overrides,
                  "override a config value, e.g. --set system.delta_p_mhz=4");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_flag("--plots", args.plots, "also write SVG plots");
  if (with_workers)
    cmd->add_option("--workers", args.workers, "parallel workers for sweeps")
        ->check(CLI::Range(1, 256));
}

bicav::Scenario build_scenario(const CommonArgs& args) {
  json config = json::object();
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw bicav::ConfigError("cannot open config '" + args.config_path + "'");
    try {
      in >> config;
    } catch (const json::exception& e) {
      throw bicav::ConfigError("config '" + args.config_path + "': " + e.what());
    }
  }
  if (!args.preset.empty()) {
    if (config.contains("preset"))
      throw bicav::ConfigError("config already names a preset; drop --preset");
    config["preset"] = args.preset;
  }
  for (const auto& ov : args.overrides) bicav::apply_override(config, ov);
  return bicav::load_scenario(config);
}

int run_fit(const std::string& scan_path, const std::string& out_dir,
            bool separate_widths) {
  const auto ingest = bicav::ingest_scan(std::filesystem::path(scan_path));
  for (const auto& w : ingest.warnings) std::cerr << "warning: " << w << "\n";

  bicav::FitOptions opts;
  opts.shared_fwhm = !separate_widths;
  const auto fit = bicav::fit_transmission(ingest.scan, opts);

  std::vector<std::pair<std::string, double>> report = {
      {"center1_mhz", fit.params.centers_mhz[0]},
      {"center2_mhz", fit.params.centers_mhz[1]},
      {"splitting_mhz", fit.splitting_mhz},
      {"fwhm_mhz", fit.params.fwhm_mhz},
      {"amplitude1", fit.params.amplitudes[0]},
      {"amplitude2", fit.params.amplitudes[1]},
      {"baseline", fit.params.baseline},
      {"residual_norm", fit.residual_norm},
  };
  if (fit.params.fwhm2_mhz) report.push_back({"fwhm2_mhz", *fit.params.fwhm2_mhz});

  std::cout << "converged = " << (fit.converged ? "true" : "false") << "\n";
  std::cout << "iterations = " << fit.iterations << "\n";
  for (size_t i = 0; i < report.size(); ++i) {
    std::cout << report[i].first << " = " << report[i].second;
    // 1-sigma estimates from the covariance diagonal where available
    if (i < static_cast<size_t>(fit.covariance.rows()) &&
        std::isfinite(fit.covariance(i, i)) && fit.covariance(i, i) >= 0.0)
      std::cout << " +- " << std::sqrt(fit.covariance(i, i));
    std::cout << "\n";
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(std::filesystem::path(out_dir) / "fit.csv", std::ios::binary);
    out << "converged,iterations";
    for (const auto& [k, v] : report) out << "," << k;
    out << "\n" << (fit.converged ? 1 : 0) << "," << fit.iterations;
    char buf[40];
    for (const auto& [k, v] : report) {
      std::snprintf(buf, sizeof buf, "%.12g", v);
      out << "," << buf;
    }
    out << "\n";
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "fit.csv").string() << "\n";
  }
  if (!fit.converged) throw bicav::NumericError("fit did not converge");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"birefringent atom-cavity single-photon simulator"};
  app.set_version_flag("--version", std::string(BICAV_VERSION));
  app.require_subcommand(1);

  CommonArgs sim_args, sweep_args, route_args;
  std::string fit_scan, fit_out;
  bool fit_separate = false;
  std::string route_angles;

  auto* sim = app.add_subcommand("simulate", "run a scenario and write its outputs");
  add_common(sim, sim_args, false);

  auto* swp = app.add_subcommand("sweep", "run a scenario once per sweep value");
  add_common(swp, sweep_args);

  auto* route = app.add_subcommand("route", "routing fractions vs QWP angle");
  add_common(route, route_args, false);
  route->add_option("--angles", route_angles,
                    "angle grid 'start:step:stop' in degrees (default -90:2.5:90)");

  auto* fit = app.add_subcommand("fit", "fit a double Lorentzian to a transmission scan");
  fit->add_option("--scan", fit_scan, "CSV scan file (detuning_mhz,transmission)")
      ->required();
  fit->add_option("--out", fit_out, "directory for fit.csv (optional)");
  fit->add_flag("--separate-widths", fit_separate, "independent peak widths");

  auto* presets = app.add_subcommand("presets", "list bundled presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (presets->parsed()) {
      for (const auto& name : bicav::preset_names()) std::cout << name << "\n";
      return 0;
    }
    if (sim->parsed()) {
      const auto scenario = build_scenario(sim_args);
      const auto manifest = bicav::run_scenario(
          scenario, sim_args.out_dir, {.plots = sim_args.plots, .workers = 1});
      for (const auto& f : manifest.outputs)
        std::cout << "wrote " << (std::filesystem::path(sim_args.out_dir) / f).string()
                  << "\n";
      return 0;
    }
    if (swp->parsed()) {
      const auto scenario = build_scenario(sweep_args);
      const auto manifest = bicav::run_sweep(
          scenario, sweep_args.out_dir,
          {.plots = sweep_args.plots, .workers = sweep_args.workers});
      for (const auto& f : manifest.outputs)
        std::cout << "wrote "
                  << (std::filesystem::path(sweep_args.out_dir) / f).string() << "\n";
      return 0;
    }
    if (route->parsed()) {
      auto scenario = build_scenario(route_args);
      double start = -90.0, step = 2.5, stop = 90.0;
      if (!route_angles.empty()) {
        if (std::sscanf(route_angles.c_str(), "%lf:%lf:%lf", &start, &step, &stop) != 3 ||
            step <= 0.0 || stop < start)
          throw bicav::ConfigError("--angles: expected start:step:stop with step > 0");
      }
      std::vector<double> angles;
      for (double a = start; a <= stop + 1e-9; a += step) angles.push_back(a);
      scenario.outputs = {{bicav::OutputRequest::Kind::Routing, angles, true}};
      const auto manifest = bicav::run_scenario(
          scenario, route_args.out_dir, {.plots = route_args.plots, .workers = 1});
      for (const auto& f : manifest.outputs)
        std::cout << "wrote "
                  << (std::filesystem::path(route_args.out_dir) / f).string() << "\n";
      return 0;
    }
    if (fit->parsed()) return run_fit(fit_scan, fit_out, fit_separate);
  } catch (const bicav::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const bicav::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
