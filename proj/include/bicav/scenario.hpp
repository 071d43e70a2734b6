#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bicav/dynamics.hpp"

namespace bicav {

struct OutputRequest {
  enum class Kind { Wavepacket, Routing, Efficiency, Oscillation };
  Kind kind = Kind::Efficiency;
  std::vector<double> angles_deg;          // wavepacket / routing grids
  bool include_birefringence_off = true;   // routing only
};

struct SweepSpec {
  std::string path;            // dotted config path, e.g. system.delta_p_mhz
  std::vector<double> values;
};

struct RunGrid {
  double span = 0.0;  // seconds; 0 = pulse duration plus cavity ring-down
  int samples = 0;    // 0 = auto from span and delta_p
};

struct Scenario {
  std::string name;
  SystemConfig system;
  RunGrid grid;
  std::vector<OutputRequest> outputs;
  std::optional<SweepSpec> sweep;
  nlohmann::json canonical;  // fully-defaulted config; hash and sweep target
};

std::vector<std::string> preset_names();
Scenario make_preset(const std::string& name);

// Parse and validate a config object. Every field is optional and defaults
// to the bundled experimental parameter set; unknown keys are rejected with
// their full path.
Scenario load_scenario(const nlohmann::json& config);
Scenario load_scenario_file(const std::filesystem::path& path);

// Canonical form: all defaults made explicit. load(serialize(s)) == s.
nlohmann::json scenario_to_json(const Scenario& s);

// Apply "dotted.path=value" style override to a config object.
void apply_override(nlohmann::json& config, const std::string& assignment);

// FNV-1a hash of the canonical config dump.
std::string config_hash(const nlohmann::json& canonical);

struct RunOptions {
  bool plots = false;
  int workers = 1;
};

struct RunManifest {
  std::string scenario;
  std::string config_hash;
  std::string tool_version;
  std::string started_utc;
  std::string finished_utc;
  std::vector<std::string> outputs;  // paths relative to the output directory
};

// Execute the scenario's outputs into out_dir; writes manifest.json.
RunManifest run_scenario(const Scenario& s, const std::filesystem::path& out_dir,
                         const RunOptions& opts = {});

// Independent runs per sweep value (parallel across workers) plus an
// aggregated summary.csv. A failing sub-run is recorded in the summary and
// does not abort the others.
RunManifest run_sweep(const Scenario& s, const std::filesystem::path& out_dir,
                      const RunOptions& opts = {});

}  // namespace bicav
