#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bicav/errors.hpp"
#include "bicav/scenario.hpp"
#include "bicav/units.hpp"

using namespace bicav;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("bicav_test_" + tag);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("empty config falls back to the experimental defaults") {
  const auto s = load_scenario(json::object());
  CHECK(angular_to_mhz(s.system.g) == doctest::Approx(4.77));
  CHECK(angular_to_mhz(s.system.kappa) == doctest::Approx(1.77));
  CHECK(angular_to_mhz(s.system.gamma) == doctest::Approx(3.03));
  CHECK(angular_to_mhz(s.system.delta_p) == doctest::Approx(3.471));
  CHECK(s.system.cavity_orientation.alpha == doctest::Approx(0.888));
  CHECK(rad_to_deg(s.system.cavity_orientation.phi1) == doctest::Approx(115.1));
  CHECK(rad_to_deg(s.system.cavity_orientation.phi2) == doctest::Approx(-40.1));
  CHECK(s.system.scheme.level_count() == 8);
  CHECK(angular_to_mhz(s.system.pulse.peak_rabi) == doctest::Approx(10.0));
  CHECK(s.system.pulse.duration == doctest::Approx(333e-9));
  CHECK(s.system.fock_truncation == 2);
}

TEST_CASE("validation errors carry field paths") {
  try {
    load_scenario(json{{"system", {{"kappa_mhz", -1.0}}}});
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("system.kappa_mhz") != std::string::npos);
  }

  try {
    load_scenario(json{{"system", {{"kappax_mhz", 2.0}}}});
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("system.kappax_mhz") != std::string::npos);
    CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
  }

  CHECK_THROWS_AS(load_scenario(json{{"outputs", json::array({json{{"type", "bogus"}}})}}),
                  ConfigError);
  CHECK_THROWS_AS(load_scenario(json{{"system", {{"initial_state", "nope"}}}}),
                  ConfigError);
}

TEST_CASE("fig4a_20MHz preset fields") {
  const auto s = make_preset("fig4a_20MHz");
  CHECK(s.system.scheme.has_level("e0"));
  CHECK(angular_to_mhz(s.system.delta_p) == doctest::Approx(20.0));
  CHECK(angular_to_mhz(s.system.pulse.peak_rabi) == doctest::Approx(2.0));
  CHECK(s.system.pulse.duration == doctest::Approx(1e-6));
  CHECK(angular_to_mhz(s.system.g) == doctest::Approx(4.0));
  CHECK(angular_to_mhz(s.system.kappa) == doctest::Approx(2.0));
  CHECK(s.system.gamma == 0.0);
  CHECK(s.system.cavity_orientation.alpha == doctest::Approx(1.0));
  CHECK_THROWS_AS(make_preset("nope"), ConfigError);
}

TEST_CASE("config round trip is idempotent") {
  for (const auto& name : preset_names()) {
    const auto s = make_preset(name);
    const json once = scenario_to_json(s);
    const auto reloaded = load_scenario(once);
    const json twice = scenario_to_json(reloaded);
    CHECK(once.dump() == twice.dump());
    CHECK(config_hash(once) == config_hash(twice));
  }
}

TEST_CASE("overrides and hashes") {
  json cfg = json::object();
  apply_override(cfg, "system.delta_p_mhz=7.25");
  apply_override(cfg, "system.pulse.shape=sin4_amplitude");
  const auto s = load_scenario(cfg);
  CHECK(angular_to_mhz(s.system.delta_p) == doctest::Approx(7.25));
  CHECK(s.system.pulse.shape == PulseShape::Sin4Amplitude);

  const auto base = load_scenario(json::object());
  CHECK(config_hash(base.canonical) != config_hash(s.canonical));
  CHECK_THROWS_AS(apply_override(cfg, "no_equals_sign"), ConfigError);
}

TEST_CASE("scenario file loading reports parse errors") {
  const auto dir = temp_dir("parse");
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "bad.json");
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_scenario_file(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_scenario_file(dir / "missing.json"), ConfigError);

  {
    std::ofstream out(dir / "ok.json");
    out << R"({"preset": "fig4a_0MHz", "system": {"delta_p_mhz": 1.5}})";
  }
  const auto s = load_scenario_file(dir / "ok.json");
  CHECK(angular_to_mhz(s.system.delta_p) == doctest::Approx(1.5));
  CHECK(angular_to_mhz(s.system.g) == doctest::Approx(4.0));  // from the preset
  std::filesystem::remove_all(dir);
}

TEST_CASE("run outputs are deterministic") {
  const auto s = make_preset("fig4a_0MHz");
  const auto dir1 = temp_dir("det1");
  const auto dir2 = temp_dir("det2");
  const auto m1 = run_scenario(s, dir1);
  const auto m2 = run_scenario(s, dir2);
  REQUIRE(m1.outputs == m2.outputs);
  CHECK(m1.config_hash == m2.config_hash);
  for (const auto& rel : m1.outputs) {
    CHECK(slurp(dir1 / rel) == slurp(dir2 / rel));
    CHECK(!slurp(dir1 / rel).empty());
  }
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("sweep aggregates per-value runs and tolerates failures") {
  auto s = make_preset("fig4a_0MHz");
  s.sweep = SweepSpec{"system.pulse.peak_rabi_mhz", {7.0, 0.0}};
  // peak_rabi 0 -> no emission; efficiency still fine (0), no throw expected.
  const auto dir = temp_dir("sweep");
  const auto manifest = run_sweep(s, dir, {.plots = false, .workers = 2});
  const std::string summary = slurp(dir / "summary.csv");
  CHECK(summary.find("value,status,eta,dominant_pol,dominant_fraction") == 0);
  CHECK(summary.find("\n7,ok,0.993") != std::string::npos);
  CHECK(summary.find("\n0,ok,") != std::string::npos);

  // order and parallelism do not change the aggregate
  const auto dir_serial = temp_dir("sweep_serial");
  run_sweep(s, dir_serial, {.plots = false, .workers = 1});
  CHECK(slurp(dir_serial / "summary.csv") == summary);

  // invalid sweep path is rejected up front
  s.sweep = SweepSpec{"system.not_a_knob", {1.0}};
  CHECK_THROWS_AS(run_sweep(s, temp_dir("sweep_bad"), {}), ConfigError);

  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir_serial);
}

TEST_CASE("sweep value errors are recorded without aborting the rest") {
  auto s = make_preset("fig4a_0MHz");
  s.sweep = SweepSpec{"system.fock_truncation", {2.0, 1.0}};  // 1 is invalid
  const auto dir = temp_dir("sweep_err");
  run_sweep(s, dir, {});
  const std::string summary = slurp(dir / "summary.csv");
  CHECK(summary.find("\n2,ok,") != std::string::npos);
  CHECK(summary.find("\n1,error") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("wavepacket csv format") {
  auto s = make_preset("fig4a_0MHz");
  s.grid.samples = 201;
  const auto dir = temp_dir("csv");
  run_scenario(s, dir);
  const std::string wp = slurp(dir / "wavepacket_phi_0.csv");
  CHECK(wp.find("time_ns,flux_port1_per_ns,flux_port2_per_ns") == 0);
  // one header plus one row per sample
  CHECK(std::count(wp.begin(), wp.end(), '\n') == 202);
  std::filesystem::remove_all(dir);
}
