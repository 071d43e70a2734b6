#include "bicav/scenario.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "bicav/emission.hpp"
#include "bicav/errors.hpp"
#include "bicav/plot.hpp"
#include "bicav/units.hpp"

namespace bicav {

using nlohmann::json;

namespace {

// Analyzer-axis calibration: internal plate angle = requested angle + offset.
// The default places the simulated best sigma- routing of the experimental
// preset at the measured -68.5 degrees.
constexpr double kDefaultQwpOffsetDeg = -10.0;

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string now_utc() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config: " + path + ": " + msg);
}

// Strict object reader: typed getters with defaults, unknown keys rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  ~Reader() = default;

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!consumed_.count(it.key()))
        fail(path_.empty() ? it.key() : path_ + "." + it.key(), "unknown key");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double def) {
    const json* v = take(key);
    if (!v) return def;
    if (!v->is_number()) fail(sub(key), "expected a number");
    return v->get<double>();
  }

  int integer(const std::string& key, int def) {
    const json* v = take(key);
    if (!v) return def;
    if (v->is_number_integer()) return v->get<int>();
    if (v->is_number()) {  // integral floats arrive via sweeps and overrides
      const double d = v->get<double>();
      if (d == std::floor(d)) return static_cast<int>(d);
    }
    fail(sub(key), "expected an integer");
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = take(key);
    if (!v) return def;
    if (!v->is_boolean()) fail(sub(key), "expected a boolean");
    return v->get<bool>();
  }

  std::string str(const std::string& key, const std::string& def) {
    const json* v = take(key);
    if (!v) return def;
    if (!v->is_string()) fail(sub(key), "expected a string");
    return v->get<std::string>();
  }

  const json* take(const std::string& key) {
    consumed_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string sub(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> consumed_;
};

std::vector<double> number_list(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) fail(path, "expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

json default_config() {
  return json{
      {"name", "experiment"},
      {"system",
       {{"scheme", "rb87_d2"},
        {"g_mhz", 4.77},
        {"kappa_mhz", 1.77},
        {"gamma_mhz", 3.03},
        {"delta_p_mhz", 3.471},
        {"orientation", {{"alpha", 0.888}, {"phi1_deg", 115.1}, {"phi2_deg", -40.1}}},
        {"cavity_center_detuning_mhz", 0.0},
        {"pump_offset_mhz", 0.0},
        {"zeeman_splitting_mhz", 26.0},
        {"raman_offset_mhz", 7.5},
        {"dark_branching", 1.0 / 6.0},
        {"include_dark", true},
        {"ground_splitting_mhz", 0.0},
        {"excited_detuning_mhz", 0.0},
        {"level_shifts_mhz", json::object()},
        {"initial_state", ""},
        {"initial_photon", "none"},
        {"fock_truncation", 2},
        {"qwp_offset_deg", kDefaultQwpOffsetDeg},
        {"pulse",
         {{"peak_rabi_mhz", 10.0},
          {"duration_ns", 333.0},
          {"shape", "sin2_amplitude"},
          {"detuning_mhz", 0.0}}}}},
      {"run", {{"span_ns", 0.0}, {"samples", 0}}},
      {"outputs", json::array({json{{"type", "efficiency"}}})},
  };
}

void deep_merge(json& base, const json& over) {
  if (!over.is_object() || !base.is_object()) {
    base = over;
    return;
  }
  for (auto it = over.begin(); it != over.end(); ++it) {
    if (base.contains(it.key()))
      deep_merge(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

EigenmodeOrientation parse_orientation(const json& j, const std::string& path) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "linear") return EigenmodeOrientation::linear_lab();
    if (s == "circular") return EigenmodeOrientation::circular_aligned();
    fail(path, "expected 'linear', 'circular' or an orientation object");
  }
  Reader r(j, path);
  EigenmodeOrientation o;
  o.alpha = r.number("alpha", 1.0);
  o.phi1 = deg_to_rad(r.number("phi1_deg", 0.0));
  o.phi2 = deg_to_rad(r.number("phi2_deg", 0.0));
  r.finish();
  if (o.alpha < 0.0 || o.alpha > 1.0) fail(path + ".alpha", "must be in [0, 1]");
  return o;
}

InitialPhoton parse_initial_photon(const std::string& s, const std::string& path) {
  if (s == "none") return InitialPhoton::None;
  if (s == "plus") return InitialPhoton::AtomicPlus;
  if (s == "minus") return InitialPhoton::AtomicMinus;
  if (s == "x") return InitialPhoton::ModeX;
  if (s == "y") return InitialPhoton::ModeY;
  fail(path, "expected one of none|plus|minus|x|y");
}

std::string initial_photon_name(InitialPhoton p) {
  switch (p) {
    case InitialPhoton::None: return "none";
    case InitialPhoton::AtomicPlus: return "plus";
    case InitialPhoton::AtomicMinus: return "minus";
    case InitialPhoton::ModeX: return "x";
    case InitialPhoton::ModeY: return "y";
  }
  return "none";
}

}  // namespace

Scenario load_scenario(const json& config) {
  if (!config.is_object()) throw ConfigError("config: expected a JSON object");

  // Fill every default so the canonical form is complete.
  json canon = default_config();
  json user = config;
  if (user.contains("preset")) {
    if (!user["preset"].is_string())
      fail("preset", "expected a preset name string");
    const Scenario base = make_preset(user["preset"].get<std::string>());
    canon = base.canonical;
    user.erase("preset");
  }
  deep_merge(canon, user);

  Scenario s;
  Reader top(canon, "");
  s.name = top.str("name", "scenario");

  {
    Reader sys(*top.take("system"), "system");
    const std::string scheme_kind = sys.str("scheme", "rb87_d2");

    const double g_mhz = sys.number("g_mhz", 4.77);
    const double kappa_mhz = sys.number("kappa_mhz", 1.77);
    const double gamma_mhz = sys.number("gamma_mhz", 3.03);
    if (g_mhz < 0.0) fail("system.g_mhz", "must be >= 0");
    if (kappa_mhz < 0.0) fail("system.kappa_mhz", "must be >= 0");
    if (gamma_mhz < 0.0) fail("system.gamma_mhz", "must be >= 0");

    const double zeeman = sys.number("zeeman_splitting_mhz", 26.0);
    const double raman_offset = sys.number("raman_offset_mhz", 7.5);
    const double dark_branching = sys.number("dark_branching", 1.0 / 6.0);
    const bool include_dark = sys.boolean("include_dark", true);
    const double ground_split = sys.number("ground_splitting_mhz", 0.0);
    const double excited_det = sys.number("excited_detuning_mhz", 0.0);
    if (zeeman < 0.0) fail("system.zeeman_splitting_mhz", "must be >= 0");

    if (scheme_kind == "rb87_d2") {
      Rb87Options opts;
      opts.zeeman_ground_splitting = mhz_to_angular(zeeman);
      opts.raman_offset = mhz_to_angular(raman_offset);
      opts.dark_branching = dark_branching;
      opts.include_dark = include_dark;
      try {
        s.system.scheme = rb87_d2_scheme(opts);
      } catch (const std::invalid_argument& e) {
        fail("system", e.what());
      }
    } else if (scheme_kind == "three_level") {
      s.system.scheme = three_level_lambda(mhz_to_angular(ground_split),
                                           mhz_to_angular(excited_det));
    } else {
      fail("system.scheme", "expected 'rb87_d2' or 'three_level'");
    }

    if (const json* shifts = sys.take("level_shifts_mhz")) {
      if (!shifts->is_object()) fail("system.level_shifts_mhz", "expected an object");
      std::map<std::string, double> map;
      for (auto it = shifts->begin(); it != shifts->end(); ++it) {
        if (!it.value().is_number())
          fail("system.level_shifts_mhz." + it.key(), "expected a number");
        if (!s.system.scheme.has_level(it.key()))
          fail("system.level_shifts_mhz." + it.key(), "unknown level label");
        map[it.key()] = mhz_to_angular(it.value().get<double>());
      }
      s.system.scheme.shift_levels(map);
    }

    s.system.g = mhz_to_angular(g_mhz);
    s.system.kappa = mhz_to_angular(kappa_mhz);
    s.system.gamma = mhz_to_angular(gamma_mhz);
    s.system.delta_p = mhz_to_angular(sys.number("delta_p_mhz", 3.471));
    if (const json* o = sys.take("orientation"))
      s.system.cavity_orientation = parse_orientation(*o, "system.orientation");
    s.system.cavity_center_detuning =
        mhz_to_angular(sys.number("cavity_center_detuning_mhz", 0.0));
    s.system.omega_L = mhz_to_angular(sys.number("pump_offset_mhz", 0.0));
    s.system.initial_state = sys.str("initial_state", "");
    s.system.initial_photon =
        parse_initial_photon(sys.str("initial_photon", "none"), "system.initial_photon");
    s.system.fock_truncation = sys.integer("fock_truncation", 2);
    if (s.system.fock_truncation < 2) fail("system.fock_truncation", "must be >= 2");
    s.system.qwp_axis_offset = deg_to_rad(sys.number("qwp_offset_deg", kDefaultQwpOffsetDeg));

    {
      const json* pj = sys.take("pulse");
      if (!pj) fail("system.pulse", "missing");
      Reader pr(*pj, "system.pulse");
      s.system.pulse.peak_rabi = mhz_to_angular(pr.number("peak_rabi_mhz", 10.0));
      s.system.pulse.duration = pr.number("duration_ns", 333.0) * 1e-9;
      if (s.system.pulse.peak_rabi < 0.0) fail("system.pulse.peak_rabi_mhz", "must be >= 0");
      if (s.system.pulse.duration <= 0.0) fail("system.pulse.duration_ns", "must be > 0");
      const std::string shape = pr.str("shape", "sin2_amplitude");
      try {
        s.system.pulse.shape = pulse_shape_from_string(shape);
      } catch (const std::invalid_argument&) {
        fail("system.pulse.shape", "expected sin2_amplitude|sin4_amplitude|constant");
      }
      s.system.pulse.detuning = mhz_to_angular(pr.number("detuning_mhz", 0.0));
      pr.finish();
    }
    if (!s.system.initial_state.empty() &&
        !s.system.scheme.has_level(s.system.initial_state))
      fail("system.initial_state", "unknown level '" + s.system.initial_state + "'");
    sys.finish();
  }

  {
    const json* rj = top.take("run");
    const json empty_run = json::object();
    Reader rr(rj ? *rj : empty_run, "run");
    s.grid.span = rr.number("span_ns", 0.0) * 1e-9;
    s.grid.samples = rr.integer("samples", 0);
    if (s.grid.span < 0.0) fail("run.span_ns", "must be >= 0");
    if (s.grid.samples < 0) fail("run.samples", "must be >= 0");
    rr.finish();
  }

  if (const json* oj = top.take("outputs")) {
    if (!oj->is_array()) fail("outputs", "expected an array");
    int i = 0;
    for (const auto& item : *oj) {
      const std::string path = "outputs[" + std::to_string(i++) + "]";
      Reader orr(item, path);
      const std::string type = orr.str("type", "");
      OutputRequest req;
      if (type == "wavepacket") {
        req.kind = OutputRequest::Kind::Wavepacket;
        const json* a = orr.take("angles_deg");
        if (!a) fail(path + ".angles_deg", "missing");
        req.angles_deg = number_list(*a, path + ".angles_deg");
      } else if (type == "routing") {
        req.kind = OutputRequest::Kind::Routing;
        const json* a = orr.take("angles_deg");
        if (!a) fail(path + ".angles_deg", "missing");
        req.angles_deg = number_list(*a, path + ".angles_deg");
        req.include_birefringence_off = orr.boolean("include_birefringence_off", true);
      } else if (type == "efficiency") {
        req.kind = OutputRequest::Kind::Efficiency;
      } else if (type == "oscillation") {
        req.kind = OutputRequest::Kind::Oscillation;
      } else {
        fail(path + ".type", "expected wavepacket|routing|efficiency|oscillation");
      }
      orr.finish();
      s.outputs.push_back(std::move(req));
    }
  }

  if (const json* sj = top.take("sweep")) {
    Reader sr(*sj, "sweep");
    SweepSpec sweep;
    sweep.path = sr.str("path", "");
    if (sweep.path.empty()) fail("sweep.path", "missing");
    const json* v = sr.take("values");
    if (!v) fail("sweep.values", "missing");
    sweep.values = number_list(*v, "sweep.values");
    sr.finish();
    s.sweep = std::move(sweep);
  }
  top.finish();

  s.canonical = scenario_to_json(s);
  try {
    s.system.validate();
  } catch (const std::invalid_argument& e) {
    fail("system", e.what());
  }
  return s;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: '" + path.string() + "': " + e.what());
  }
  return load_scenario(j);
}

json scenario_to_json(const Scenario& s) {
  json j = default_config();
  j["name"] = s.name;
  auto& sys = j["system"];

  const auto& scheme = s.system.scheme;
  const bool three_level = scheme.has_level("e0");
  sys["scheme"] = three_level ? "three_level" : "rb87_d2";
  sys["g_mhz"] = angular_to_mhz(s.system.g);
  sys["kappa_mhz"] = angular_to_mhz(s.system.kappa);
  sys["gamma_mhz"] = angular_to_mhz(s.system.gamma);
  sys["delta_p_mhz"] = angular_to_mhz(s.system.delta_p);
  sys["orientation"] = {{"alpha", s.system.cavity_orientation.alpha},
                        {"phi1_deg", rad_to_deg(s.system.cavity_orientation.phi1)},
                        {"phi2_deg", rad_to_deg(s.system.cavity_orientation.phi2)}};
  sys["cavity_center_detuning_mhz"] = angular_to_mhz(s.system.cavity_center_detuning);
  sys["pump_offset_mhz"] = angular_to_mhz(s.system.omega_L);

  // Rebuild the reference scheme from the recovered constructor arguments,
  // then record any per-level residuals as explicit shifts.
  LevelScheme reference = three_level_lambda();
  if (three_level) {
    const double split = scheme.energy("u+") - scheme.energy("u-");
    const double det = scheme.energy("e0");
    sys["ground_splitting_mhz"] = angular_to_mhz(split);
    sys["excited_detuning_mhz"] = angular_to_mhz(det);
    reference = three_level_lambda(split, det);
  } else {
    const double zeeman =
        scheme.energy(rb87::kGroundPlus) - scheme.energy(rb87::kGroundMinus);
    sys["zeeman_splitting_mhz"] = angular_to_mhz(zeeman);
    sys["raman_offset_mhz"] = angular_to_mhz(scheme.raman_offset());
    double dark_b = 0.0;
    for (const auto& d : scheme.decay_channels())
      if (d.excited == rb87::kExcitedZero && d.ground == rb87::kDark)
        dark_b = d.branching;
    sys["dark_branching"] = dark_b > 0.0 ? dark_b : 1.0 / 6.0;
    sys["include_dark"] = dark_b > 0.0;
    Rb87Options ref_opts;
    ref_opts.zeeman_ground_splitting = zeeman;
    ref_opts.raman_offset = scheme.raman_offset();
    ref_opts.dark_branching = dark_b > 0.0 ? dark_b : 1.0 / 6.0;
    ref_opts.include_dark = dark_b > 0.0;
    reference = rb87_d2_scheme(ref_opts);
  }
  json shifts = json::object();
  for (const auto& level : scheme.levels()) {
    const double delta = level.energy - reference.energy(level.label);
    if (std::abs(delta) > 1e-6) shifts[level.label] = angular_to_mhz(delta);
  }
  sys["level_shifts_mhz"] = shifts;
  sys["initial_state"] = s.system.initial_state;
  sys["initial_photon"] = initial_photon_name(s.system.initial_photon);
  sys["fock_truncation"] = s.system.fock_truncation;
  sys["qwp_offset_deg"] = rad_to_deg(s.system.qwp_axis_offset);
  sys["pulse"] = {{"peak_rabi_mhz", angular_to_mhz(s.system.pulse.peak_rabi)},
                  {"duration_ns", s.system.pulse.duration * 1e9},
                  {"shape", to_string(s.system.pulse.shape)},
                  {"detuning_mhz", angular_to_mhz(s.system.pulse.detuning)}};
  j["run"] = {{"span_ns", s.grid.span * 1e9}, {"samples", s.grid.samples}};

  json outs = json::array();
  for (const auto& o : s.outputs) {
    json oj;
    switch (o.kind) {
      case OutputRequest::Kind::Wavepacket:
        oj = {{"type", "wavepacket"}, {"angles_deg", o.angles_deg}};
        break;
      case OutputRequest::Kind::Routing:
        oj = {{"type", "routing"},
              {"angles_deg", o.angles_deg},
              {"include_birefringence_off", o.include_birefringence_off}};
        break;
      case OutputRequest::Kind::Efficiency:
        oj = {{"type", "efficiency"}};
        break;
      case OutputRequest::Kind::Oscillation:
        oj = {{"type", "oscillation"}};
        break;
    }
    outs.push_back(std::move(oj));
  }
  j["outputs"] = std::move(outs);
  if (s.sweep)
    j["sweep"] = {{"path", s.sweep->path}, {"values", s.sweep->values}};
  return j;
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "': expected key.path=value");
  std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  for (auto& c : path)
    if (c == '.') c = '/';
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // bare strings allowed unquoted
  }
  config[json::json_pointer("/" + path)] = parsed;
}

std::string config_hash(const json& canonical) {
  const std::string dump = canonical.dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> preset_names() {
  return {"experiment", "fig2c", "fig3", "fig4a_0MHz", "fig4a_4MHz",
          "fig4a_20MHz", "fig4b_4MHz", "fig4b_20MHz", "beat_4MHz"};
}

Scenario make_preset(const std::string& name) {
  json j = default_config();
  j["name"] = name;
  auto fig4 = [&](double delta_p_mhz, double rabi_mhz, double center_mhz) {
    j["system"]["scheme"] = "three_level";
    j["system"]["g_mhz"] = 4.0;
    j["system"]["kappa_mhz"] = 2.0;
    j["system"]["gamma_mhz"] = 0.0;
    j["system"]["delta_p_mhz"] = delta_p_mhz;
    j["system"]["orientation"] = "linear";
    j["system"]["cavity_center_detuning_mhz"] = center_mhz;
    j["system"]["qwp_offset_deg"] = 0.0;
    j["system"]["pulse"]["peak_rabi_mhz"] = rabi_mhz;
    j["system"]["pulse"]["duration_ns"] = 1000.0;
    j["run"]["span_ns"] = 1300.0;
    j["outputs"] = json::array({json{{"type", "wavepacket"}, {"angles_deg", {0.0}}},
                                json{{"type", "wavepacket"}, {"angles_deg", {45.0}}},
                                json{{"type", "efficiency"}}});
  };

  if (name == "experiment") {
    // defaults as-is
  } else if (name == "fig2c") {
    json angles = json::array();
    for (double a = -90.0; a <= 90.0 + 1e-9; a += 2.5) angles.push_back(a);
    j["outputs"] = json::array(
        {json{{"type", "routing"},
              {"angles_deg", angles},
              {"include_birefringence_off", true}},
         json{{"type", "efficiency"}}});
  } else if (name == "fig3") {
    j["outputs"] = json::array(
        {json{{"type", "wavepacket"}, {"angles_deg", {-22.5}}},
         json{{"type", "wavepacket"}, {"angles_deg", {0.0}}},
         json{{"type", "wavepacket"}, {"angles_deg", {22.5}}},
         json{{"type", "efficiency"}}});
  } else if (name == "fig4a_0MHz") {
    fig4(0.0, 7.0, 0.0);
  } else if (name == "fig4a_4MHz") {
    fig4(4.0, 7.0, 0.0);
    j["outputs"].push_back(json{{"type", "oscillation"}});
  } else if (name == "fig4a_20MHz") {
    fig4(20.0, 2.0, 0.0);
  } else if (name == "fig4b_4MHz") {
    fig4(4.0, 7.0, -2.0);  // X eigenmode on Raman resonance
  } else if (name == "fig4b_20MHz") {
    fig4(20.0, 2.0, -10.0);
  } else if (name == "beat_4MHz") {
    // A sigma- photon stored in the birefringent cavity with the atom parked
    // in the pump-coupled ground state (which the cavity does not couple);
    // its polarization beats at exactly delta_p while it leaks out.
    fig4(4.0, 0.0, 0.0);
    j["system"]["kappa_mhz"] = 0.5;
    j["system"]["pulse"]["peak_rabi_mhz"] = 0.0;
    j["system"]["initial_photon"] = "minus";
    j["run"]["span_ns"] = 2000.0;
    j["run"]["samples"] = 4001;
    j["outputs"] = json::array({json{{"type", "oscillation"}}});
  } else {
    throw ConfigError("unknown preset '" + name + "'; see `bicav presets`");
  }
  return load_scenario(j);
}

namespace {

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  for (const auto& l : lines) out << l << "\n";
}

struct RunMetrics {
  double eta = 0.0;
  double fraction_plus = 0.0;
  double fraction_minus = 0.0;
};

double auto_span(const SystemConfig& cfg) {
  const double ring = cfg.kappa > 0.0 ? 9.2 / (2.0 * cfg.kappa) : cfg.pulse.duration;
  return cfg.pulse.duration + ring;
}

RunMetrics compute_metrics(const Trajectory& traj, const CavityMoments& moments) {
  RunMetrics m;
  m.eta = integrate_simpson(traj.times, moments.total_flux());
  if (m.eta > 0.0) {
    m.fraction_plus =
        integrate_simpson(traj.times, moments.flux(JonesVector::circular_plus())) /
        m.eta;
    m.fraction_minus = 1.0 - m.fraction_plus;
  }
  return m;
}

}  // namespace

namespace {

RunManifest run_scenario_impl(const Scenario& s, const std::filesystem::path& out_dir,
                              const RunOptions& opts, RunMetrics* metrics_out) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  RunManifest manifest;
  manifest.scenario = s.name;
  manifest.config_hash = config_hash(s.canonical);
  manifest.tool_version = BICAV_VERSION;
  manifest.started_utc = now_utc();

  const double span = s.grid.span > 0.0 ? s.grid.span : auto_span(s.system);
  EvolveOptions eopts;
  eopts.samples = s.grid.samples;
  const Trajectory traj =
      evolve(s.system, default_initial_state(s.system), 0.0, span, eopts);
  const CavityMoments moments(traj);
  if (metrics_out) *metrics_out = compute_metrics(traj, moments);

  auto add_output = [&](const std::string& rel) { manifest.outputs.push_back(rel); };

  for (const auto& req : s.outputs) {
    switch (req.kind) {
      case OutputRequest::Kind::Wavepacket: {
        for (double angle : req.angles_deg) {
          const WavepacketRecord rec = analyzer_wavepackets(traj, angle);
          std::vector<std::string> lines = {"time_ns,flux_port1_per_ns,flux_port2_per_ns"};
          for (size_t i = 0; i < rec.times.size(); ++i)
            lines.push_back(fmt_num(rec.times[i] * 1e9) + "," +
                            fmt_num(rec.flux_port1[i] * 1e-9) + "," +
                            fmt_num(rec.flux_port2[i] * 1e-9));
          const std::string base = "wavepacket_phi_" + fmt_num(angle);
          write_lines(out_dir / (base + ".csv"), lines);
          add_output(base + ".csv");
          if (opts.plots) {
            std::vector<double> ns(rec.times.size()), f1(rec.times.size()),
                f2(rec.times.size());
            for (size_t i = 0; i < rec.times.size(); ++i) {
              ns[i] = rec.times[i] * 1e9;
              f1[i] = rec.flux_port1[i] * 1e-9;
              f2[i] = rec.flux_port2[i] * 1e-9;
            }
            write_svg_plot(out_dir / (base + ".svg"),
                           s.name + ": wavepackets at phi = " + fmt_num(angle) + " deg",
                           "time (ns)", "flux (1/ns)",
                           {{"port 1 (H)", ns, f1}, {"port 2 (V)", ns, f2}});
            add_output(base + ".svg");
          }
        }
        break;
      }
      case OutputRequest::Kind::Routing: {
        const std::vector<bool> toggles =
            req.include_birefringence_off ? std::vector<bool>{true, false}
                                          : std::vector<bool>{true};
        std::vector<PlotSeries> plot_series;
        for (bool on : toggles) {
          const auto curve = routing_curve(s.system, req.angles_deg, on);
          std::vector<std::string> lines = {"qwp_angle_deg,fraction_H,fraction_V"};
          std::vector<double> xs, ys;
          for (const auto& pt : curve) {
            lines.push_back(fmt_num(pt.angle_deg) + "," + fmt_num(pt.fraction_port1) +
                            "," + fmt_num(pt.fraction_port2));
            xs.push_back(pt.angle_deg);
            ys.push_back(pt.fraction_port1);
          }
          const std::string fname = on ? "routing.csv" : "routing_no_birefringence.csv";
          write_lines(out_dir / fname, lines);
          add_output(fname);
          plot_series.push_back(
              {on ? "fraction H (birefringent)" : "fraction H (ideal)", xs, ys});
        }
        if (opts.plots) {
          write_svg_plot(out_dir / "routing.svg", s.name + ": photon routing",
                         "QWP angle (deg)", "fraction in H port", plot_series);
          add_output("routing.svg");
        }
        break;
      }
      case OutputRequest::Kind::Efficiency: {
        const RunMetrics m = compute_metrics(traj, moments);
        write_lines(out_dir / "efficiency.csv",
                    {"eta,fraction_plus,fraction_minus",
                     fmt_num(m.eta) + "," + fmt_num(m.fraction_plus) + "," +
                         fmt_num(m.fraction_minus)});
        add_output("efficiency.csv");
        break;
      }
      case OutputRequest::Kind::Oscillation: {
        const auto flux_p = moments.flux(JonesVector::circular_plus());
        const auto flux_m = moments.flux(JonesVector::circular_minus());
        std::string value = "nan";
        try {
          value = fmt_num(angular_to_mhz(
              oscillation_frequency(traj.times, flux_p, flux_m)));
        } catch (const NumericError&) {
          // no oscillation detected; recorded as nan
        }
        write_lines(out_dir / "oscillation.csv", {"oscillation_mhz", value});
        add_output("oscillation.csv");
        break;
      }
    }
  }

  manifest.finished_utc = now_utc();
  json mj = {{"scenario", manifest.scenario},
             {"config_hash", manifest.config_hash},
             {"tool_version", manifest.tool_version},
             {"started_utc", manifest.started_utc},
             {"finished_utc", manifest.finished_utc},
             {"outputs", manifest.outputs},
             {"config", s.canonical}};
  std::ofstream mout(out_dir / "manifest.json", std::ios::binary);
  mout << mj.dump(2) << "\n";
  return manifest;
}

}  // namespace

RunManifest run_scenario(const Scenario& s, const std::filesystem::path& out_dir,
                         const RunOptions& opts) {
  return run_scenario_impl(s, out_dir, opts, nullptr);
}

RunManifest run_sweep(const Scenario& s, const std::filesystem::path& out_dir,
                      const RunOptions& opts) {
  namespace fs = std::filesystem;
  if (!s.sweep) throw ConfigError("sweep: scenario has no sweep specification");
  fs::create_directories(out_dir);

  RunManifest manifest;
  manifest.scenario = s.name;
  manifest.config_hash = config_hash(s.canonical);
  manifest.tool_version = BICAV_VERSION;
  manifest.started_utc = now_utc();

  std::string pointer = "/" + s.sweep->path;
  for (auto& c : pointer)
    if (c == '.') c = '/';
  const json::json_pointer ptr(pointer);
  if (!s.canonical.contains(ptr))
    throw ConfigError("sweep.path: '" + s.sweep->path + "' does not exist in the config");

  struct Row {
    double value;
    std::string status = "ok";
    RunMetrics metrics;
  };
  const auto& values = s.sweep->values;
  std::vector<Row> rows(values.size());

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= values.size()) return;
      rows[i].value = values[i];
      try {
        json cfg = s.canonical;
        cfg[ptr] = values[i];
        cfg.erase("sweep");
        Scenario sub = load_scenario(cfg);
        sub.name = s.name + "[" + s.sweep->path + "=" + fmt_num(values[i]) + "]";
        const std::string dir = "run_" + std::to_string(i) + "_" + fmt_num(values[i]);
        RunOptions sub_opts = opts;
        sub_opts.workers = 1;
        run_scenario_impl(sub, out_dir / dir, sub_opts, &rows[i].metrics);
      } catch (const std::exception& e) {
        rows[i].status = std::string("error: ") + e.what();
      }
    }
  };

  const int n_workers =
      std::max(1, std::min<int>(opts.workers, static_cast<int>(values.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<std::string> lines = {"value,status,eta,dominant_pol,dominant_fraction"};
  for (const auto& row : rows) {
    const bool plus = row.metrics.fraction_plus >= row.metrics.fraction_minus;
    lines.push_back(fmt_num(row.value) + "," + row.status + "," +
                    fmt_num(row.metrics.eta) + "," + (plus ? "+" : "-") + "," +
                    fmt_num(plus ? row.metrics.fraction_plus
                                 : row.metrics.fraction_minus));
  }
  write_lines(out_dir / "summary.csv", lines);
  manifest.outputs.push_back("summary.csv");

  manifest.finished_utc = now_utc();
  json mj = {{"scenario", manifest.scenario},
             {"config_hash", manifest.config_hash},
             {"tool_version", manifest.tool_version},
             {"started_utc", manifest.started_utc},
             {"finished_utc", manifest.finished_utc},
             {"outputs", manifest.outputs},
             {"sweep_path", s.sweep->path},
             {"config", s.canonical}};
  std::ofstream mout(out_dir / "manifest.json", std::ios::binary);
  mout << mj.dump(2) << "\n";
  return manifest;
}

}  // namespace bicav
