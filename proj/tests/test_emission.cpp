#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bicav/emission.hpp"
#include "bicav/errors.hpp"
#include "bicav/units.hpp"

using namespace bicav;

namespace {

const Complex kI{0.0, 1.0};

SystemConfig fig4_config(double delta_p_mhz, double rabi_mhz) {
  SystemConfig cfg;
  cfg.scheme = three_level_lambda();
  cfg.g = mhz_to_angular(4.0);
  cfg.kappa = mhz_to_angular(2.0);
  cfg.gamma = 0.0;
  cfg.delta_p = mhz_to_angular(delta_p_mhz);
  cfg.cavity_orientation = EigenmodeOrientation::linear_lab();
  cfg.pulse = {mhz_to_angular(rabi_mhz), 1e-6, PulseShape::Sin2Amplitude, 0.0};
  return cfg;
}

Trajectory fig4_trajectory(double delta_p_mhz, double rabi_mhz, int samples = 801,
                           double span = 1.3e-6) {
  const auto cfg = fig4_config(delta_p_mhz, rabi_mhz);
  EvolveOptions opts;
  opts.samples = samples;
  return evolve(cfg, default_initial_state(cfg), 0.0, span, opts);
}

}  // namespace

TEST_CASE("simpson integration") {
  std::vector<double> x(801), y(801);
  for (int i = 0; i < 801; ++i) {
    x[i] = std::numbers::pi * i / 800.0;
    y[i] = std::sin(x[i]);
  }
  CHECK(std::abs(integrate_simpson(x, y) - 2.0) < 1e-10);

  // even sample count takes a trapezoid closure
  x.resize(800);
  y.resize(800);
  CHECK(std::abs(integrate_simpson(x, y) - 2.0) < 1e-5);
  CHECK_THROWS_AS(integrate_simpson({0.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("detection polarization labels") {
  CHECK(DetectionPolarization::from_label("H").label == "H");
  CHECK(DetectionPolarization::from_label("plus").label == "+");
  CHECK_THROWS_AS(DetectionPolarization::from_label("Q"), std::invalid_argument);
}

TEST_CASE("vacuum trajectory has zero flux") {
  auto cfg = fig4_config(4.0, 0.0);
  EvolveOptions opts;
  opts.samples = 51;
  const auto traj = evolve(cfg, default_initial_state(cfg), 0.0, 200e-9, opts);
  const auto flux = emission_flux(traj, DetectionPolarization::from_label("H"));
  for (double f : flux) CHECK(std::abs(f) < 1e-12 * cfg.kappa);
}

TEST_CASE("moment-based flux equals the operator route") {
  const auto traj = fig4_trajectory(4.0, 7.0, 201);
  const auto& cfg = traj.config;
  for (const char* label : {"H", "V", "D", "+", "-"}) {
    const auto pol = DetectionPolarization::from_label(label);
    const auto fast = emission_flux(traj, pol);
    for (size_t i = 0; i < traj.times.size(); i += 25) {
      const Operator mode = detection_mode_operator(pol, cfg, traj.times[i]);
      const Complex nv = expectation(traj.density(i), mode.adjoint() * mode);
      CHECK(std::abs(fast[i] - 2.0 * cfg.kappa * nv.real()) <
            1e-10 * std::max(1.0, std::abs(fast[i])));
    }
  }
}

TEST_CASE("eigenmode detection operator is the frame-rotated ladder operator") {
  const auto cfg = fig4_config(4.0, 7.0);
  const auto space = cfg.space();
  const auto r_cl =
      rotation_matrix(cfg.cavity_orientation, Basis::Cavity, Basis::Lab).entries();
  const DetectionPolarization pol_x{JonesVector(r_cl.col(0), Basis::Lab), "X"};
  const Operator ax = embed(annihilation(2), "cavity_x", space);
  const double wx = resolve_frequencies(cfg).cavity_x;
  for (double t : {0.0, 40e-9, 333e-9}) {
    const Operator mode = detection_mode_operator(pol_x, cfg, t);
    CHECK((mode.matrix() - std::exp(-kI * wx * t) * ax.matrix()).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("total flux is invariant under the choice of orthonormal pair") {
  const auto traj = fig4_trajectory(4.0, 7.0, 401);
  const CavityMoments moments(traj);
  const auto total = moments.total_flux();

  std::mt19937 rng(41);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 8; ++trial) {
    Eigen::Vector2cd a(Complex(dist(rng), dist(rng)), Complex(dist(rng), dist(rng)));
    a.normalize();
    const Eigen::Vector2cd b(-std::conj(a[1]), std::conj(a[0]));  // orthogonal
    const auto fa = moments.flux(JonesVector(a, Basis::Lab));
    const auto fb = moments.flux(JonesVector(b, Basis::Lab));
    for (size_t i = 0; i < total.size(); i += 40) {
      const double scale = std::max(1.0, total[i]);
      CHECK(std::abs(fa[i] + fb[i] - total[i]) < 1e-10 * scale);
    }
  }
}

TEST_CASE("analyzer wavepackets account for all emission") {
  const auto traj = fig4_trajectory(0.0, 7.0, 801);
  const double eta = emission_efficiency(traj);
  CHECK(eta == doctest::Approx(0.9933).epsilon(2e-3));
  for (double angle : {-22.5, 0.0, 45.0}) {
    const auto rec = analyzer_wavepackets(traj, angle);
    CHECK(rec.efficiency == doctest::Approx(eta).epsilon(1e-9));
    CHECK(rec.qwp_angle_deg == angle);
    for (size_t i = 0; i < rec.times.size(); ++i) {
      CHECK(rec.flux_port1[i] > -1e-10);
      CHECK(rec.flux_port2[i] > -1e-10);
    }
  }
}

TEST_CASE("ideal sigma- photon routes fully at 45 degrees") {
  // delta_p = 0, linear cavity, no analyzer offset: pure circular emission
  const auto traj = fig4_trajectory(0.0, 7.0, 801);
  const auto rec = analyzer_wavepackets(traj, 45.0);
  const double p1 = integrate_simpson(rec.times, rec.flux_port1);
  const double p2 = integrate_simpson(rec.times, rec.flux_port2);
  CHECK(std::min(p1, p2) / (p1 + p2) < 1e-9);
}

TEST_CASE("without birefringence the port fractions are constant along the packet") {
  auto cfg = fig4_config(0.0, 7.0);
  cfg.cavity_orientation = EigenmodeOrientation::circular_aligned();
  EvolveOptions opts;
  opts.samples = 801;
  const auto traj = evolve(cfg, default_initial_state(cfg), 0.0, 1.3e-6, opts);
  for (double angle : {-30.0, 10.0, 65.0}) {
    const auto rec = analyzer_wavepackets(traj, angle);
    double ref = -1.0;
    for (size_t i = 0; i < rec.times.size(); ++i) {
      const double tot = rec.flux_port1[i] + rec.flux_port2[i];
      if (tot < 1e-3 * cfg.kappa) continue;  // skip empty-cavity samples
      const double frac = rec.flux_port1[i] / tot;
      if (ref < 0.0) ref = frac;
      CHECK(std::abs(frac - ref) < 1e-6);
    }
  }
}

TEST_CASE("flux split in the eigenmode basis is static under pure decay") {
  auto cfg = fig4_config(6.0, 0.0);
  cfg.g = 0.0;
  cfg.initial_photon = InitialPhoton::AtomicMinus;  // superposition of X and Y
  EvolveOptions opts;
  opts.samples = 401;
  const auto traj = evolve(cfg, default_initial_state(cfg), 0.0, 300e-9, opts);
  const CavityMoments moments(traj);
  const auto r_cl =
      rotation_matrix(cfg.cavity_orientation, Basis::Cavity, Basis::Lab).entries();
  const auto fx = moments.flux(JonesVector(r_cl.col(0), Basis::Lab));
  const auto fy = moments.flux(JonesVector(r_cl.col(1), Basis::Lab));
  const double ref = fx[0] / (fx[0] + fy[0]);
  for (size_t i = 0; i < fx.size(); ++i) {
    if (fx[i] + fy[i] < 1e-4 * (fx[0] + fy[0])) continue;
    CHECK(std::abs(fx[i] / (fx[i] + fy[i]) - ref) < 1e-10);
  }
}

TEST_CASE("routing curve: Malus law for an ideal circular photon") {
  auto cfg = fig4_config(0.0, 7.0);
  cfg.qwp_axis_offset = 0.0;
  std::vector<double> angles;
  for (double a = -90.0; a <= 90.0; a += 7.5) angles.push_back(a);
  const auto curve = routing_curve(cfg, angles, false);
  for (const auto& pt : curve) {
    CHECK(pt.fraction_port1 + pt.fraction_port2 == doctest::Approx(1.0).epsilon(1e-9));
    const double expected = (1.0 - std::sin(2.0 * deg_to_rad(pt.angle_deg))) / 2.0;
    CHECK(std::abs(pt.fraction_port1 - expected) < 2e-3);
  }
}

TEST_CASE("routing curve is 180-degree periodic") {
  auto cfg = fig4_config(4.0, 7.0);
  const auto curve = routing_curve(cfg, {-50.0, 130.0, 10.0, 190.0}, true);
  CHECK(std::abs(curve[0].fraction_port1 - curve[1].fraction_port1) < 1e-12);
  CHECK(std::abs(curve[2].fraction_port1 - curve[3].fraction_port1) < 1e-12);
}

TEST_CASE("routing with no emission is an error") {
  auto cfg = fig4_config(4.0, 0.0);
  CHECK_THROWS_AS(routing_curve(cfg, {0.0}, true), NumericError);
  CHECK_THROWS_AS(routing_curve(cfg, {}, true), std::invalid_argument);
}

TEST_CASE("oscillation frequency from a synthetic beat") {
  const double f_beat = 3.7e6;
  const int n = 2001;
  std::vector<double> t(n), fa(n), fb(n);
  for (int i = 0; i < n; ++i) {
    t[i] = 1e-6 * i / (n - 1.0);
    const double env = std::exp(-t[i] / 4e-7) * (1.0 - std::exp(-t[i] / 3e-8));
    const double s = std::cos(two_pi * f_beat * t[i] + 0.4);
    fa[i] = env * (1.0 + s) / 2.0;
    fb[i] = env * (1.0 - s) / 2.0;
  }
  const double w = oscillation_frequency(t, fa, fb);
  CHECK(std::abs(angular_to_mhz(w) - 3.7) < 0.02);
}

TEST_CASE("oscillation frequency error paths") {
  // delta_p = 0: constant polarization, no extrema
  const auto traj = fig4_trajectory(0.0, 7.0, 401);
  const CavityMoments moments(traj);
  const auto fp = moments.flux(JonesVector::circular_plus());
  const auto fm = moments.flux(JonesVector::circular_minus());
  CHECK_THROWS_AS(oscillation_frequency(traj.times, fp, fm), NumericError);

  std::vector<double> t(100), z(100, 0.0);
  for (int i = 0; i < 100; ++i) t[i] = i;
  CHECK_THROWS_AS(oscillation_frequency(t, z, z), NumericError);
}

TEST_CASE("stored sigma- photon beats at the eigenmode splitting") {
  // Atom parked in the pump-coupled ground state: the cavity cannot
  // reabsorb, so the leaking photon shows the bare two-mode beat.
  SystemConfig cfg;
  cfg.scheme = three_level_lambda();
  cfg.g = mhz_to_angular(4.0);
  cfg.kappa = mhz_to_angular(0.5);
  cfg.delta_p = mhz_to_angular(4.0);
  cfg.cavity_orientation = EigenmodeOrientation::linear_lab();
  cfg.pulse = {0.0, 1e-9, PulseShape::Sin2Amplitude, 0.0};
  cfg.initial_photon = InitialPhoton::AtomicMinus;

  EvolveOptions opts;
  opts.samples = 3001;
  const auto traj = evolve(cfg, default_initial_state(cfg), 0.0, 2e-6, opts);
  const CavityMoments moments(traj);
  const double w = oscillation_frequency(traj.times,
                                         moments.flux(JonesVector::circular_plus()),
                                         moments.flux(JonesVector::circular_minus()));
  CHECK(std::abs(w - cfg.delta_p) / cfg.delta_p < 0.05);
  // any orthogonal pair away from the eigenmodes shows the same beat
  const double w2 = oscillation_frequency(traj.times,
                                          moments.flux(JonesVector::diagonal()),
                                          moments.flux(JonesVector::antidiagonal()));
  CHECK(std::abs(w2 - cfg.delta_p) / cfg.delta_p < 0.05);
}
