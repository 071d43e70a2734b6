#pragma once

#include <string>
#include <vector>

#include "bicav/dynamics.hpp"
#include "bicav/polarization.hpp"
#include "bicav/quantum.hpp"

namespace bicav {

// A detection mode behind the analyzer, expressed in the lab basis.
struct DetectionPolarization {
  JonesVector jones;
  std::string label;

  static DetectionPolarization from_label(std::string_view label);
};

// Time-resolved port fluxes behind QWP(angle)+PBS, plus the integrated
// emission probability of the run. Fluxes are probability densities per
// second; the two port integrals sum to the total emission probability.
struct WavepacketRecord {
  std::vector<double> times;
  std::vector<double> flux_port1;  // lab H port
  std::vector<double> flux_port2;  // lab V port
  double qwp_angle_deg = 0.0;
  double efficiency = 0.0;
};

struct RoutingPoint {
  double angle_deg = 0.0;
  double fraction_port1 = 0.0;
  double fraction_port2 = 0.0;
};

// Second moments of the cavity field along a trajectory: <n_X>, <n_Y> and
// the cross coherence <a_X^dag a_Y>. Any polarization flux is a linear
// combination of these three series, which keeps per-angle analyses cheap.
class CavityMoments {
 public:
  explicit CavityMoments(const Trajectory& traj);

  const std::vector<double>& times() const { return times_; }
  // flux(t) = 2 kappa <a_pol^dag(t) a_pol(t)> for a lab-basis polarization
  std::vector<double> flux(const JonesVector& pol_lab) const;
  std::vector<double> total_flux() const;

 private:
  std::vector<double> times_;
  std::vector<double> nx_, ny_;
  std::vector<Complex> cross_;
  double wx_ = 0.0, wy_ = 0.0, kappa_ = 0.0;
  Eigen::Matrix2cd lab_to_cavity_;
};

// a_pol = c_X a_X + c_Y a_Y rotated into the simulation frame at time t,
// with (c_X, c_Y) the conjugated cavity-basis components of `pol`.
Operator detection_mode_operator(const DetectionPolarization& pol,
                                 const SystemConfig& cfg, double t);

// 2 kappa <a_pol^dag a_pol> on the trajectory grid.
std::vector<double> emission_flux(const Trajectory& traj,
                                  const DetectionPolarization& pol);

// Both PBS-port wavepackets behind a quarter-wave plate at the requested
// angle (degrees, external convention; the config's axis offset is applied
// internally). Detection modes are back-propagated: mode_i = QWP^dag e_i.
WavepacketRecord analyzer_wavepackets(const Trajectory& traj, double qwp_angle_deg);

// Integrated port fractions versus waveplate angle. With birefringence_on =
// false the run uses delta_p = 0 and a cavity basis aligned to the atomic
// circular basis. Throws NumericError when nothing is emitted.
std::vector<RoutingPoint> routing_curve(const SystemConfig& cfg,
                                        const std::vector<double>& angles_deg,
                                        bool birefringence_on);

// eta = integral of 2 kappa (<n_X> + <n_Y>) dt over the trajectory.
double emission_efficiency(const Trajectory& traj);

// Dominant beat frequency (rad/s) of the normalized flux difference between
// two orthogonal detection modes, from the spacing of its extrema. Throws
// NumericError{insufficient oscillations} when fewer than two extrema of the
// same kind are found.
double oscillation_frequency(const std::vector<double>& times,
                             const std::vector<double>& flux_a,
                             const std::vector<double>& flux_b);

// Composite Simpson on a uniform grid (trapezoid closure for an even
// interval count).
double integrate_simpson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace bicav
