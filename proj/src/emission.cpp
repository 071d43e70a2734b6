#include "bicav/emission.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bicav/errors.hpp"
#include "bicav/units.hpp"

namespace bicav {

namespace {
const Complex kI{0.0, 1.0};
Complex cis(double x) { return {std::cos(x), std::sin(x)}; }
}  // namespace

DetectionPolarization DetectionPolarization::from_label(std::string_view label) {
  if (label == "H") return {JonesVector::horizontal(), "H"};
  if (label == "V") return {JonesVector::vertical(), "V"};
  if (label == "D") return {JonesVector::diagonal(), "D"};
  if (label == "A") return {JonesVector::antidiagonal(), "A"};
  if (label == "+" || label == "plus") return {JonesVector::circular_plus(), "+"};
  if (label == "-" || label == "minus") return {JonesVector::circular_minus(), "-"};
  throw std::invalid_argument("unknown detection polarization '" + std::string(label) + "'");
}

CavityMoments::CavityMoments(const Trajectory& traj) {
  const auto& cfg = traj.config;
  const auto freqs = resolve_frequencies(cfg);
  wx_ = freqs.cavity_x;
  wy_ = freqs.cavity_y;
  kappa_ = cfg.kappa;
  lab_to_cavity_ =
      rotation_matrix(cfg.cavity_orientation, Basis::Cavity, Basis::Lab)
          .adjoint()
          .entries();
  times_ = traj.times;

  const auto space = cfg.space();
  const Matrix ax = embed(annihilation(cfg.fock_truncation), "cavity_x", space).matrix();
  const Matrix ay = embed(annihilation(cfg.fock_truncation), "cavity_y", space).matrix();
  const Matrix nx_op = ax.adjoint() * ax;
  const Matrix ny_op = ay.adjoint() * ay;
  const Matrix cross_op = ax.adjoint() * ay;

  const auto n = traj.states.size();
  nx_.resize(n);
  ny_.resize(n);
  cross_.resize(n);
  auto tr_prod = [](const Matrix& rho, const Matrix& op) {
    return (rho.transpose().cwiseProduct(op)).sum();
  };
  for (size_t i = 0; i < n; ++i) {
    nx_[i] = tr_prod(traj.states[i], nx_op).real();
    ny_[i] = tr_prod(traj.states[i], ny_op).real();
    cross_[i] = tr_prod(traj.states[i], cross_op);
  }
}

std::vector<double> CavityMoments::flux(const JonesVector& pol_lab) const {
  if (pol_lab.basis() != Basis::Lab)
    throw std::invalid_argument("CavityMoments::flux: polarization must be in the lab basis");
  const Eigen::Vector2cd u = lab_to_cavity_ * pol_lab.components();
  const Complex cx = std::conj(u[0]), cy = std::conj(u[1]);
  std::vector<double> out(times_.size());
  for (size_t i = 0; i < times_.size(); ++i) {
    // a_pol(t) = cx e^{-i wx t} a_X + cy e^{-i wy t} a_Y in the rotating frame
    const Complex cross_term =
        std::conj(cx) * cy * cis((wx_ - wy_) * times_[i]) * cross_[i];
    out[i] = 2.0 * kappa_ *
             (std::norm(cx) * nx_[i] + std::norm(cy) * ny_[i] + 2.0 * cross_term.real());
  }
  return out;
}

std::vector<double> CavityMoments::total_flux() const {
  std::vector<double> out(times_.size());
  for (size_t i = 0; i < times_.size(); ++i)
    out[i] = 2.0 * kappa_ * (nx_[i] + ny_[i]);
  return out;
}

Operator detection_mode_operator(const DetectionPolarization& pol,
                                 const SystemConfig& cfg, double t) {
  const auto space = cfg.space();
  const Eigen::Matrix2cd r_lc =
      rotation_matrix(cfg.cavity_orientation, Basis::Cavity, Basis::Lab)
          .adjoint()
          .entries();
  const Eigen::Vector2cd u = r_lc * pol.jones.components();
  const Operator ax = embed(annihilation(cfg.fock_truncation), "cavity_x", space);
  const Operator ay = embed(annihilation(cfg.fock_truncation), "cavity_y", space);
  const Operator a_pol = std::conj(u[0]) * ax + std::conj(u[1]) * ay;

  const RotatingFrameHamiltonian model(cfg);
  Matrix h0 = Matrix::Zero(space.dim(), space.dim());
  h0.diagonal() = model.bare_energies().cast<Complex>();
  return frame_rotate_operator(a_pol, Operator(space, std::move(h0)), t);
}

std::vector<double> emission_flux(const Trajectory& traj,
                                  const DetectionPolarization& pol) {
  return CavityMoments(traj).flux(pol.jones);
}

WavepacketRecord analyzer_wavepackets(const Trajectory& traj, double qwp_angle_deg) {
  const auto& cfg = traj.config;
  const double plate = deg_to_rad(qwp_angle_deg) + cfg.qwp_axis_offset;
  const JonesMatrix qwp = quarter_wave_plate(plate);
  // A photon that exits PBS port i was, before the plate, in mode QWP^dag e_i.
  const Eigen::Matrix2cd back = qwp.entries().adjoint();

  const CavityMoments moments(traj);
  WavepacketRecord rec;
  rec.times = traj.times;
  rec.qwp_angle_deg = qwp_angle_deg;
  rec.flux_port1 = moments.flux(JonesVector(back.col(0), Basis::Lab));
  rec.flux_port2 = moments.flux(JonesVector(back.col(1), Basis::Lab));
  rec.efficiency = integrate_simpson(rec.times, rec.flux_port1) +
                   integrate_simpson(rec.times, rec.flux_port2);
  return rec;
}

std::vector<RoutingPoint> routing_curve(const SystemConfig& cfg,
                                        const std::vector<double>& angles_deg,
                                        bool birefringence_on) {
  if (angles_deg.empty())
    throw std::invalid_argument("routing_curve: empty angle list");

  SystemConfig run_cfg = cfg;
  if (!birefringence_on) {
    run_cfg.delta_p = 0.0;
    run_cfg.cavity_orientation = EigenmodeOrientation::circular_aligned();
  }
  if (run_cfg.kappa <= 0.0)
    throw NumericError("routing_curve: kappa must be positive for emission");

  // Pulse plus enough ring-down that the residual cavity population is
  // negligible (intensity decays at 2 kappa).
  const double span = run_cfg.pulse.duration + 9.2 / (2.0 * run_cfg.kappa);
  const Trajectory traj =
      evolve(run_cfg, default_initial_state(run_cfg), 0.0, span);
  const CavityMoments moments(traj);

  std::vector<RoutingPoint> out;
  out.reserve(angles_deg.size());
  for (double angle : angles_deg) {
    const double plate = deg_to_rad(angle) + run_cfg.qwp_axis_offset;
    const Eigen::Matrix2cd back = quarter_wave_plate(plate).entries().adjoint();
    const double p1 = integrate_simpson(
        traj.times, moments.flux(JonesVector(back.col(0), Basis::Lab)));
    const double p2 = integrate_simpson(
        traj.times, moments.flux(JonesVector(back.col(1), Basis::Lab)));
    const double tot = p1 + p2;
    if (!(tot > 0.0))
      throw NumericError("routing_curve: no emission; port fractions undefined");
    out.push_back({angle, p1 / tot, p2 / tot});
  }
  return out;
}

double emission_efficiency(const Trajectory& traj) {
  const CavityMoments moments(traj);
  return integrate_simpson(traj.times, moments.total_flux());
}

double oscillation_frequency(const std::vector<double>& times,
                             const std::vector<double>& flux_a,
                             const std::vector<double>& flux_b) {
  const size_t n = times.size();
  if (flux_a.size() != n || flux_b.size() != n || n < 8)
    throw std::invalid_argument("oscillation_frequency: inconsistent or short series");

  // Normalized polarization signal; masked where the wavepacket carries no
  // flux. The normalization removes the wavepacket envelope, so for a freely
  // decaying field the extrema of s(t) are spaced by exactly one beat period.
  std::vector<double> s(n);
  std::vector<bool> mask(n);
  double tot_max = 0.0;
  for (size_t i = 0; i < n; ++i) tot_max = std::max(tot_max, flux_a[i] + flux_b[i]);
  if (tot_max <= 0.0)
    throw NumericError("oscillation_frequency: no flux in either mode");
  for (size_t i = 0; i < n; ++i) {
    const double tot = flux_a[i] + flux_b[i];
    mask[i] = tot > 1e-2 * tot_max;
    s[i] = mask[i] ? (flux_a[i] - flux_b[i]) / tot : 0.0;
  }

  double amp = 0.0;
  for (size_t i = 0; i < n; ++i)
    if (mask[i]) amp = std::max(amp, std::abs(s[i]));
  const double floor = 0.25 * amp;

  // Strict local extrema against a +-w window, refined by parabolic
  // interpolation; only well inside the masked region.
  const int w = 4;
  auto refine = [&](size_t i) {
    const double y0 = s[i - 1], y1 = s[i], y2 = s[i + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    double shift = 0.0;
    if (std::abs(denom) > 1e-300) shift = 0.5 * (y0 - y2) / denom;
    shift = std::clamp(shift, -0.5, 0.5);
    return times[i] + shift * (times[1] - times[0]);
  };

  std::vector<double> t_max, t_min;
  for (size_t i = w; i + w < n; ++i) {
    bool in_mask = true;
    for (size_t j = i - w; j <= i + w; ++j) in_mask = in_mask && mask[j];
    if (!in_mask) continue;
    bool is_max = true, is_min = true;
    for (size_t j = i - w; j <= i + w; ++j) {
      if (j == i) continue;
      is_max = is_max && s[i] > s[j];
      is_min = is_min && s[i] < s[j];
    }
    if (is_max && s[i] > floor) t_max.push_back(refine(i));
    if (is_min && s[i] < -floor) t_min.push_back(refine(i));
  }

  double spacing_sum = 0.0;
  int spacing_count = 0;
  for (const auto& ext : {t_max, t_min}) {
    for (size_t i = 1; i < ext.size(); ++i) {
      spacing_sum += ext[i] - ext[i - 1];
      ++spacing_count;
    }
  }
  if (spacing_count == 0)
    throw NumericError("oscillation_frequency: insufficient oscillations in series");
  return two_pi * spacing_count / spacing_sum;
}

double integrate_simpson(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (y.size() != n || n < 2)
    throw std::invalid_argument("integrate_simpson: need >= 2 samples");
  const double h = x[1] - x[0];
  size_t m = n;
  double tail = 0.0;
  if (n % 2 == 0) {  // trapezoid closure for the last interval
    tail = 0.5 * h * (y[n - 2] + y[n - 1]);
    m = n - 1;
  }
  double acc = y[0] + y[m - 1];
  for (size_t i = 1; i + 1 < m; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * y[i];
  return acc * h / 3.0 + tail;
}

}  // namespace bicav
