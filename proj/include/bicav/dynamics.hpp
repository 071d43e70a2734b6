#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bicav/atom.hpp"
#include "bicav/polarization.hpp"
#include "bicav/quantum.hpp"

namespace bicav {

enum class PulseShape { Sin2Amplitude, Sin4Amplitude, Constant };

std::string to_string(PulseShape s);
PulseShape pulse_shape_from_string(std::string_view s);

// Pump envelope. Sin2Amplitude is the default reading of a "sin^4 intensity"
// pulse: Rabi amplitude ~ sin^2(pi t/T), so intensity ~ sin^4.
struct PulseProfile {
  double peak_rabi = 0.0;  // rad/s
  double duration = 0.0;   // s
  PulseShape shape = PulseShape::Sin2Amplitude;
  double detuning = 0.0;   // rad/s, added to the pump frequency
};

double pulse_amplitude(const PulseProfile& p, double t);

// Optional photon preloaded into the cavity at t=0 (polarization given in
// the atomic or cavity basis).
enum class InitialPhoton { None, AtomicPlus, AtomicMinus, ModeX, ModeY };

struct SystemConfig {
  LevelScheme scheme = three_level_lambda();
  double g = 0.0;      // atom-cavity coupling rate, rad/s
  double kappa = 0.0;  // cavity field decay rate, rad/s (linewidth FWHM = 2 kappa)
  double gamma = 0.0;  // atomic amplitude decay rate, rad/s
  double delta_p = 0.0;  // eigenmode splitting w_X - w_Y, rad/s (any sign)
  EigenmodeOrientation cavity_orientation = EigenmodeOrientation::linear_lab();
  // Mean eigenmode frequency relative to the Raman-resonant position.
  double cavity_center_detuning = 0.0;
  // Pump frequency offset relative to the Raman-resonant value.
  double omega_L = 0.0;
  PulseProfile pulse;
  int fock_truncation = 2;
  std::string initial_state;  // level label; empty = scheme's Raman initial
  InitialPhoton initial_photon = InitialPhoton::None;
  // Analyzer calibration: internal plate angle = requested angle + offset.
  double qwp_axis_offset = 0.0;  // radians

  HilbertSpace space() const;
  void validate() const;
};

// Model-frame frequencies resolved from the scheme's Raman endpoints:
// pump = E(hub) + raman_offset - E(initial) + omega_L + pulse.detuning,
// cavity mean = nominal Raman-resonant value + cavity_center_detuning,
// eigenmodes at mean +- delta_p/2.
struct ModelFrequencies {
  double pump = 0.0;
  double cavity_x = 0.0;
  double cavity_y = 0.0;
};

ModelFrequencies resolve_frequencies(const SystemConfig& cfg);

// Time series of rotating-frame density matrices on a sample grid.
struct Trajectory {
  std::vector<double> times;
  std::vector<Matrix> states;
  SystemConfig config;

  DensityMatrix density(int i) const {
    return DensityMatrix(config.space(), states.at(i));
  }
};

// Full lab-frame Hamiltonian at time t (hbar = 1): bare energies plus pump
// and cavity couplings, the pump carrying its explicit e^{-i w_L t} phase.
Operator build_hamiltonian(const SystemConfig& cfg, double t);

// Precomputed rotating-frame Hamiltonian H'(t) = U^dag H U - H0 with
// U = exp(-i H0 t), H0 = diag(H). Zero diagonal; couplings carry phase
// factors at the bare energy differences.
class RotatingFrameHamiltonian {
 public:
  explicit RotatingFrameHamiltonian(const SystemConfig& cfg);

  int dim() const { return static_cast<int>(bare_.size()); }
  const Eigen::VectorXd& bare_energies() const { return bare_; }
  const ModelFrequencies& frequencies() const { return freqs_; }

  void evaluate_into(double t, Matrix& out) const;
  Matrix operator()(double t) const;

 private:
  struct Term {
    int row, col;
    Complex coeff;
    double phase_freq;
    bool pump;  // scaled by Omega(t)/2 when set
  };
  Eigen::VectorXd bare_;
  std::vector<Term> terms_;
  ModelFrequencies freqs_;
  PulseProfile pulse_;
};

using TimeOperator = std::function<Operator(double)>;

// Generic rotating-frame transform of a time-dependent Hamiltonian family.
// H0 is taken from the diagonal of h and must be time-independent (checked
// at the probe times); the returned family has zero diagonal.
TimeOperator to_rotating_frame(TimeOperator h, const std::vector<double>& probe_times);

// U^dag(t) op U(t) with U = exp(-i h0 t); h0 must be diagonal.
Operator frame_rotate_operator(const Operator& op, const Operator& h0, double t);

// {sqrt(2 kappa) a_X, sqrt(2 kappa) a_Y} plus sqrt(2 gamma_eu) |s_u><s_e| for
// every decay channel, gamma_eu = gamma * branching.
std::vector<Operator> collapse_operators(const SystemConfig& cfg);

// Master-equation right-hand side with the standard dissipator
// normalization: drho/dt = -i[H, rho] + sum_n (C_n rho C_n^dag
// - 1/2 {C_n^dag C_n, rho}).
DensityMatrix lindblad_rhs(const DensityMatrix& rho, const Operator& h,
                           const std::vector<Operator>& collapse);

struct EvolveOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double dt_max = 0.0;  // 0 = no explicit cap beyond the sample grid
  int samples = 0;      // 0 = auto from span and delta_p
};

// Adaptive Dormand-Prince 5(4) integration of the master equation in the
// rotating frame, sampled exactly on a uniform grid over [t_begin, t_end].
Trajectory evolve(const SystemConfig& cfg, const DensityMatrix& rho0,
                  double t_begin, double t_end, const EvolveOptions& opts = {});

// Initial state from the config: named atomic level (default the scheme's
// Raman initial), cavities in vacuum unless a photon is preloaded.
DensityMatrix default_initial_state(const SystemConfig& cfg);

// Vectorized Liouvillian superoperator for constant H and collapse set.
Matrix liouvillian_matrix(const Matrix& h, const std::vector<Matrix>& collapse);

// rho(t) by applying the exponential of the Liouvillian; brute-force oracle
// for the integrator.
Matrix liouvillian_expm_apply(const Matrix& h, const std::vector<Matrix>& collapse,
                              const Matrix& rho0, double t);

// Config-level oracle; requires the rotating-frame Hamiltonian to be
// time-independent (else NumericError).
DensityMatrix liouvillian_expm_oracle(const SystemConfig& cfg,
                                      const DensityMatrix& rho0, double t);

}  // namespace bicav
