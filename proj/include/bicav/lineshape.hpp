#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bicav {

// Cavity transmission scan: detuning axis in ordinary MHz, signal in
// arbitrary units. Detunings must be strictly increasing.
struct TransmissionScan {
  std::vector<double> detuning_mhz;
  std::vector<double> signal;
};

struct DoubleLorentzianParams {
  std::array<double, 2> centers_mhz{};
  double fwhm_mhz = 1.0;
  std::array<double, 2> amplitudes{};
  double baseline = 0.0;
  // Width of the second peak when fitting with independent widths.
  std::optional<double> fwhm2_mhz;
};

// baseline + sum_i A_i (G/2)^2 / ((x - c_i)^2 + (G/2)^2)
double double_lorentzian(const DoubleLorentzianParams& p, double detuning_mhz);
std::vector<double> double_lorentzian(const DoubleLorentzianParams& p,
                                      const std::vector<double>& detuning_mhz);

struct DoubleLorentzianFit {
  DoubleLorentzianParams params;
  double splitting_mhz = 0.0;  // |c2 - c1|
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;            // sqrt(sum r^2) at the solution
  Eigen::MatrixXd covariance;            // parameter covariance estimate
  std::vector<std::string> parameter_names;
};

struct FitOptions {
  int max_iterations = 200;
  double gradient_tol = 1e-10;  // on the internally scaled problem
  bool shared_fwhm = true;
  std::optional<DoubleLorentzianParams> initial_guess;
};

// Nonlinear least squares via Levenberg-Marquardt with analytic Jacobian and
// range-scaled parameters. The initial guess, when not supplied, comes from
// the two largest locally-maximal samples.
DoubleLorentzianFit fit_transmission(const TransmissionScan& scan,
                                     const FitOptions& opts = {});

struct IngestResult {
  TransmissionScan scan;
  std::vector<std::string> warnings;  // row-indexed diagnostics
};

// Two-column CSV with header "detuning_mhz,transmission". Rows with NaN or
// negative signal are rejected with a diagnostic; unsorted rows are sorted
// with a warning.
IngestResult ingest_scan(std::istream& in);
IngestResult ingest_scan(const std::filesystem::path& path);

}  // namespace bicav
