#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "bicav/errors.hpp"
#include "bicav/lineshape.hpp"

using namespace bicav;

namespace {

TransmissionScan synth_scan(const DoubleLorentzianParams& p, double lo, double hi,
                            int n, double noise_fraction = 0.0,
                            unsigned seed = 0) {
  TransmissionScan scan;
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  double peak = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1.0);
    scan.detuning_mhz.push_back(x);
    scan.signal.push_back(double_lorentzian(p, x));
    peak = std::max(peak, scan.signal.back());
  }
  if (noise_fraction > 0.0) {
    for (auto& s : scan.signal)
      s = std::max(0.0, s + noise_fraction * peak * dist(rng));
  }
  return scan;
}

DoubleLorentzianParams paper_params() {
  DoubleLorentzianParams p;
  p.centers_mhz = {-3.471 / 2.0, 3.471 / 2.0};
  p.fwhm_mhz = 3.543;
  p.amplitudes = {1.0, 0.92};
  p.baseline = 0.013;
  return p;
}

}  // namespace

TEST_CASE("double lorentzian forward model") {
  DoubleLorentzianParams p;
  p.centers_mhz = {-20.0, 20.0};
  p.fwhm_mhz = 2.0;
  p.amplitudes = {1.0, 0.5};
  p.baseline = 0.1;

  // at a well-separated center the model is close to baseline + amplitude
  CHECK(double_lorentzian(p, -20.0) == doctest::Approx(1.1).epsilon(1e-3));
  CHECK(double_lorentzian(p, 20.0) == doctest::Approx(0.6).epsilon(1e-3));
  // half maximum at center +- fwhm/2
  CHECK(double_lorentzian(p, -21.0) == doctest::Approx(0.1 + 0.5).epsilon(2e-3));
  CHECK(double_lorentzian(p, -19.0) == doctest::Approx(0.1 + 0.5).epsilon(2e-3));

  // degenerate centers merge into a single peak of summed amplitude
  p.centers_mhz = {0.0, 0.0};
  CHECK(double_lorentzian(p, 0.0) == doctest::Approx(0.1 + 1.5));

  p.fwhm_mhz = -1.0;
  CHECK_THROWS_AS(double_lorentzian(p, std::vector<double>{0.0}),
                  std::invalid_argument);
}

TEST_CASE("noiseless fit recovers the generating parameters to 0.1%") {
  const auto truth = paper_params();
  const auto scan = synth_scan(truth, -12.0, 12.0, 481);
  const auto fit = fit_transmission(scan);
  CHECK(fit.converged);
  CHECK(std::abs(fit.splitting_mhz - 3.471) / 3.471 < 1e-3);
  CHECK(std::abs(fit.params.fwhm_mhz - 3.543) / 3.543 < 1e-3);
  CHECK(std::abs(fit.params.amplitudes[0] - 1.0) < 1e-3);
  CHECK(std::abs(fit.params.amplitudes[1] - 0.92) < 1e-3);
  CHECK(std::abs(fit.params.baseline - 0.013) < 1e-3);
  CHECK(fit.residual_norm < 1e-6);
  CHECK(fit.covariance.rows() == 6);
}

TEST_CASE("fit starts from the auto guess and never worsens the residual") {
  const auto truth = paper_params();
  const auto scan = synth_scan(truth, -12.0, 12.0, 301, 0.02, 99);
  const auto fit = fit_transmission(scan);
  CHECK(fit.converged);

  // residual at the solution does not exceed the residual of the data about
  // its mean (a fortiori of any accepted iterate)
  double mean = 0.0;
  for (double s : scan.signal) mean += s;
  mean /= scan.signal.size();
  double about_mean = 0.0;
  for (double s : scan.signal) about_mean += (s - mean) * (s - mean);
  CHECK(fit.residual_norm * fit.residual_norm < about_mean);
}

TEST_CASE("noisy splitting recovery: 2% noise, median within 1%") {
  const auto truth = paper_params();
  std::vector<double> errors;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const auto scan = synth_scan(truth, -12.0, 12.0, 481, 0.02, seed);
    const auto fit = fit_transmission(scan);
    if (fit.converged)
      errors.push_back(std::abs(fit.splitting_mhz - 3.471) / 3.471);
  }
  REQUIRE(errors.size() >= 18);
  std::sort(errors.begin(), errors.end());
  CHECK(errors[errors.size() / 2] < 0.01);
}

TEST_CASE("fit is invariant under uniform signal rescaling") {
  const auto truth = paper_params();
  auto scan = synth_scan(truth, -12.0, 12.0, 301, 0.01, 7);
  const auto fit1 = fit_transmission(scan);
  for (auto& s : scan.signal) s *= 37.5;
  const auto fit2 = fit_transmission(scan);
  CHECK(std::abs(fit2.splitting_mhz - fit1.splitting_mhz) < 1e-6 * fit1.splitting_mhz);
  CHECK(std::abs(fit2.params.fwhm_mhz - fit1.params.fwhm_mhz) <
        1e-6 * fit1.params.fwhm_mhz);
  CHECK(fit2.params.amplitudes[0] ==
        doctest::Approx(37.5 * fit1.params.amplitudes[0]).epsilon(1e-6));
  CHECK(fit2.params.baseline ==
        doctest::Approx(37.5 * fit1.params.baseline).epsilon(1e-4));
}

TEST_CASE("round trip on random parameter draws") {
  std::mt19937 rng(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    DoubleLorentzianParams p;
    const double fwhm = 1.0 + 4.0 * u(rng);
    const double sep = fwhm * (0.6 + 2.0 * u(rng));  // separation > 0.5 fwhm
    const double mid = 8.0 * (u(rng) - 0.5);
    p.centers_mhz = {mid - sep / 2.0, mid + sep / 2.0};
    p.fwhm_mhz = fwhm;
    p.amplitudes = {0.5 + u(rng), 0.5 + u(rng)};
    p.baseline = 0.2 * u(rng);
    const auto scan = synth_scan(p, -25.0, 25.0, 601);
    const auto fit = fit_transmission(scan);
    CHECK(fit.converged);
    CHECK(std::abs(fit.splitting_mhz - sep) / sep < 0.01);
    CHECK(std::abs(fit.params.fwhm_mhz - fwhm) / fwhm < 0.01);
  }
}

TEST_CASE("independent peak widths behind the flag") {
  DoubleLorentzianParams p = paper_params();
  p.fwhm2_mhz = 5.0;
  const auto scan = synth_scan(p, -15.0, 15.0, 601);
  FitOptions opts;
  opts.shared_fwhm = false;
  opts.initial_guess = paper_params();
  opts.initial_guess->fwhm2_mhz = 4.0;
  const auto fit = fit_transmission(scan, opts);
  CHECK(fit.converged);
  REQUIRE(fit.params.fwhm2_mhz.has_value());
  CHECK(std::abs(fit.params.fwhm_mhz - 3.543) / 3.543 < 0.01);
  CHECK(std::abs(*fit.params.fwhm2_mhz - 5.0) / 5.0 < 0.01);
}

TEST_CASE("fit input validation") {
  TransmissionScan tiny;
  for (int i = 0; i < 5; ++i) {
    tiny.detuning_mhz.push_back(i);
    tiny.signal.push_back(1.0);
  }
  CHECK_THROWS_AS(fit_transmission(tiny), std::invalid_argument);

  TransmissionScan flat;
  for (int i = 0; i < 40; ++i) {
    flat.detuning_mhz.push_back(i);
    flat.signal.push_back(2.0);
  }
  CHECK_THROWS_AS(fit_transmission(flat), NumericError);
}

TEST_CASE("scan ingestion") {
  std::istringstream good("detuning_mhz,transmission\n-1.0,0.2\n0.0,0.9\n1.0,0.3\n");
  const auto res = ingest_scan(good);
  CHECK(res.scan.detuning_mhz.size() == 3);
  CHECK(res.warnings.empty());

  std::istringstream unsorted("detuning_mhz,transmission\n1.0,0.3\n-1.0,0.2\n0.0,0.9\n");
  const auto res2 = ingest_scan(unsorted);
  REQUIRE(res2.warnings.size() == 1);
  CHECK(res2.warnings[0].find("sorted") != std::string::npos);
  CHECK(std::is_sorted(res2.scan.detuning_mhz.begin(), res2.scan.detuning_mhz.end()));

  std::istringstream bad_signal(
      "detuning_mhz,transmission\n-1.0,0.2\n0.0,-0.1\n1.0,0.3\n");
  const auto res3 = ingest_scan(bad_signal);
  CHECK(res3.scan.detuning_mhz.size() == 2);
  REQUIRE(res3.warnings.size() == 1);
  CHECK(res3.warnings[0].find("line 3") != std::string::npos);

  std::istringstream nan_row("detuning_mhz,transmission\n-1.0,nan\n0.0,1.0\n1.0,0.5\n");
  CHECK(ingest_scan(nan_row).scan.signal.size() == 2);

  std::istringstream empty("");
  CHECK_THROWS_AS(ingest_scan(empty), ConfigError);
  std::istringstream header_only("detuning_mhz,transmission\n");
  CHECK_THROWS_AS(ingest_scan(header_only), ConfigError);
  std::istringstream bad_header("freq,counts\n1,2\n");
  CHECK_THROWS_AS(ingest_scan(bad_header), ConfigError);

  std::istringstream garbage("detuning_mhz,transmission\n1.0,0.2\nx,y\n");
  try {
    ingest_scan(garbage);
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}
