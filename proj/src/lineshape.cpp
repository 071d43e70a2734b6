#include "bicav/lineshape.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "bicav/errors.hpp"

namespace bicav {

double double_lorentzian(const DoubleLorentzianParams& p, double x) {
  const double h1 = p.fwhm_mhz / 2.0;
  const double h2 = (p.fwhm2_mhz ? *p.fwhm2_mhz : p.fwhm_mhz) / 2.0;
  const double d1 = x - p.centers_mhz[0];
  const double d2 = x - p.centers_mhz[1];
  return p.baseline + p.amplitudes[0] * h1 * h1 / (d1 * d1 + h1 * h1) +
         p.amplitudes[1] * h2 * h2 / (d2 * d2 + h2 * h2);
}

std::vector<double> double_lorentzian(const DoubleLorentzianParams& p,
                                      const std::vector<double>& xs) {
  if (p.fwhm_mhz <= 0.0 || (p.fwhm2_mhz && *p.fwhm2_mhz <= 0.0))
    throw std::invalid_argument("double_lorentzian: fwhm must be positive");
  std::vector<double> out(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) out[i] = double_lorentzian(p, xs[i]);
  return out;
}

namespace {

void validate_scan(const TransmissionScan& scan) {
  if (scan.detuning_mhz.size() != scan.signal.size())
    throw std::invalid_argument("TransmissionScan: length mismatch");
  for (size_t i = 1; i < scan.detuning_mhz.size(); ++i)
    if (!(scan.detuning_mhz[i] > scan.detuning_mhz[i - 1]))
      throw std::invalid_argument("TransmissionScan: detuning not strictly increasing");
}

// Parameter vector layout: [c1, c2, fwhm, a1, a2, baseline] (+ fwhm2).
struct Problem {
  const std::vector<double>& x;
  const std::vector<double>& y;
  bool shared_fwhm;

  int n_params() const { return shared_fwhm ? 6 : 7; }

  DoubleLorentzianParams unpack(const Eigen::VectorXd& p) const {
    DoubleLorentzianParams out;
    out.centers_mhz = {p[0], p[1]};
    out.fwhm_mhz = std::abs(p[2]);
    out.amplitudes = {p[3], p[4]};
    out.baseline = p[5];
    if (!shared_fwhm) out.fwhm2_mhz = std::abs(p[6]);
    return out;
  }

  void residuals(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    const auto params = unpack(p);
    for (size_t i = 0; i < x.size(); ++i)
      r[static_cast<int>(i)] = double_lorentzian(params, x[i]) - y[i];
  }

  void jacobian(const Eigen::VectorXd& p, Eigen::MatrixXd& jac) const {
    const double h1 = std::abs(p[2]) / 2.0;
    const double h2 = (shared_fwhm ? h1 : std::abs(p[6]) / 2.0);
    for (size_t k = 0; k < x.size(); ++k) {
      const int i = static_cast<int>(k);
      const double d1 = x[k] - p[0];
      const double d2 = x[k] - p[1];
      const double den1 = d1 * d1 + h1 * h1;
      const double den2 = d2 * d2 + h2 * h2;
      const double l1 = h1 * h1 / den1;
      const double l2 = h2 * h2 / den2;
      jac(i, 0) = p[3] * h1 * h1 * 2.0 * d1 / (den1 * den1);
      jac(i, 1) = p[4] * h2 * h2 * 2.0 * d2 / (den2 * den2);
      // d/d fwhm = (1/2) d/dh ; dL/dh = 2 A h d^2 / den^2
      const double dh1 = p[3] * h1 * d1 * d1 / (den1 * den1);
      jac(i, 2) = dh1;
      jac(i, 3) = l1;
      jac(i, 4) = l2;
      jac(i, 5) = 1.0;
      if (!shared_fwhm) {
        jac(i, 6) = p[4] * h2 * d2 * d2 / (den2 * den2);
      } else {
        jac(i, 2) += p[4] * h2 * d2 * d2 / (den2 * den2);
      }
    }
  }
};

DoubleLorentzianParams auto_guess(const TransmissionScan& scan) {
  const auto& x = scan.detuning_mhz;
  const auto& y = scan.signal;
  const size_t n = x.size();
  const double y_min = *std::min_element(y.begin(), y.end());
  const double y_max = *std::max_element(y.begin(), y.end());
  if (!(y_max > y_min))
    throw NumericError("fit_transmission: degenerate data (constant signal)");

  // Width of the dominant blob from its half-maximum crossings.
  const size_t im = static_cast<size_t>(
      std::max_element(y.begin(), y.end()) - y.begin());
  const double half = y_min + (y_max - y_min) / 2.0;
  size_t il = im, ir = im;
  while (il > 0 && y[il] > half) --il;
  while (ir + 1 < n && y[ir] > half) ++ir;
  const double blob_width =
      std::max(x[ir] - x[il], (x.back() - x.front()) / (n - 1.0));

  // Two largest local maxima of a lightly smoothed copy (raw samples would
  // hand noise spikes to the optimizer), separated by at least half a blob.
  const int w = std::max<int>(1, static_cast<int>(n) / 60);
  std::vector<double> ys(n);
  for (size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    int cnt = 0;
    for (int j = -w; j <= w; ++j) {
      const long k = static_cast<long>(i) + j;
      if (k < 0 || k >= static_cast<long>(n)) continue;
      acc += y[static_cast<size_t>(k)];
      ++cnt;
    }
    ys[i] = acc / cnt;
  }
  std::vector<size_t> peaks;
  for (size_t i = 1; i + 1 < n; ++i)
    if (ys[i] >= ys[i - 1] && ys[i] > ys[i + 1]) peaks.push_back(i);
  std::sort(peaks.begin(), peaks.end(),
            [&](size_t a, size_t b) { return ys[a] > ys[b]; });
  size_t i1 = peaks.empty() ? im : peaks[0];
  size_t i2 = i1;
  const double min_sep = std::max(3.0 * (x.back() - x.front()) / (n - 1.0),
                                  blob_width / 4.0);
  for (size_t k = 1; k < peaks.size(); ++k) {
    if (std::abs(x[peaks[k]] - x[i1]) >= min_sep) {
      i2 = peaks[k];
      break;
    }
  }
  DoubleLorentzianParams g;
  g.baseline = y_min;
  if (i2 == i1) {
    // Single visible blob: either degenerate centers or an unresolved pair.
    g.centers_mhz = {x[i1] - blob_width / 4.0, x[i1] + blob_width / 4.0};
    g.fwhm_mhz = 0.7 * blob_width;
    g.amplitudes = {(y[i1] - y_min) * 0.6, (y[i1] - y_min) * 0.6};
    return g;
  }
  g.centers_mhz = {std::min(x[i1], x[i2]), std::max(x[i1], x[i2])};
  g.fwhm_mhz = std::min(blob_width, std::abs(x[i2] - x[i1]));
  g.amplitudes = {y[std::min(i1, i2)] - y_min, y[std::max(i1, i2)] - y_min};
  return g;
}

}  // namespace

DoubleLorentzianFit fit_transmission(const TransmissionScan& scan,
                                     const FitOptions& opts) {
  validate_scan(scan);
  const int n = static_cast<int>(scan.detuning_mhz.size());
  if (n < 8)
    throw std::invalid_argument("fit_transmission: need at least 8 data points");

  Problem prob{scan.detuning_mhz, scan.signal, opts.shared_fwhm};
  const int m = prob.n_params();

  auto pack = [&](const DoubleLorentzianParams& g) {
    Eigen::VectorXd q(m);
    q << g.centers_mhz[0], g.centers_mhz[1], g.fwhm_mhz, g.amplitudes[0],
        g.amplitudes[1], g.baseline;
    if (!opts.shared_fwhm) q[6] = g.fwhm2_mhz.value_or(g.fwhm_mhz);
    return q;
  };

  // Scale parameters by data ranges for conditioning.
  const double x_range =
      std::max(scan.detuning_mhz.back() - scan.detuning_mhz.front(), 1e-12);
  const double y_lo = *std::min_element(scan.signal.begin(), scan.signal.end());
  const double y_hi = *std::max_element(scan.signal.begin(), scan.signal.end());
  const double y_range = std::max(y_hi - y_lo, 1e-300);
  Eigen::VectorXd scale(m);
  scale << x_range, x_range, x_range, y_range, y_range, y_range;
  if (m == 7) scale[6] = x_range;

  // Box constraints keep the optimizer out of the degenerate far-tail
  // regime (a runaway peak imitating a baseline): centers near the data
  // window, widths between the grid step and the window, amplitudes >= 0.
  const double x_lo = scan.detuning_mhz.front(), x_hi = scan.detuning_mhz.back();
  const double step_min = (x_hi - x_lo) / (n - 1.0);
  auto in_bounds = [&](const Eigen::VectorXd& q) {
    const double margin = 0.5 * (x_hi - x_lo);
    for (int i : {0, 1})
      if (q[i] < x_lo - margin || q[i] > x_hi + margin) return false;
    if (std::abs(q[2]) < step_min / 4.0 || std::abs(q[2]) > 4.0 * (x_hi - x_lo))
      return false;
    if (q[3] < 0.0 || q[4] < 0.0) return false;
    if (q.size() == 7 &&
        (std::abs(q[6]) < step_min / 4.0 || std::abs(q[6]) > 4.0 * (x_hi - x_lo)))
      return false;
    return true;
  };

  struct LmRun {
    Eigen::VectorXd p;
    double cost = 0.0;
    bool converged = false;
    int iterations = 0;
  };

  auto run_lm = [&](Eigen::VectorXd p0) {
    Eigen::VectorXd r(n), r_try(n), g_vec(m);
    Eigen::MatrixXd jac(n, m);
    LmRun run;
    run.p = std::move(p0);
    prob.residuals(run.p, r);
    run.cost = r.squaredNorm();

    double lambda = 1e-3;
    for (; run.iterations < opts.max_iterations; ++run.iterations) {
      prob.jacobian(run.p, jac);
      // Work on the scaled problem: p_s = p / scale, J_s = J * diag(scale).
      Eigen::MatrixXd js = jac * scale.asDiagonal();
      Eigen::MatrixXd a = js.transpose() * js;
      g_vec = js.transpose() * r;

      if (g_vec.cwiseAbs().maxCoeff() <= opts.gradient_tol * y_range) {
        run.converged = true;
        break;
      }

      bool stepped = false;
      for (int attempt = 0; attempt < 50; ++attempt) {
        Eigen::MatrixXd a_damped = a;
        a_damped.diagonal() += lambda * a.diagonal().cwiseMax(1e-30);
        Eigen::VectorXd delta_s = a_damped.ldlt().solve(-g_vec);
        Eigen::VectorXd p_try = run.p + scale.asDiagonal() * delta_s;
        if (!in_bounds(p_try)) {
          lambda *= 4.0;
          if (lambda > 1e14) break;
          continue;
        }
        prob.residuals(p_try, r_try);
        const double cost_try = r_try.squaredNorm();
        if (cost_try < run.cost) {  // accepted steps never raise the residual
          run.p = p_try;
          r = r_try;
          const double improvement =
              (run.cost - cost_try) / std::max(run.cost, 1e-300);
          run.cost = cost_try;
          lambda = std::max(lambda / 3.0, 1e-14);
          stepped = true;
          if (improvement < 1e-14) run.converged = true;
          break;
        }
        lambda *= 4.0;
        if (lambda > 1e14) break;
      }
      if (!stepped) {
        // No damping level reduces the residual: numerical minimum reached.
        run.converged = true;
        break;
      }
      if (run.converged) break;
    }
    return run;
  };

  // Multi-start: the spec guess from the two largest local maxima, plus two
  // structured alternatives covering unresolved doubles. Keep the lowest
  // final cost. A user-supplied guess is used alone.
  std::vector<DoubleLorentzianParams> starts;
  if (opts.initial_guess) {
    starts.push_back(*opts.initial_guess);
  } else {
    const auto base = auto_guess(scan);
    starts.push_back(base);
    const double mid = (base.centers_mhz[0] + base.centers_mhz[1]) / 2.0;
    const double w = std::max(base.fwhm_mhz, step_min);
    DoubleLorentzianParams wide = base;
    wide.centers_mhz = {mid - 0.6 * w, mid + 0.6 * w};
    wide.fwhm_mhz = 0.8 * w;
    starts.push_back(wide);
    DoubleLorentzianParams narrow = base;
    narrow.centers_mhz = {mid - 0.15 * w, mid + 0.15 * w};
    narrow.fwhm_mhz = 1.1 * w;
    starts.push_back(narrow);
  }

  LmRun best;
  bool have_best = false;
  for (const auto& g : starts) {
    const LmRun run = run_lm(pack(g));
    if (!have_best || run.cost < best.cost) {
      best = run;
      have_best = true;
    }
  }
  const Eigen::VectorXd p = best.p;
  const double cost = best.cost;
  const bool converged = best.converged;
  const int iter = best.iterations;

  DoubleLorentzianFit fit;
  fit.params = prob.unpack(p);
  // Report centers in ascending order.
  if (fit.params.centers_mhz[0] > fit.params.centers_mhz[1]) {
    std::swap(fit.params.centers_mhz[0], fit.params.centers_mhz[1]);
    std::swap(fit.params.amplitudes[0], fit.params.amplitudes[1]);
    if (fit.params.fwhm2_mhz)
      std::swap(fit.params.fwhm_mhz, *fit.params.fwhm2_mhz);
  }
  fit.splitting_mhz = std::abs(fit.params.centers_mhz[1] - fit.params.centers_mhz[0]);
  fit.converged = converged;
  fit.iterations = iter;
  fit.residual_norm = std::sqrt(cost);
  fit.parameter_names = {"center1_mhz", "center2_mhz", "fwhm_mhz",
                         "amplitude1", "amplitude2", "baseline"};
  if (m == 7) fit.parameter_names.push_back("fwhm2_mhz");

  Eigen::MatrixXd jac(n, m);
  prob.jacobian(p, jac);
  Eigen::MatrixXd jtj = jac.transpose() * jac;
  const double dof = std::max(1, n - m);
  const double sigma2 = cost / dof;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  fit.covariance = lu.isInvertible()
                       ? Eigen::MatrixXd(sigma2 * lu.inverse())
                       : Eigen::MatrixXd::Constant(m, m,
                                                   std::numeric_limits<double>::quiet_NaN());
  return fit;
}

IngestResult ingest_scan(std::istream& in) {
  IngestResult out;
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line))
    throw ConfigError("ingest_scan: empty file");
  ++line_no;
  // tolerate whitespace and \r
  auto strip = [](std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(),
                           [](char c) { return c == ' ' || c == '\r' || c == '\t'; }),
            s.end());
    return s;
  };
  if (strip(line) != "detuning_mhz,transmission")
    throw ConfigError("ingest_scan: line 1: expected header 'detuning_mhz,transmission'");

  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = strip(line);
    if (s.empty()) continue;
    const auto comma = s.find(',');
    if (comma == std::string::npos)
      throw ConfigError("ingest_scan: line " + std::to_string(line_no) +
                        ": expected two comma-separated columns");
    double det = 0.0, sig = 0.0;
    try {
      size_t used1 = 0, used2 = 0;
      det = std::stod(s.substr(0, comma), &used1);
      sig = std::stod(s.substr(comma + 1), &used2);
      if (used1 != comma || used2 != s.size() - comma - 1)
        throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("ingest_scan: line " + std::to_string(line_no) +
                        ": could not parse numeric row '" + s + "'");
    }
    if (std::isnan(det) || std::isnan(sig)) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": rejected NaN row");
      continue;
    }
    if (sig < 0.0) {
      out.warnings.push_back("line " + std::to_string(line_no) +
                             ": rejected negative signal " + std::to_string(sig));
      continue;
    }
    rows.push_back({det, sig});
  }
  if (rows.empty()) throw ConfigError("ingest_scan: no data rows");

  if (!std::is_sorted(rows.begin(), rows.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; })) {
    out.warnings.push_back("rows were not sorted by detuning; sorted on ingest");
    std::sort(rows.begin(), rows.end());
  }
  for (const auto& [det, sig] : rows) {
    out.scan.detuning_mhz.push_back(det);
    out.scan.signal.push_back(sig);
  }
  validate_scan(out.scan);
  return out;
}

IngestResult ingest_scan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("ingest_scan: cannot open '" + path.string() + "'");
  return ingest_scan(in);
}

}  // namespace bicav
