#include "bicav/polarization.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bicav {

namespace {
constexpr double kUnitTol = 1e-12;
const Complex kI{0.0, 1.0};
}  // namespace

std::string to_string(Basis b) {
  switch (b) {
    case Basis::Atomic: return "atomic";
    case Basis::Cavity: return "cavity";
    case Basis::Lab: return "lab";
  }
  return "?";
}

Basis basis_from_string(std::string_view s) {
  if (s == "atomic") return Basis::Atomic;
  if (s == "cavity") return Basis::Cavity;
  if (s == "lab") return Basis::Lab;
  throw std::invalid_argument("unknown basis label '" + std::string(s) + "'");
}

EigenmodeOrientation EigenmodeOrientation::linear_lab() { return {1.0, 0.0, 0.0}; }

EigenmodeOrientation EigenmodeOrientation::circular_aligned() {
  return {1.0 / std::sqrt(2.0), 0.0, std::numbers::pi / 2.0};
}

JonesVector::JonesVector(Eigen::Vector2cd components, Basis basis)
    : v_(std::move(components)), basis_(basis) {
  if (std::abs(v_.norm() - 1.0) > kUnitTol)
    throw std::invalid_argument("JonesVector: not normalized");
}

JonesVector JonesVector::phase_normalized() const {
  Eigen::Vector2cd v = v_;
  for (int i = 0; i < 2; ++i) {
    if (std::abs(v[i]) > 1e-12) {
      v *= std::conj(v[i]) / std::abs(v[i]);
      break;
    }
  }
  return JonesVector(v, basis_);
}

JonesVector JonesVector::horizontal() {
  return JonesVector(Eigen::Vector2cd(1, 0), Basis::Lab);
}
JonesVector JonesVector::vertical() {
  return JonesVector(Eigen::Vector2cd(0, 1), Basis::Lab);
}
JonesVector JonesVector::circular_plus() {
  return JonesVector(Eigen::Vector2cd(1, kI) / std::sqrt(2.0), Basis::Lab);
}
JonesVector JonesVector::circular_minus() {
  return JonesVector(Eigen::Vector2cd(1, -kI) / std::sqrt(2.0), Basis::Lab);
}
JonesVector JonesVector::diagonal() {
  return JonesVector(Eigen::Vector2cd(1, 1) / std::sqrt(2.0), Basis::Lab);
}
JonesVector JonesVector::antidiagonal() {
  return JonesVector(Eigen::Vector2cd(1, -1) / std::sqrt(2.0), Basis::Lab);
}

JonesMatrix::JonesMatrix(Eigen::Matrix2cd entries, Basis from, Basis to)
    : m_(std::move(entries)), from_(from), to_(to) {
  if (unitarity_error() > kUnitTol)
    throw std::invalid_argument("JonesMatrix: not unitary");
}

double JonesMatrix::unitarity_error() const {
  return (m_.adjoint() * m_ - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
}

JonesVector JonesMatrix::operator*(const JonesVector& v) const {
  if (v.basis() != from_)
    throw std::invalid_argument("JonesMatrix: vector basis mismatch");
  return JonesVector(m_ * v.components(), to_);
}

JonesMatrix JonesMatrix::operator*(const JonesMatrix& rhs) const {
  if (rhs.to_basis() != from_)
    throw std::invalid_argument("JonesMatrix: composition basis mismatch");
  return JonesMatrix(m_ * rhs.entries(), rhs.from_basis(), to_);
}

JonesMatrix rotation_matrix(const EigenmodeOrientation& o, Basis from, Basis to) {
  if (!(o.alpha >= 0.0 && o.alpha <= 1.0))
    throw std::invalid_argument("rotation_matrix: alpha outside [0,1]");
  if (!std::isfinite(o.phi1) || !std::isfinite(o.phi2))
    throw std::invalid_argument("rotation_matrix: non-finite angle");
  const double b = std::sqrt(1.0 - o.alpha * o.alpha);
  Eigen::Matrix2cd m;
  m << std::exp(kI * o.phi1) * o.alpha, -std::exp(-kI * o.phi2) * b,
       std::exp(kI * o.phi2) * b,        std::exp(-kI * o.phi1) * o.alpha;
  return JonesMatrix(m, from, to);
}

JonesMatrix atomic_to_lab() {
  Eigen::Matrix2cd m;
  m << 1, kI, kI, 1;
  return JonesMatrix(m / std::sqrt(2.0), Basis::Atomic, Basis::Lab);
}

JonesMatrix atomic_to_cavity(const EigenmodeOrientation& cavity_to_lab) {
  JonesMatrix r_cl = rotation_matrix(cavity_to_lab, Basis::Cavity, Basis::Lab);
  return r_cl.adjoint() * atomic_to_lab();
}

std::pair<Complex, Complex> map_creation_operator(CircularPol pol,
                                                  const JonesMatrix& atomic_to_cavity) {
  if (atomic_to_cavity.from_basis() != Basis::Atomic ||
      atomic_to_cavity.to_basis() != Basis::Cavity)
    throw std::invalid_argument("map_creation_operator: rotation must map atomic->cavity");
  const int col = (pol == CircularPol::Plus) ? 0 : 1;
  return {atomic_to_cavity.entries()(0, col), atomic_to_cavity.entries()(1, col)};
}

JonesMatrix quarter_wave_plate(double angle_rad) {
  // Fold the fast-axis angle into (-pi/2, pi/2]; the plate has period pi.
  const double a = std::remainder(angle_rad, std::numbers::pi);
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix2cd rot, ret;
  rot << c, -s, s, c;
  ret << 1, 0, 0, kI;
  return JonesMatrix(rot * ret * rot.transpose(), Basis::Lab, Basis::Lab);
}

std::pair<Eigen::Matrix2cd, Eigen::Matrix2cd> pbs_projectors() {
  Eigen::Matrix2cd ph = Eigen::Matrix2cd::Zero(), pv = Eigen::Matrix2cd::Zero();
  ph(0, 0) = 1.0;
  pv(1, 1) = 1.0;
  return {ph, pv};
}

}  // namespace bicav
