#pragma once

#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

#include "bicav/quantum.hpp"

namespace bicav {

// Polarization bases used throughout:
//   Atomic - circular {|+>, |->} matching sigma+- transitions
//   Cavity - birefringent eigenmodes {|X>, |Y>}
//   Lab    - linear {|H>, |V>}
enum class Basis { Atomic, Cavity, Lab };

std::string to_string(Basis b);
Basis basis_from_string(std::string_view s);

enum class CircularPol { Plus, Minus };

// Orientation parameters (alpha, phi1, phi2) of a unitary basis rotation
//   [[ e^{i phi1} a, -e^{-i phi2} sqrt(1-a^2) ],
//    [ e^{i phi2} sqrt(1-a^2), e^{-i phi1} a ]].
// We store the cavity->lab rotation in this form, as measured in cavity
// transmission, and derive every other mapping by composition/adjoint.
struct EigenmodeOrientation {
  double alpha = 1.0;
  double phi1 = 0.0;  // radians
  double phi2 = 0.0;  // radians

  // Cavity eigenmodes identical to the lab basis: X=H, Y=V.
  static EigenmodeOrientation linear_lab();
  // Cavity eigenmodes aligned with the atomic circular basis: X=|+>, Y=|->.
  static EigenmodeOrientation circular_aligned();
};

class JonesVector {
 public:
  JonesVector(Eigen::Vector2cd components, Basis basis);

  const Eigen::Vector2cd& components() const { return v_; }
  Basis basis() const { return basis_; }

  // Rephased so the first component with magnitude > 1e-12 is real >= 0.
  JonesVector phase_normalized() const;

  static JonesVector horizontal();
  static JonesVector vertical();
  static JonesVector circular_plus();   // (|H> + i|V>)/sqrt(2), lab basis
  static JonesVector circular_minus();  // (|H> - i|V>)/sqrt(2), lab basis
  static JonesVector diagonal();        // (|H> + |V>)/sqrt(2)
  static JonesVector antidiagonal();    // (|H> - |V>)/sqrt(2)

 private:
  Eigen::Vector2cd v_;
  Basis basis_;
};

// Unitary 2x2 basis rotation or optical element. from/to record which basis
// the matrix consumes and produces.
class JonesMatrix {
 public:
  JonesMatrix(Eigen::Matrix2cd entries, Basis from, Basis to);

  const Eigen::Matrix2cd& entries() const { return m_; }
  Basis from_basis() const { return from_; }
  Basis to_basis() const { return to_; }

  JonesMatrix adjoint() const { return JonesMatrix(m_.adjoint(), to_, from_); }

  JonesVector operator*(const JonesVector& v) const;
  JonesMatrix operator*(const JonesMatrix& rhs) const;  // composition

  double unitarity_error() const;

 private:
  Eigen::Matrix2cd m_;
  Basis from_, to_;
};

// The generic rotation above, mapping `from` to `to`.
JonesMatrix rotation_matrix(const EigenmodeOrientation& o, Basis from, Basis to);

// Fixed atomic->lab rotation: |+-> = (|H> +- i|V>)/sqrt(2).
JonesMatrix atomic_to_lab();

// Atomic->cavity rotation composed as R_LC * R_AL from the measured
// cavity->lab orientation.
JonesMatrix atomic_to_cavity(const EigenmodeOrientation& cavity_to_lab);

// Coefficients (c_X, c_Y) such that the creation operator for an atomic
// circular mode decomposes as a_pol^dag = c_X a_X^dag + c_Y a_Y^dag.
std::pair<Complex, Complex> map_creation_operator(CircularPol pol,
                                                  const JonesMatrix& atomic_to_cavity);

// Quarter-wave plate at fast-axis angle phi (radians), lab basis:
// R(phi) diag(1, i) R(-phi). Exactly pi-periodic in phi.
JonesMatrix quarter_wave_plate(double angle_rad);

// Projectors onto lab |H> and |V> behind the PBS. Not unitary, hence plain
// matrices rather than JonesMatrix.
std::pair<Eigen::Matrix2cd, Eigen::Matrix2cd> pbs_projectors();

}  // namespace bicav
