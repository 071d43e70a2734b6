#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace bicav {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// One tensor factor of the state space, e.g. ("atom", 3) or ("cavity_x", 2).
struct HilbertFactor {
  std::string label;
  int dim = 0;
};

// Ordered tensor product of finite-dimensional factors. Index convention is
// row-major over factors: for factors (a, b, c) the basis state |i,j,k> has
// flat index (i*dim_b + j)*dim_c + k.
class HilbertSpace {
 public:
  explicit HilbertSpace(std::vector<HilbertFactor> factors);

  int dim() const { return total_dim_; }
  int factor_count() const { return static_cast<int>(factors_.size()); }
  const HilbertFactor& factor(int i) const { return factors_.at(i); }
  const std::vector<HilbertFactor>& factors() const { return factors_; }

  // Index of the factor with the given label; throws on unknown label.
  int factor_index(std::string_view label) const;

  // Flat basis index from per-factor indices.
  int flat_index(const std::vector<int>& indices) const;

  bool operator==(const HilbertSpace& other) const;
  bool operator!=(const HilbertSpace& other) const { return !(*this == other); }

 private:
  std::vector<HilbertFactor> factors_;
  int total_dim_ = 1;
};

// Dense operator tied to a HilbertSpace. Immutable after construction.
class Operator {
 public:
  Operator(HilbertSpace space, Matrix matrix);

  const HilbertSpace& space() const { return space_; }
  const Matrix& matrix() const { return matrix_; }
  int dim() const { return space_.dim(); }

  Operator adjoint() const { return Operator(space_, matrix_.adjoint()); }

  friend Operator operator+(const Operator& a, const Operator& b);
  friend Operator operator-(const Operator& a, const Operator& b);
  friend Operator operator*(const Operator& a, const Operator& b);
  friend Operator operator*(Complex s, const Operator& a);

 private:
  HilbertSpace space_;
  Matrix matrix_;
};

// Health report for a density matrix; see DensityMatrix::check().
struct DensityMatrixCheck {
  double hermiticity_error = 0.0;  // max |rho - rho^dag|
  double trace_error = 0.0;        // |tr(rho) - 1|
  double min_eigenvalue = 0.0;
  bool ok(double herm_tol = 1e-8, double trace_tol = 1e-6,
          double eig_floor = -1e-8) const {
    return hermiticity_error < herm_tol && trace_error < trace_tol &&
           min_eigenvalue >= eig_floor;
  }
};

class DensityMatrix {
 public:
  DensityMatrix(HilbertSpace space, Matrix matrix);

  static DensityMatrix pure(const HilbertSpace& space, int basis_index);
  static DensityMatrix from_ket(const HilbertSpace& space, const Vector& ket);

  const HilbertSpace& space() const { return space_; }
  const Matrix& matrix() const { return matrix_; }
  int dim() const { return space_.dim(); }

  double trace_real() const { return matrix_.trace().real(); }
  double purity() const { return (matrix_ * matrix_).trace().real(); }

  // Full physicality check (Hermiticity, unit trace, spectrum >= -eps).
  DensityMatrixCheck check() const;

 private:
  HilbertSpace space_;
  Matrix matrix_;
};

// Kronecker product, row-major factor convention matching HilbertSpace.
Matrix kron(const Matrix& a, const Matrix& b);

// Lowering operator on a single Fock factor: entry (n-1, n) = sqrt(n).
// Returned on a standalone one-factor space labelled "mode".
Operator annihilation(int dim);

// Embed a one-factor operator into `space` at the factor named `target`,
// acting as identity on all other factors.
Operator embed(const Operator& op, std::string_view target, const HilbertSpace& space);

// tr(rho * op); spaces must match.
Complex expectation(const DensityMatrix& rho, const Operator& op);

Operator commutator(const Operator& a, const Operator& b);

}  // namespace bicav
