#include "bicav/quantum.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace bicav {

HilbertSpace::HilbertSpace(std::vector<HilbertFactor> factors)
    : factors_(std::move(factors)) {
  if (factors_.empty()) throw std::invalid_argument("HilbertSpace: no factors");
  std::set<std::string> seen;
  for (const auto& f : factors_) {
    if (f.dim < 1)
      throw std::invalid_argument("HilbertSpace: factor '" + f.label +
                                  "' has dimension < 1");
    if (!seen.insert(f.label).second)
      throw std::invalid_argument("HilbertSpace: duplicate factor label '" +
                                  f.label + "'");
    total_dim_ *= f.dim;
  }
}

int HilbertSpace::factor_index(std::string_view label) const {
  for (int i = 0; i < factor_count(); ++i)
    if (factors_[i].label == label) return i;
  throw std::invalid_argument("HilbertSpace: unknown factor label '" +
                              std::string(label) + "'");
}

int HilbertSpace::flat_index(const std::vector<int>& indices) const {
  if (static_cast<int>(indices.size()) != factor_count())
    throw std::invalid_argument("HilbertSpace: index count mismatch");
  int flat = 0;
  for (int i = 0; i < factor_count(); ++i) {
    if (indices[i] < 0 || indices[i] >= factors_[i].dim)
      throw std::invalid_argument("HilbertSpace: index out of range for '" +
                                  factors_[i].label + "'");
    flat = flat * factors_[i].dim + indices[i];
  }
  return flat;
}

bool HilbertSpace::operator==(const HilbertSpace& other) const {
  if (factor_count() != other.factor_count()) return false;
  for (int i = 0; i < factor_count(); ++i)
    if (factors_[i].label != other.factors_[i].label ||
        factors_[i].dim != other.factors_[i].dim)
      return false;
  return true;
}

Operator::Operator(HilbertSpace space, Matrix matrix)
    : space_(std::move(space)), matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols())
    throw std::invalid_argument("Operator: matrix not square");
  if (matrix_.rows() != space_.dim())
    throw std::invalid_argument("Operator: matrix dimension does not match space");
}

Operator operator+(const Operator& a, const Operator& b) {
  if (a.space_ != b.space_) throw std::invalid_argument("Operator+: space mismatch");
  return Operator(a.space_, a.matrix_ + b.matrix_);
}

Operator operator-(const Operator& a, const Operator& b) {
  if (a.space_ != b.space_) throw std::invalid_argument("Operator-: space mismatch");
  return Operator(a.space_, a.matrix_ - b.matrix_);
}

Operator operator*(const Operator& a, const Operator& b) {
  if (a.space_ != b.space_) throw std::invalid_argument("Operator*: space mismatch");
  return Operator(a.space_, a.matrix_ * b.matrix_);
}

Operator operator*(Complex s, const Operator& a) {
  return Operator(a.space_, s * a.matrix_);
}

DensityMatrix::DensityMatrix(HilbertSpace space, Matrix matrix)
    : space_(std::move(space)), matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols())
    throw std::invalid_argument("DensityMatrix: matrix not square");
  if (matrix_.rows() != space_.dim())
    throw std::invalid_argument("DensityMatrix: dimension does not match space");
}

DensityMatrix DensityMatrix::pure(const HilbertSpace& space, int basis_index) {
  if (basis_index < 0 || basis_index >= space.dim())
    throw std::invalid_argument("DensityMatrix::pure: basis index out of range");
  Matrix m = Matrix::Zero(space.dim(), space.dim());
  m(basis_index, basis_index) = 1.0;
  return DensityMatrix(space, std::move(m));
}

DensityMatrix DensityMatrix::from_ket(const HilbertSpace& space, const Vector& ket) {
  if (ket.size() != space.dim())
    throw std::invalid_argument("DensityMatrix::from_ket: ket dimension mismatch");
  double n2 = ket.squaredNorm();
  if (n2 <= 0.0)
    throw std::invalid_argument("DensityMatrix::from_ket: zero ket");
  return DensityMatrix(space, (ket * ket.adjoint()) / n2);
}

DensityMatrixCheck DensityMatrix::check() const {
  DensityMatrixCheck c;
  c.hermiticity_error = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  c.trace_error = std::abs(matrix_.trace() - Complex(1.0, 0.0));
  Eigen::SelfAdjointEigenSolver<Matrix> es(
      ((matrix_ + matrix_.adjoint()) / 2.0).eval(), Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  return c;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Operator annihilation(int dim) {
  if (dim < 2) throw std::invalid_argument("annihilation: dim must be >= 2");
  Matrix m = Matrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
  return Operator(HilbertSpace({{"mode", dim}}), std::move(m));
}

Operator embed(const Operator& op, std::string_view target, const HilbertSpace& space) {
  const int k = space.factor_index(target);
  if (op.dim() != space.factor(k).dim)
    throw std::invalid_argument("embed: operator dimension does not match factor '" +
                                std::string(target) + "'");
  int pre = 1, post = 1;
  for (int i = 0; i < k; ++i) pre *= space.factor(i).dim;
  for (int i = k + 1; i < space.factor_count(); ++i) post *= space.factor(i).dim;
  Matrix m = kron(kron(Matrix::Identity(pre, pre), op.matrix()),
                  Matrix::Identity(post, post));
  return Operator(space, std::move(m));
}

Complex expectation(const DensityMatrix& rho, const Operator& op) {
  if (rho.space() != op.space())
    throw std::invalid_argument("expectation: space mismatch");
  // tr(rho*op) without forming the product
  return (rho.matrix().transpose().cwiseProduct(op.matrix())).sum();
}

Operator commutator(const Operator& a, const Operator& b) {
  if (a.space() != b.space())
    throw std::invalid_argument("commutator: space mismatch");
  return Operator(a.space(), a.matrix() * b.matrix() - b.matrix() * a.matrix());
}

}  // namespace bicav
