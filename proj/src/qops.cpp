#include "nmbath/qops.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace nmbath::qops {

namespace {

Index square_root_dim(Index n) {
  const auto d = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (d * d != n) {
    std::ostringstream os;
    os << "length " << n << " is not a perfect square";
    throw DimensionError(os.str());
  }
  return d;
}

void require_square(const Operator& op, const char* what) {
  if (op.rows() != op.cols() || op.rows() == 0) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << op.rows() << "x" << op.cols();
    throw DimensionError(os.str());
  }
}

Matrix kron(const Matrix& a, const Matrix& b) { return Eigen::kroneckerProduct(a, b).eval(); }

void check_finite(const Matrix& m) {
  if (!m.allFinite()) throw OverflowError("matrix exponential overflowed");
}

}  // namespace

Superoperator::Superoperator(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw DimensionError("superoperator matrix must be square");
  dim_ = square_root_dim(m_.rows());
}

Superoperator Superoperator::identity(Index dim) {
  return Superoperator(Matrix::Identity(dim * dim, dim * dim));
}

Superoperator Superoperator::zero(Index dim) {
  return Superoperator(Matrix::Zero(dim * dim, dim * dim));
}

Operator Superoperator::apply(const Operator& op) const {
  if (op.rows() != dim_ || op.cols() != dim_) {
    std::ostringstream os;
    os << "superoperator of dim " << dim_ << " applied to " << op.rows() << "x" << op.cols()
       << " operator";
    throw DimensionError(os.str());
  }
  return devectorize(m_ * vectorize(op));
}

Superoperator Superoperator::operator*(const Superoperator& rhs) const {
  if (dim_ != rhs.dim_) throw DimensionError("superoperator dimension mismatch");
  return Superoperator(m_ * rhs.m_);
}

Superoperator Superoperator::operator+(const Superoperator& rhs) const {
  if (dim_ != rhs.dim_) throw DimensionError("superoperator dimension mismatch");
  return Superoperator(m_ + rhs.m_);
}

Superoperator Superoperator::operator-(const Superoperator& rhs) const {
  if (dim_ != rhs.dim_) throw DimensionError("superoperator dimension mismatch");
  return Superoperator(m_ - rhs.m_);
}

Superoperator operator*(Complex s, const Superoperator& op) { return Superoperator(s * op.m_); }
Superoperator operator*(double s, const Superoperator& op) { return Superoperator(s * op.m_); }

Vector vectorize(const Operator& op) {
  require_square(op, "vectorize");
  return Eigen::Map<const Vector>(op.data(), op.size());
}

Operator devectorize(const Vector& v) {
  const Index d = square_root_dim(v.size());
  if (d == 0) throw DimensionError("devectorize: empty vector");
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

Operator sigma_x() {
  Operator m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Operator sigma_y() {
  Operator m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

Operator sigma_z() {
  Operator m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Operator sigma_minus() {
  Operator m(2, 2);
  m << 0, 0, 1, 0;
  return m;
}

Operator identity_operator(Index dim) { return Operator::Identity(dim, dim); }

double hermiticity_defect(const Operator& op) {
  require_square(op, "hermiticity_defect");
  return (op - op.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const Operator& op, double tol) { return hermiticity_defect(op) <= tol; }

double min_eigenvalue(const Operator& op) {
  require_square(op, "min_eigenvalue");
  const Matrix herm = 0.5 * (op + op.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void validate_density_matrix(const Operator& op) {
  require_square(op, "density matrix");
  if (const double defect = hermiticity_defect(op); defect > 1e-12) {
    std::ostringstream os;
    os << "density matrix is not Hermitian (defect " << defect << ")";
    throw NotHermitianError(os.str());
  }
  const Complex tr = op.trace();
  if (std::abs(tr - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "density matrix trace is " << tr.real() << " (expected 1)";
    throw std::invalid_argument(os.str());
  }
  if (const double lo = min_eigenvalue(op); lo < -1e-10) {
    std::ostringstream os;
    os << "density matrix has negative eigenvalue " << lo;
    throw std::invalid_argument(os.str());
  }
}

Superoperator hamiltonian_liouvillian(const Operator& h) {
  require_square(h, "hamiltonian_liouvillian");
  if (const double defect = hermiticity_defect(h); defect > 1e-12) {
    std::ostringstream os;
    os << "Hamiltonian is not Hermitian (defect " << defect << ")";
    throw NotHermitianError(os.str());
  }
  const Index d = h.rows();
  const Matrix id = Matrix::Identity(d, d);
  const Complex minus_i(0.0, -1.0);
  return Superoperator(minus_i * (kron(id, h) - kron(h.transpose(), id)));
}

Superoperator lindblad_dissipator(std::span<const Operator> jumps, Index dim) {
  const Matrix id = Matrix::Identity(dim, dim);
  Matrix out = Matrix::Zero(dim * dim, dim * dim);
  for (const auto& v : jumps) {
    if (v.rows() != dim || v.cols() != dim) throw DimensionError("jump operator dimension mismatch");
    const Matrix vdv = v.adjoint() * v;
    out += kron(v.conjugate(), v) - 0.5 * kron(id, vdv) - 0.5 * kron(vdv.transpose(), id);
  }
  return Superoperator(std::move(out));
}

double jump_normalization_defect(std::span<const Operator> jumps) {
  if (jumps.empty()) return 1.0;
  const Index d = jumps.front().rows();
  Matrix sum = -Matrix::Identity(d, d);
  for (const auto& v : jumps) {
    if (v.rows() != d || v.cols() != d) throw DimensionError("jump operator dimension mismatch");
    sum += v.adjoint() * v;
  }
  return sum.cwiseAbs().maxCoeff();
}

Superoperator jump_superoperator(std::span<const Operator> jumps) {
  if (const double defect = jump_normalization_defect(jumps); defect > 1e-10) {
    std::ostringstream os;
    os << "jump operators are not normalized: ||sum V^dag V - I|| = " << defect;
    throw NormalizationError(os.str(), defect);
  }
  const Index d = jumps.front().rows();
  Matrix out = Matrix::Zero(d * d, d * d);
  for (const auto& v : jumps) out += kron(v.conjugate(), v);
  return Superoperator(std::move(out));
}

Propagator::Propagator(const Superoperator& gen) : gen_(gen) {
  Eigen::ComplexEigenSolver<Matrix> es(gen.matrix(), true);
  if (es.info() != Eigen::Success) return;
  Eigen::JacobiSVD<Matrix> svd(es.eigenvectors());
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  if (smallest <= 0.0 || sv(0) / smallest > kSpectralConditionLimit) return;
  vecs_ = es.eigenvectors();
  vecs_inv_ = vecs_.inverse();
  vals_ = es.eigenvalues();
  spectral_ = true;
}

Superoperator Propagator::at(double t) const {
  if (t < 0.0) throw std::invalid_argument("propagate: negative time");
  Matrix out;
  if (t == 0.0) {
    out = Matrix::Identity(gen_.matrix().rows(), gen_.matrix().cols());
  } else if (spectral_) {
    const Vector phases = (t * vals_).array().exp().matrix();
    out = vecs_ * phases.asDiagonal() * vecs_inv_;
  } else {
    out = (t * gen_.matrix()).exp();
  }
  check_finite(out);
  return Superoperator(std::move(out));
}

Superoperator propagate(const Superoperator& gen, double t) { return Propagator(gen).at(t); }

Superoperator resolvent(const Superoperator& gen, Complex u) {
  const Index n = gen.matrix().rows();
  const Matrix a = u * Matrix::Identity(n, n) - gen.matrix();
  Eigen::FullPivLU<Matrix> lu(a);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  lu.setThreshold(1e-13);
  if (!lu.isInvertible() || lu.rcond() < 1e-14 || lu.maxPivot() < 1e-13 * scale) {
    std::ostringstream os;
    os << "resolvent is singular at u = " << u;
    throw SingularResolventError(os.str(), u);
  }
  return Superoperator(lu.inverse());
}

Matrix choi_matrix(const Superoperator& map) {
  const Index d = map.dim();
  Matrix choi = Matrix::Zero(d * d, d * d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < d; ++i) {
      // map(E_ij) is column i + j*d of the superoperator matrix.
      const Vector col = map.matrix().col(i + j * d);
      choi.block(i * d, j * d, d, d) = Eigen::Map<const Matrix>(col.data(), d, d);
    }
  }
  return choi;
}

Eigen::VectorXd choi_spectrum(const Superoperator& map) {
  const Matrix c = choi_matrix(map);
  const Matrix herm = 0.5 * (c + c.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double choi_min_eigenvalue(const Superoperator& map) { return choi_spectrum(map).minCoeff(); }

}  // namespace nmbath::qops
