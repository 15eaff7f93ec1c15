#pragma once

// Dense complex linear algebra kernel: resolvents, rank/nullspace decisions
// with explicit tolerances, matrix exponential, subspace arithmetic, and the
// eigendecomposition oracle used for independent verification.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace opcalc::numlin {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

struct ToleranceConfig {
  double rank_rel_tol = 1e-9;
  double solve_rel_tol = 1e-12;
  double quad_rel_tol = 1e-9;
  double norm_abs_floor = 1e-300;
};

class SingularShift : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotDiagonalizable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool is_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

inline void require_square_finite(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + ": matrix not square");
  if (!is_finite(m)) throw std::invalid_argument(std::string(what) + ": matrix has NaN/Inf entries");
}

/// Spectral norm (largest singular value).
inline double op_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

/// (zI - A)^{-1}. Throws SingularShift when z is numerically in the spectrum.
inline ComplexMatrix resolvent(const ComplexMatrix& A, Complex z, const ToleranceConfig& tol = {}) {
  require_square_finite(A, "resolvent");
  const Eigen::Index n = A.rows();
  ComplexMatrix shifted = -A;
  shifted.diagonal().array() += z;
  Eigen::PartialPivLU<ComplexMatrix> lu(shifted);
  const double rc = lu.rcond();
  if (!(rc > tol.solve_rel_tol * 1e-2)) throw SingularShift("resolvent: shift is numerically in the spectrum");
  ComplexMatrix R = lu.solve(ComplexMatrix::Identity(n, n));
  if (!is_finite(R)) throw SingularShift("resolvent: solve produced non-finite entries");
  return R;
}

struct Subspace {
  Eigen::Index ambient_dim = 0;
  ComplexMatrix basis;  // orthonormal columns; zero columns = trivial subspace

  Eigen::Index dim() const { return basis.cols(); }

  static Subspace full(Eigen::Index n) { return {n, ComplexMatrix::Identity(n, n)}; }
  static Subspace zero(Eigen::Index n) { return {n, ComplexMatrix(n, 0)}; }
};

/// Orthonormal basis of the column span of `cols` (rank via singular values).
inline Subspace column_span(const ComplexMatrix& cols, double rank_rel_tol = 1e-9) {
  if (cols.cols() == 0) return Subspace::zero(cols.rows());
  Eigen::JacobiSVD<ComplexMatrix> svd(cols, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double cut = rank_rel_tol * std::max(s(0), 0.0);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cut && s(r) > 0) ++r;
  return {cols.rows(), svd.matrixU().leftCols(r)};
}

/// Orthonormal basis of {x : ||Mx|| <= rank_rel_tol * sigma_max * ||x||}.
inline Subspace nullspace(const ComplexMatrix& M, const ToleranceConfig& tol = {}) {
  if (!is_finite(M)) throw std::invalid_argument("nullspace: matrix has NaN/Inf entries");
  const Eigen::Index n = M.cols();
  if (M.rows() == 0 || n == 0) return Subspace::full(n);
  Eigen::JacobiSVD<ComplexMatrix> svd(M, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  if (smax <= tol.norm_abs_floor) return Subspace::full(n);
  const double cut = tol.rank_rel_tol * smax;
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cut) ++rank;
  const Eigen::Index k = n - rank;
  return {n, svd.matrixV().rightCols(k)};
}

struct EigDecomposition {
  ComplexVector values;
  ComplexMatrix vectors;
  double vector_cond = 0;
};

/// Eigendecomposition restricted to numerically diagonalizable inputs.
/// Serves as the independent oracle f(A) = V f(L) V^{-1}.
inline EigDecomposition eig_oracle(const ComplexMatrix& A, double cond_limit = 1e8) {
  require_square_finite(A, "eig_oracle");
  Eigen::ComplexEigenSolver<ComplexMatrix> es(A, true);
  if (es.info() != Eigen::Success) throw NotDiagonalizable("eig_oracle: eigensolver failed");
  EigDecomposition d;
  d.values = es.eigenvalues();
  d.vectors = es.eigenvectors();
  Eigen::JacobiSVD<ComplexMatrix> svd(d.vectors);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin <= 0) throw NotDiagonalizable("eig_oracle: defective eigenvector matrix");
  d.vector_cond = s(0) / smin;
  if (d.vector_cond > cond_limit) throw NotDiagonalizable("eig_oracle: eigenvector condition number exceeds bound");
  const double scale = std::max(op_norm(A), 1e-30);
  const double resid = op_norm(A * d.vectors - d.vectors * d.values.asDiagonal().toDenseMatrix());
  if (resid > 1e-10 * scale * std::max(1.0, d.vector_cond * 1e-2))
    throw NotDiagonalizable("eig_oracle: eigenpair residual too large");
  return d;
}

/// V f(L) V^{-1} for a scalar function applied to the eigenvalues.
inline ComplexMatrix apply_eig_oracle(const EigDecomposition& d, const std::function<Complex(Complex)>& f) {
  ComplexVector fv(d.values.size());
  for (Eigen::Index i = 0; i < d.values.size(); ++i) fv(i) = f(d.values(i));
  ComplexMatrix VF = d.vectors * fv.asDiagonal();
  // M = VF * V^{-1}  computed as  (V^T \ VF^T)^T
  ComplexMatrix Mt = d.vectors.transpose().partialPivLu().solve(VF.transpose());
  return Mt.transpose();
}

/// Scaling-and-squaring Pade exponential (Higham's degree 3/5/7/9/13 scheme),
/// independent of the eigendecomposition path.
inline ComplexMatrix matrix_exp(const ComplexMatrix& A) {
  require_square_finite(A, "matrix_exp");
  const Eigen::Index n = A.rows();
  const ComplexMatrix I = ComplexMatrix::Identity(n, n);
  const double nrm = A.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm

  auto pade = [&](const ComplexMatrix& M, const std::vector<double>& b) {
    const Eigen::Index deg = static_cast<Eigen::Index>(b.size()) - 1;
    ComplexMatrix M2 = M * M;
    ComplexMatrix U, V;
    if (deg == 13) {
      ComplexMatrix M4 = M2 * M2;
      ComplexMatrix M6 = M4 * M2;
      U = M * (M6 * (b[13] * M6 + b[11] * M4 + b[9] * M2) + b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * I);
      V = M6 * (b[12] * M6 + b[10] * M4 + b[8] * M2) + b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * I;
    } else {
      ComplexMatrix P = I;
      U = b[1] * I;
      V = b[0] * I;
      for (Eigen::Index k = 2; k <= deg; k += 2) {
        P = P * M2;
        V += b[k] * P;
        if (k + 1 <= deg) U += b[k + 1] * P;
      }
      U = M * U;
    }
    return ComplexMatrix((V - U).partialPivLu().solve(V + U));
  };

  static const std::vector<double> b3 = {120, 60, 12, 1};
  static const std::vector<double> b5 = {30240, 15120, 3360, 420, 30, 1};
  static const std::vector<double> b7 = {17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1};
  static const std::vector<double> b9 = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                         2162160., 110880., 3960., 90., 1.};
  static const std::vector<double> b13 = {64764752532480000., 32382376266240000., 7771770303897600.,
                                          1187353796428800.,  129060195264000.,   10559470521600.,
                                          670442572800.,      33522128640.,       1323241920.,
                                          40840800.,          960960.,            16380.,
                                          182.,               1.};

  if (nrm <= 1.495585217958292e-2) return pade(A, b3);
  if (nrm <= 2.539398330063230e-1) return pade(A, b5);
  if (nrm <= 9.504178996162932e-1) return pade(A, b7);
  if (nrm <= 2.097847961257068e0) return pade(A, b9);

  const double theta13 = 5.371920351148152;
  int squarings = std::max(0, static_cast<int>(std::ceil(std::log2(nrm / theta13))));
  ComplexMatrix scaled = A / std::pow(2.0, squarings);
  ComplexMatrix E = pade(scaled, b13);
  for (int i = 0; i < squarings; ++i) E = E * E;
  return E;
}

/// Intersection of subspaces via the common nullspace of the complements.
inline Subspace subspace_intersect(const std::vector<Subspace>& spaces, const ToleranceConfig& tol = {}) {
  if (spaces.empty()) throw std::invalid_argument("subspace_intersect: empty list");
  const Eigen::Index n = spaces.front().ambient_dim;
  for (const auto& s : spaces)
    if (s.ambient_dim != n) throw std::invalid_argument("subspace_intersect: ambient dims differ");
  ComplexMatrix stacked(n * static_cast<Eigen::Index>(spaces.size()), n);
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    const auto& B = spaces[i].basis;
    stacked.middleRows(static_cast<Eigen::Index>(i) * n, n) =
        ComplexMatrix::Identity(n, n) - B * B.adjoint();
  }
  return nullspace(stacked, tol);
}

/// max_k sin(theta_k) over principal angles; 1.0 when dimensions differ.
/// Computed through the orthogonal complement, which is stable for tiny angles.
inline double principal_angle_distance(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim != b.ambient_dim) throw std::invalid_argument("principal_angle_distance: ambient dims differ");
  if (a.dim() != b.dim()) return 1.0;
  if (a.dim() == 0) return 0.0;
  ComplexMatrix resid = b.basis - a.basis * (a.basis.adjoint() * b.basis);
  return std::min(1.0, op_norm(resid));
}

/// Containment small <= big up to tol on the basis residual.
inline bool subspace_contains(const Subspace& big, const Subspace& small, double tol = 1e-9) {
  if (small.dim() == 0) return true;
  if (big.dim() == 0) return false;
  ComplexMatrix resid = small.basis - big.basis * (big.basis.adjoint() * small.basis);
  return op_norm(resid) <= tol;
}

}  // namespace opcalc::numlin
