#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <utility>

#include "ocfem/errors.hpp"
#include "ocfem/sparse.hpp"

namespace ocfem {

struct LinearSolveReport {
  int iterations = 0;
  double final_residual = 0.0;  // ||b - Ax|| / ||b||
  bool converged = false;
};

/// Conjugate gradients for symmetric positive definite systems, with optional
/// Jacobi (diagonal) preconditioning. Deterministic: fixed starting point and
/// summation order.
inline std::pair<Eigen::VectorXd, LinearSolveReport> solve_spd(const SparseOperator& A,
                                                               const Eigen::VectorXd& b,
                                                               double tol = 1e-12,
                                                               int max_iter = 10000,
                                                               bool jacobi = false) {
  if (A.rows() != A.cols() || A.cols() != b.size())
    throw InvalidArgument("solve_spd: dimension mismatch");
  if (tol <= 0.0) throw InvalidArgument("solve_spd: tolerance must be positive");
  const int n = A.dim();
  const double bnorm = b.norm();
  LinearSolveReport rep;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (bnorm == 0.0) {
    rep.converged = true;
    return {x, rep};
  }
  Eigen::VectorXd dinv;
  if (jacobi) {
    dinv.resize(n);
    for (int i = 0; i < n; ++i) {
      const double d = A.coeff(i, i);
      if (d <= 0.0) throw InvalidArgument("solve_spd: non-positive diagonal entry");
      dinv[i] = 1.0 / d;
    }
  }
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = jacobi ? Eigen::VectorXd(dinv.asDiagonal() * r) : r;
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXd Ap = A.apply(p);
    const double pAp = p.dot(Ap);
    if (pAp <= 0.0) throw InvalidArgument("solve_spd: matrix is not positive definite");
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    rep.iterations = it;
    rep.final_residual = r.norm() / bnorm;
    if (rep.final_residual <= tol) {
      rep.converged = true;
      return {x, rep};
    }
    z = jacobi ? Eigen::VectorXd(dinv.asDiagonal() * r) : r;
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  rep.final_residual = (b - A.apply(x)).norm() / bnorm;
  rep.converged = rep.final_residual <= tol;
  return {x, rep};
}

/// Direct sparse LU for general nonsingular systems; one step of iterative
/// refinement. Throws SingularMatrixError when factorization fails or the
/// refined solution misses the 1e-10 relative-residual contract.
inline Eigen::VectorXd solve_unsymmetric(const SparseOperator& A, const Eigen::VectorXd& b) {
  if (A.rows() != A.cols() || A.cols() != b.size())
    throw InvalidArgument("solve_unsymmetric: dimension mismatch");
  const double bnorm = b.norm();
  if (bnorm == 0.0) return Eigen::VectorXd::Zero(A.dim());
  const Eigen::SparseMatrix<double> M = A.to_eigen();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(M);
  lu.factorize(M);
  if (lu.info() != Eigen::Success)
    throw SingularMatrixError("sparse LU factorization failed (matrix singular to working precision)");
  Eigen::VectorXd x = lu.solve(b);
  Eigen::VectorXd r = b - M * x;
  x += lu.solve(r);  // one refinement step
  const double res = (b - M * x).norm() / bnorm;
  if (!std::isfinite(res) || res > 1e-10)
    throw SingularMatrixError("sparse LU solution failed the residual check (relative residual " +
                              std::to_string(res) + ")");
  return x;
}

}  // namespace ocfem
