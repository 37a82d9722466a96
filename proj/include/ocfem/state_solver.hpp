#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "ocfem/assembly.hpp"
#include "ocfem/linear_solvers.hpp"
#include "ocfem/problem.hpp"

namespace ocfem {

/// Convergence record of a damped Newton run.
struct NewtonReport {
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
};

namespace detail {

/// Dual norm of a Galerkin residual over the given dofs, induced by the
/// lumped mass matrix: sqrt(sum r_i^2 / m_i). Scales like an L2-function
/// norm of the Riesz representative, so tolerances are mesh-independent.
inline double dual_norm(const Eigen::VectorXd& r, const std::vector<int>& dofs,
                        const Eigen::VectorXd& lumped) {
  double acc = 0.0;
  for (int i : dofs) acc += r[i] * r[i] / lumped[i];
  return std::sqrt(acc);
}

inline Eigen::VectorXd scatter_interior(const Eigen::VectorXd& x_interior,
                                        const std::vector<int>& interior, int n) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
  for (size_t k = 0; k < interior.size(); ++k) full[interior[k]] = x_interior[k];
  return full;
}

inline Eigen::VectorXd gather(const Eigen::VectorXd& full, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<int>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) out[k] = full[idx[k]];
  return out;
}

/// Damped Newton for the homogeneous-Dirichlet semilinear problem
///   stiffness * y + phi(y) mass-action = b   on interior dofs.
inline std::pair<FeFunction, NewtonReport> newton_state(const ProblemSpec& spec,
                                                        const Eigen::VectorXd& b,
                                                        const MeshPtr& m, double tol,
                                                        int max_iter) {
  if (tol <= 0.0) throw InvalidArgument("solve_state: tolerance must be positive");
  const auto A = assemble_stiffness(*m);
  const Eigen::VectorXd lumped = lumped_mass(*m);
  const std::vector<int> interior = interior_vertices(*m);

  FeFunction y = FeFunction::zero(m);
  auto residual_full = [&](const FeFunction& yy) -> Eigen::VectorXd {
    return A.apply(yy.coeffs) + assemble_semilinear(yy, spec.phi.phi, spec.quad_order) - b;
  };

  NewtonReport rep;
  Eigen::VectorXd r = residual_full(y);
  double res = dual_norm(r, interior, lumped);
  rep.residual_history.push_back(res);

  while (res > tol) {
    if (rep.iterations >= max_iter)
      throw NonConvergenceError("solve_state: no convergence after " +
                                std::to_string(max_iter) + " Newton iterations, residual " +
                                std::to_string(res));
    auto J = A;
    J.add(assemble_weighted_mass(*m, composed_weight(y, spec.phi.dphi), spec.quad_order));
    const Eigen::VectorXd delta =
        solve_unsymmetric(J.restricted(interior), -gather(r, interior));

    double step = 1.0;
    FeFunction y_trial = y;
    Eigen::VectorXd r_trial;
    double res_trial = res;
    bool improved = false;
    for (int halving = 0; halving <= 30; ++halving) {
      y_trial.coeffs = y.coeffs + step * scatter_interior(delta, interior, m->n_vertices());
      r_trial = residual_full(y_trial);
      res_trial = dual_norm(r_trial, interior, lumped);
      if (res_trial < res) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved)
      throw NonConvergenceError("solve_state: line search stagnated at residual " +
                                std::to_string(res));
    y = std::move(y_trial);
    r = std::move(r_trial);
    res = res_trial;
    rep.residual_history.push_back(res);
    ++rep.iterations;
  }
  rep.converged = true;
  return {std::move(y), std::move(rep)};
}

}  // namespace detail

/// Discrete control-to-state map: solve the semilinear Dirichlet problem with
/// right-hand side given by an FE control (exact mass-matrix action).
inline std::pair<FeFunction, NewtonReport> solve_state(const ProblemSpec& spec,
                                                       const FeFunction& u, const MeshPtr& m,
                                                       double tol = 1e-10, int max_iter = 50) {
  if (u.mesh != m) throw InvalidArgument("solve_state: control lives on a different mesh");
  return detail::newton_state(spec, assemble_mass(*m).apply(u.coeffs), m, tol, max_iter);
}

/// Overload for a general scalar-field control; the load is integrated by
/// quadrature of the requested order.
inline std::pair<FeFunction, NewtonReport> solve_state(const ProblemSpec& spec,
                                                       const ScalarField& u, const MeshPtr& m,
                                                       double tol = 1e-10, int max_iter = 50) {
  return detail::newton_state(spec, assemble_load(*m, u, spec.quad_order), m, tol, max_iter);
}

/// Adjoint solve: (stiffness + phi'(y)-weighted mass) p = mass (y - I_h y0)
/// + point loads carrying the state-constraint multiplier. Single linear
/// solve, homogeneous Dirichlet data.
inline FeFunction solve_adjoint(const ProblemSpec& spec, const FeFunction& y,
                                const std::vector<int>& mu_nodes,
                                const std::vector<double>& mu_weights, const MeshPtr& m) {
  if (y.mesh != m) throw InvalidArgument("solve_adjoint: state lives on a different mesh");
  auto K = assemble_stiffness(*m);
  K.add(assemble_weighted_mass(*m, composed_weight(y, spec.phi.dphi), spec.quad_order));

  const FeFunction y0h = interpolate(m, spec.y0);
  Eigen::VectorXd rhs = assemble_mass(*m).apply(y.coeffs - y0h.coeffs);
  rhs += assemble_point_loads(*m, mu_nodes, mu_weights);

  const std::vector<int> interior = interior_vertices(*m);
  const Eigen::VectorXd p_int =
      solve_unsymmetric(K.restricted(interior), detail::gather(rhs, interior));
  return FeFunction(m, detail::scatter_interior(p_int, interior, m->n_vertices()));
}

/// Variational-discretization control update: nodal clamp of -p/alpha onto
/// the admissible interval. Exact whenever the bounds never bind inside an
/// element (in particular for unbounded controls).
inline FeFunction project_control(const FeFunction& p, const ProblemSpec& spec) {
  Eigen::VectorXd u(p.coeffs.size());
  for (int i = 0; i < u.size(); ++i) u[i] = spec.clamp_control(-p.coeffs[i] / spec.alpha);
  return FeFunction(p.mesh, std::move(u));
}

}  // namespace ocfem
