#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ocfem/state_solver.hpp"

namespace ocfem {

/// A candidate first-order point: control, state, adjoint, and the nodal
/// state-constraint multiplier. mu stores the signed weight per vertex
/// (upper part minus lower part), so a binding lower bound carries mu <= 0.
struct KktSolution {
  FeFunction u;
  std::vector<std::uint8_t> control_clamped;  // per node: control bound binds
  FeFunction y;
  FeFunction p;
  std::map<int, double> mu;
  std::set<int> active_lower;
  std::set<int> active_upper;
  double kkt_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

struct PdasConfig {
  std::optional<double> c_pdas;  // active-set detection weight, default 1/alpha
  double tol_kkt = 1e-9;
  int max_outer = 40;
  int max_newton_inner = 30;

  double weight(double alpha) const { return c_pdas ? *c_pdas : 1.0 / alpha; }
  void validate() const {
    if ((c_pdas && *c_pdas <= 0.0) || tol_kkt <= 0.0 || max_outer <= 0 || max_newton_inner <= 0)
      throw InvalidArgument("PdasConfig: all fields must be positive");
  }
};

/// The equality-constrained Newton system became singular, which points to a
/// degenerate choice of active nodes.
struct DegenerateActiveSetError : Error {
  using Error::Error;
};

/// Outer active-set loop gave up; the best iterate is attached for forensics.
struct KktNonConvergenceError : NonConvergenceError {
  KktSolution last_iterate;
  KktNonConvergenceError(const std::string& msg, KktSolution last)
      : NonConvergenceError(msg), last_iterate(std::move(last)) {}
};

namespace detail {

inline double mu_at(const std::map<int, double>& mu, int j) {
  const auto it = mu.find(j);
  return it == mu.end() ? 0.0 : it->second;
}

inline bool control_inactive(const ProblemSpec& spec, double v) {
  return v > spec.u_lower && v < spec.u_upper;
}

/// Load vector of the pointwise-clamped control clamp(-p/alpha) tested
/// against the hat basis. Without control bounds this is exact mass action;
/// otherwise it is integrated by the problem quadrature rule.
inline Eigen::VectorXd control_load(const ProblemSpec& spec, const FeFunction& p,
                                    const SparseOperator& mass) {
  if (!spec.has_control_bounds()) return mass.apply(-p.coeffs / spec.alpha);
  const Mesh& m = *p.mesh;
  const auto& rule = triangle_rule(spec.quad_order);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m.n_vertices());
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    const double area = m.triangle_area(t);
    for (const auto& q : rule) {
      const std::array<double, 3> lam{q.l1, q.l2, q.l3};
      const double v = spec.clamp_control(-p.eval_local(t, lam) / spec.alpha);
      for (int i = 0; i < 3; ++i) b[tri[i]] += area * q.w * v * lam[i];
    }
  }
  return b;
}

/// Semismooth derivative of the control load with respect to p: 1/alpha times
/// the mass form on the inactive control set, same quadrature rule as the
/// load itself so residual and Jacobian stay consistent.
inline SparseOperator control_jacobian(const ProblemSpec& spec, const FeFunction& p) {
  const double inv_alpha = 1.0 / spec.alpha;
  if (!spec.has_control_bounds())
    return assemble_weighted_mass(
        *p.mesh, [inv_alpha](int, const std::array<double, 3>&, const Vec2&) { return inv_alpha; },
        2);
  return assemble_weighted_mass(
      *p.mesh,
      [&spec, &p, inv_alpha](int t, const std::array<double, 3>& lam, const Vec2&) {
        return control_inactive(spec, -p.eval_local(t, lam) / spec.alpha) ? inv_alpha : 0.0;
      },
      spec.quad_order);
}

inline void append_block(std::vector<Triplet>& trips, const SparseOperator& op, int row_off,
                         int col_off, double scale = 1.0) {
  const auto& rp = op.row_ptr();
  const auto& ci = op.col_indices();
  const auto& vv = op.values();
  for (int r = 0; r < op.rows(); ++r)
    for (int k = rp[r]; k < rp[r + 1]; ++k)
      trips.push_back({row_off + r, col_off + ci[k], scale * vv[k]});
}

/// Everything the inner Newton solver needs that stays fixed per outer pass.
struct KktAssembly {
  const ProblemSpec& spec;
  MeshPtr m;
  SparseOperator A;
  SparseOperator M;
  Eigen::VectorXd lumped;
  Eigen::VectorXd y0h;
  std::vector<int> interior;
  std::vector<int> loc;  // global vertex -> interior position, -1 on boundary

  explicit KktAssembly(const ProblemSpec& s, const MeshPtr& mesh)
      : spec(s),
        m(mesh),
        A(assemble_stiffness(*mesh)),
        M(assemble_mass(*mesh)),
        lumped(lumped_mass(*mesh)),
        y0h(interpolate(mesh, s.y0).coeffs),
        interior(interior_vertices(*mesh)),
        loc(mesh->n_vertices(), -1) {
    for (size_t k = 0; k < interior.size(); ++k) loc[interior[k]] = static_cast<int>(k);
  }

  Eigen::VectorXd state_residual(const FeFunction& y, const FeFunction& p) const {
    return A.apply(y.coeffs) + assemble_semilinear(y, spec.phi.phi, spec.quad_order) -
           control_load(spec, p, M);
  }

  Eigen::VectorXd adjoint_residual(const FeFunction& y, const FeFunction& p,
                                   const std::vector<int>& act,
                                   const Eigen::VectorXd& muv) const {
    auto K = A;
    K.add(assemble_weighted_mass(*m, composed_weight(y, spec.phi.dphi), spec.quad_order));
    Eigen::VectorXd r = K.apply(p.coeffs) - M.apply(y.coeffs - y0h);
    for (size_t a = 0; a < act.size(); ++a) r[act[a]] -= muv[a];
    return r;
  }

  double merit(const FeFunction& y, const FeFunction& p, const std::vector<int>& act,
               const Eigen::VectorXd& muv, const std::vector<double>& bounds) const {
    const Eigen::VectorXd f1 = state_residual(y, p);
    const Eigen::VectorXd f2 = adjoint_residual(y, p, act, muv);
    double pin = 0.0;
    for (size_t a = 0; a < act.size(); ++a)
      pin = std::max(pin, std::abs(y.coeffs[act[a]] - bounds[a]));
    return std::max({dual_norm(f1, interior, lumped), dual_norm(f2, interior, lumped), pin});
  }
};

/// Semismooth Newton on the coupled state/adjoint/multiplier system with the
/// state pinned to its bound on the given active nodes. Updates y, p, muv in
/// place; throws on stagnation or a singular linear system.
inline void inner_newton(const KktAssembly& w, const std::vector<int>& act,
                         const std::vector<double>& bounds, FeFunction& y, FeFunction& p,
                         Eigen::VectorXd& muv, double tol, int max_iter) {
  const int ni = static_cast<int>(w.interior.size());
  const int na = static_cast<int>(act.size());
  const int n = w.m->n_vertices();

  double res = w.merit(y, p, act, muv, bounds);
  for (int it = 0; res > tol; ++it) {
    if (it >= max_iter)
      throw NonConvergenceError("kkt inner Newton: no convergence after " +
                                std::to_string(max_iter) + " iterations, residual " +
                                std::to_string(res));

    auto K = w.A;
    K.add(assemble_weighted_mass(*w.m, composed_weight(y, w.spec.phi.dphi), w.spec.quad_order));
    auto W2 = assemble_weighted_mass(*w.m, product_weight(y, p, w.spec.phi.d2phi),
                                     w.spec.quad_order);
    W2.add(w.M, -1.0);
    const auto K_ii = K.restricted(w.interior);
    const auto C_ii = control_jacobian(w.spec, p).restricted(w.interior);
    const auto W2_ii = W2.restricted(w.interior);

    std::vector<Triplet> trips;
    trips.reserve(2 * (K_ii.nnz() + C_ii.nnz()) + 2 * na);
    append_block(trips, K_ii, 0, 0);
    append_block(trips, C_ii, 0, ni);
    append_block(trips, W2_ii, ni, 0);
    append_block(trips, K_ii, ni, ni);
    for (int a = 0; a < na; ++a) {
      trips.push_back({ni + w.loc[act[a]], 2 * ni + a, -1.0});
      trips.push_back({2 * ni + a, w.loc[act[a]], 1.0});
    }
    const auto J = SparseOperator::from_triplets(2 * ni + na, 2 * ni + na, trips);

    const Eigen::VectorXd f1 = w.state_residual(y, p);
    const Eigen::VectorXd f2 = w.adjoint_residual(y, p, act, muv);
    Eigen::VectorXd rhs(2 * ni + na);
    for (int k = 0; k < ni; ++k) {
      rhs[k] = -f1[w.interior[k]];
      rhs[ni + k] = -f2[w.interior[k]];
    }
    for (int a = 0; a < na; ++a) rhs[2 * ni + a] = bounds[a] - y.coeffs[act[a]];

    Eigen::VectorXd delta;
    try {
      delta = solve_unsymmetric(J, rhs);
    } catch (const SingularMatrixError& e) {
      throw DegenerateActiveSetError(std::string("kkt Newton system is singular: ") + e.what());
    }

    double step = 1.0;
    bool improved = false;
    FeFunction y_try = y, p_try = p;
    Eigen::VectorXd mu_try = muv;
    double res_try = res;
    for (int halving = 0; halving <= 30; ++halving) {
      y_try.coeffs = y.coeffs;
      p_try.coeffs = p.coeffs;
      for (int k = 0; k < ni; ++k) {
        y_try.coeffs[w.interior[k]] += step * delta[k];
        p_try.coeffs[w.interior[k]] += step * delta[ni + k];
      }
      for (int a = 0; a < na; ++a) mu_try[a] = muv[a] + step * delta[2 * ni + a];
      res_try = w.merit(y_try, p_try, act, mu_try, bounds);
      if (res_try < res) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved)
      throw NonConvergenceError("kkt inner Newton: line search stagnated at residual " +
                                std::to_string(res));
    y = std::move(y_try);
    p = std::move(p_try);
    muv = std::move(mu_try);
    res = res_try;
  }
}

}  // namespace detail

/// Residual of the full first-order system at an arbitrary candidate point:
/// max of state and adjoint Galerkin residual dual norms, control clamp
/// violation, complementarity violation, and bound infeasibility.
inline double kkt_residual(const KktSolution& sol, const ProblemSpec& spec, const MeshPtr& m) {
  if (sol.y.mesh != m || sol.p.mesh != m || sol.u.mesh != m)
    throw InvalidArgument("kkt_residual: solution fields live on a different mesh");
  const detail::KktAssembly w(spec, m);

  std::vector<int> mu_nodes;
  std::vector<double> mu_weights;
  for (const auto& [j, v] : sol.mu) {
    mu_nodes.push_back(j);
    mu_weights.push_back(v);
  }
  Eigen::VectorXd muv = Eigen::VectorXd::Map(mu_weights.data(), mu_weights.size());

  const Eigen::VectorXd f1 = w.state_residual(sol.y, sol.p);
  const Eigen::VectorXd f2 = w.adjoint_residual(sol.y, sol.p, mu_nodes, muv);
  double res = std::max(detail::dual_norm(f1, w.interior, w.lumped),
                        detail::dual_norm(f2, w.interior, w.lumped));

  for (int i = 0; i < m->n_vertices(); ++i)
    res = std::max(res, std::abs(sol.u.coeffs[i] -
                                 spec.clamp_control(-sol.p.coeffs[i] / spec.alpha)));

  const std::vector<int> nodes = constraint_nodes(*m, spec.region);
  const std::set<int> node_set(nodes.begin(), nodes.end());
  for (int j : nodes) {
    const Vec2& x = m->vertices[j];
    const double yj = sol.y.coeffs[j];
    const double mj = detail::mu_at(sol.mu, j);
    const double lower_part = std::max(-mj, 0.0);
    const double upper_part = std::max(mj, 0.0);
    const double ya = spec.y_lower(x);
    const double yb = spec.y_upper(x);
    if (std::isfinite(ya)) {
      res = std::max(res, ya - yj);
      res = std::max(res, lower_part * std::abs(yj - ya));
    } else {
      res = std::max(res, lower_part);
    }
    if (std::isfinite(yb)) {
      res = std::max(res, yj - yb);
      res = std::max(res, upper_part * std::abs(yb - yj));
    } else {
      res = std::max(res, upper_part);
    }
  }
  for (const auto& [j, v] : sol.mu)
    if (!node_set.count(j)) res = std::max(res, std::abs(v));
  return res;
}

/// Primal-dual active-set solve of the discrete first-order system. The
/// warm start, when given, must live on the same mesh (prolong first when
/// chaining levels).
inline KktSolution solve_kkt(const ProblemSpec& spec, const MeshPtr& m,
                             const PdasConfig& cfg = {},
                             const std::optional<KktSolution>& warm_start = std::nullopt) {
  cfg.validate();
  spec.validate();
  spec.validate_on_mesh(*m);
  const detail::KktAssembly w(spec, m);
  const double c = cfg.weight(spec.alpha);
  const double tol_inner = std::min(1e-10, 0.1 * cfg.tol_kkt);

  // interior constraint nodes drive the active-set machinery; boundary ones
  // are only feasibility-checked (homogeneous data pins them already)
  std::vector<int> candidates;
  std::vector<double> ya, yb;
  for (int j : constraint_nodes(*m, spec.region)) {
    if (m->boundary_mask[j]) continue;
    candidates.push_back(j);
    ya.push_back(spec.y_lower(m->vertices[j]));
    yb.push_back(spec.y_upper(m->vertices[j]));
  }

  FeFunction y, p;
  std::map<int, double> mu;
  if (warm_start) {
    if (warm_start->y.mesh != m)
      throw InvalidArgument("solve_kkt: warm start lives on a different mesh");
    y = warm_start->y;
    p = warm_start->p;
    mu = warm_start->mu;
  } else {
    const double u0 = spec.clamp_control(0.0);
    y = solve_state(spec, FeFunction(m, Eigen::VectorXd::Constant(m->n_vertices(), u0)), m,
                    tol_inner)
            .first;
    p = solve_adjoint(spec, y, {}, {}, m);
  }

  auto detect = [&](const FeFunction& yy, const std::map<int, double>& mm) {
    std::pair<std::vector<int>, std::vector<int>> sets;
    for (size_t k = 0; k < candidates.size(); ++k) {
      const int j = candidates[k];
      const double mj = detail::mu_at(mm, j);
      if (std::isfinite(ya[k]) && -mj + c * (ya[k] - yy.coeffs[j]) > 0.0)
        sets.first.push_back(j);
      else if (std::isfinite(yb[k]) && mj + c * (yy.coeffs[j] - yb[k]) > 0.0)
        sets.second.push_back(j);
    }
    return sets;
  };

  auto package = [&](const FeFunction& yy, const FeFunction& pp, const std::map<int, double>& mm,
                     const std::pair<std::vector<int>, std::vector<int>>& sets, int outer) {
    KktSolution sol;
    sol.u = project_control(pp, spec);
    sol.control_clamped.assign(m->n_vertices(), 0);
    if (spec.has_control_bounds())
      for (int i = 0; i < m->n_vertices(); ++i)
        sol.control_clamped[i] =
            detail::control_inactive(spec, -pp.coeffs[i] / spec.alpha) ? 0 : 1;
    sol.y = yy;
    sol.p = pp;
    sol.mu = mm;
    sol.active_lower.insert(sets.first.begin(), sets.first.end());
    sol.active_upper.insert(sets.second.begin(), sets.second.end());
    sol.iterations = outer;
    sol.kkt_residual = kkt_residual(sol, spec, m);
    return sol;
  };

  auto sets = detect(y, mu);
  for (int outer = 1; outer <= cfg.max_outer; ++outer) {
    // pin rows sorted by node id: lower-active first within the merge
    std::vector<std::pair<int, double>> pins;
    for (int j : sets.first) pins.emplace_back(j, spec.y_lower(m->vertices[j]));
    for (int j : sets.second) pins.emplace_back(j, spec.y_upper(m->vertices[j]));
    std::sort(pins.begin(), pins.end());
    std::vector<int> act;
    std::vector<double> bounds;
    for (const auto& [j, b] : pins) {
      act.push_back(j);
      bounds.push_back(b);
    }
    Eigen::VectorXd muv(act.size());
    for (size_t a = 0; a < act.size(); ++a) muv[a] = detail::mu_at(mu, act[a]);

    try {
      detail::inner_newton(w, act, bounds, y, p, muv, tol_inner, cfg.max_newton_inner);
    } catch (const NonConvergenceError& e) {
      if (dynamic_cast<const KktNonConvergenceError*>(&e)) throw;
      throw KktNonConvergenceError(e.what(),
                                   package(y, p, mu, detect(y, mu), outer));
    }

    mu.clear();
    for (size_t a = 0; a < act.size(); ++a)
      if (muv[a] != 0.0) mu[act[a]] = muv[a];

    const auto next = detect(y, mu);
    if (next == sets) {
      KktSolution sol = package(y, p, mu, sets, outer);
      if (sol.kkt_residual <= cfg.tol_kkt) return sol;
    }
    sets = next;
  }
  throw KktNonConvergenceError(
      "solve_kkt: active sets did not settle within " + std::to_string(cfg.max_outer) +
          " outer iterations",
      package(y, p, mu, sets, cfg.max_outer));
}

/// Compares the adjoint-based derivative of the reduced tracking objective
/// against central finite differences in five fixed random directions and
/// returns the worst relative deviation.
inline double reduced_gradient_check(const ProblemSpec& spec, const MeshPtr& m,
                                     const FeFunction& u, double h_fd) {
  if (h_fd <= 0.0) throw InvalidArgument("reduced_gradient_check: step must be positive");
  if (u.mesh != m) throw InvalidArgument("reduced_gradient_check: control mesh mismatch");
  const auto M = assemble_mass(*m);
  const Eigen::VectorXd y0h = interpolate(m, spec.y0).coeffs;

  auto objective = [&](const Eigen::VectorXd& uc) {
    const FeFunction uu(m, uc);
    const FeFunction yy = solve_state(spec, uu, m, 1e-12).first;
    const Eigen::VectorXd d = yy.coeffs - y0h;
    return 0.5 * d.dot(M.apply(d)) + 0.5 * spec.alpha * uc.dot(M.apply(uc));
  };

  const FeFunction yy = solve_state(spec, u, m, 1e-12).first;
  const FeFunction pp = solve_adjoint(spec, yy, {}, {}, m);
  const Eigen::VectorXd grad = M.apply(pp.coeffs + spec.alpha * u.coeffs);

  std::mt19937 rng(2026);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  for (int dir = 0; dir < 5; ++dir) {
    Eigen::VectorXd v(m->n_vertices());
    for (int i = 0; i < v.size(); ++i) v[i] = dist(rng);
    const double analytic = grad.dot(v);
    const double fd =
        (objective(u.coeffs + h_fd * v) - objective(u.coeffs - h_fd * v)) / (2.0 * h_fd);
    const double dev =
        std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-30});
    worst = std::max(worst, dev);
  }
  return worst;
}

}  // namespace ocfem
