#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ocfem/certificate.hpp"
#include "ocfem/kkt.hpp"
#include "ocfem/norms.hpp"

namespace ocfem {

/// Exact embedding of a coarse P1 function into a refinement of its mesh:
/// copied vertices keep their value, edge midpoints average the endpoints.
/// The fine mesh must descend from the coarse one by refine() calls.
inline FeFunction prolong(const FeFunction& coarse, const MeshPtr& fine_mesh) {
  if (!fine_mesh) throw InvalidArgument("prolong: null target mesh");
  if (coarse.mesh == fine_mesh) return coarse;

  std::vector<MeshPtr> chain;  // strictly finer than coarse.mesh, fine first
  for (MeshPtr m = fine_mesh; m != coarse.mesh; m = m->parent) {
    if (!m->parent) throw InvalidArgument("prolong: target is not a refinement of the source");
    chain.push_back(m);
  }

  Eigen::VectorXd vals = coarse.coeffs;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const Mesh& m = **it;
    Eigen::VectorXd up(m.n_vertices());
    for (int v = 0; v < m.n_vertices(); ++v) {
      const auto& src = m.parent_sources[v];
      up[v] = src[0] == src[1] ? vals[src[0]] : 0.5 * (vals[src[0]] + vals[src[1]]);
    }
    vals = std::move(up);
  }
  return FeFunction(fine_mesh, std::move(vals));
}

struct ErrorFunctionals {
  double E_uL2 = 0.0;
  double E_yH1 = 0.0;
  double E_yL2 = 0.0;
  double E_yLinf = 0.0;
};

/// Error functionals of a level solution against a fine reference solution,
/// measured on the reference mesh where prolongation is exact. Controls with
/// binding bounds are compared through the exact clamp of -p/alpha under
/// quadrature instead of the nodal surrogate.
inline ErrorFunctionals error_functionals(const KktSolution& sol, const KktSolution& ref,
                                          const ProblemSpec& spec) {
  const MeshPtr& fine = ref.y.mesh;
  ErrorFunctionals e;

  const FeFunction dy(fine, prolong(sol.y, fine).coeffs - ref.y.coeffs);
  e.E_yH1 = norm(dy, NormKind::H1);
  e.E_yL2 = norm(dy, NormKind::L2);
  e.E_yLinf = norm(dy, NormKind::Linf);

  const bool clamped =
      spec.has_control_bounds() &&
      (std::count(sol.control_clamped.begin(), sol.control_clamped.end(), 1) > 0 ||
       std::count(ref.control_clamped.begin(), ref.control_clamped.end(), 1) > 0);
  if (!clamped) {
    const FeFunction du(fine, prolong(sol.u, fine).coeffs - ref.u.coeffs);
    e.E_uL2 = norm(du, NormKind::L2);
  } else {
    const FeFunction pc = prolong(sol.p, fine);
    const auto& rule = triangle_rule(8);
    double acc = 0.0;
    for (int t = 0; t < fine->n_triangles(); ++t) {
      const double area = fine->triangle_area(t);
      for (const auto& q : rule) {
        const std::array<double, 3> lam{q.l1, q.l2, q.l3};
        const double a = spec.clamp_control(-pc.eval_local(t, lam) / spec.alpha);
        const double b = spec.clamp_control(-ref.p.eval_local(t, lam) / spec.alpha);
        acc += area * q.w * (a - b) * (a - b);
      }
    }
    e.E_uL2 = std::sqrt(acc);
  }
  return e;
}

/// Experimental order of convergence between two levels.
inline double eoc(double E_prev, double E_cur, double h_prev, double h_cur) {
  if (!(E_prev > 0.0) || !(E_cur > 0.0))
    throw InvalidArgument(
        "eoc: error values must be positive; a vanishing error usually means the "
        "reference level is too close");
  if (!(h_prev > 0.0) || !(h_cur > 0.0) || h_prev == h_cur)
    throw InvalidArgument("eoc: mesh sizes must be positive and distinct");
  return (std::log(E_cur) - std::log(E_prev)) / (std::log(h_cur) - std::log(h_prev));
}

struct LevelRecord {
  int level = 0;
  double h = 0.0;
  ErrorFunctionals errors;
  CertificateVerdict certificate;
};

struct EocRecord {
  int from_level = 0;
  int to_level = 0;
  double eoc_uL2 = 0.0;
  double eoc_yH1 = 0.0;
  double eoc_yL2 = 0.0;
  double eoc_yLinf = 0.0;
  bool contaminated = false;  // pair within two levels of the reference
};

struct StudyReport {
  std::vector<LevelRecord> levels;
  std::vector<EocRecord> eoc_rows;
  int reference_level = 0;
};

namespace detail {

inline KktSolution prolong_solution(const KktSolution& coarse, const MeshPtr& fine) {
  KktSolution w;
  w.u = prolong(coarse.u, fine);
  w.y = prolong(coarse.y, fine);
  w.p = prolong(coarse.p, fine);
  w.mu = coarse.mu;  // coarse vertex indices persist through refinement
  return w;
}

}  // namespace detail

/// Multi-level convergence study against a warm-chained reference solve.
/// Solves the KKT system on levels level_lo..level_hi, continues prolonging
/// up to the reference level (solving only there), and measures all error
/// functionals on the reference mesh.
inline StudyReport run_study(const ProblemSpec& spec, int level_lo, int level_hi,
                             int reference_level, const PdasConfig& cfg = {},
                             std::optional<double> C_q_override = std::nullopt) {
  if (level_lo < 1 || level_hi < level_lo)
    throw InvalidArgument("run_study: need 1 <= level_lo <= level_hi");
  if (reference_level <= level_hi + 1)
    throw InvalidArgument("run_study: reference level must exceed the top level by at least 2");

  std::vector<KktSolution> sols;
  std::vector<MeshPtr> meshes;
  MeshPtr mesh = uniform_triangulation(1 << level_lo);
  std::optional<KktSolution> warm;
  KktSolution ref;

  for (int level = level_lo; level <= reference_level; ++level) {
    if (level > level_lo) {
      const MeshPtr finer = refine(mesh);
      if (warm) warm = detail::prolong_solution(*warm, finer);
      mesh = finer;
    }
    const bool solved_level = level <= level_hi || level == reference_level;
    if (solved_level) {
      try {
        warm = solve_kkt(spec, mesh, cfg, warm);
      } catch (const Error& e) {
        throw NonConvergenceError("run_study: level " + std::to_string(level) + ": " + e.what());
      }
      if (level == reference_level) {
        ref = *warm;
      } else {
        sols.push_back(*warm);
        meshes.push_back(mesh);
      }
    }
  }

  StudyReport report;
  report.reference_level = reference_level;
  for (size_t k = 0; k < sols.size(); ++k) {
    LevelRecord rec;
    rec.level = level_lo + static_cast<int>(k);
    rec.h = meshes[k]->h;
    rec.errors = error_functionals(sols[k], ref, spec);
    rec.certificate = certify(sols[k], spec, meshes[k], C_q_override);
    report.levels.push_back(rec);
  }
  for (size_t k = 1; k < report.levels.size(); ++k) {
    const LevelRecord& a = report.levels[k - 1];
    const LevelRecord& b = report.levels[k];
    EocRecord row;
    row.from_level = a.level;
    row.to_level = b.level;
    row.eoc_uL2 = eoc(a.errors.E_uL2, b.errors.E_uL2, a.h, b.h);
    row.eoc_yH1 = eoc(a.errors.E_yH1, b.errors.E_yH1, a.h, b.h);
    row.eoc_yL2 = eoc(a.errors.E_yL2, b.errors.E_yL2, a.h, b.h);
    row.eoc_yLinf = eoc(a.errors.E_yLinf, b.errors.E_yLinf, a.h, b.h);
    row.contaminated = b.level >= reference_level - 2;
    report.eoc_rows.push_back(row);
  }
  return report;
}

}  // namespace ocfem
