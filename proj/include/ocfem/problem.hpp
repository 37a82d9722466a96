#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "ocfem/errors.hpp"
#include "ocfem/fe_function.hpp"
#include "ocfem/mesh.hpp"
#include "ocfem/nonlinearity.hpp"

namespace ocfem {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

inline ScalarField constant_field(double c) {
  return [c](const Vec2&) { return c; };
}

/// Pyramid-shaped lower state bound on the unit square: apex 0 at the center,
/// -1/2 at the corners, piecewise affine with creases on the midlines.
inline ScalarField pyramid_lower_field() {
  return [](const Vec2& p) {
    const double m = std::min(std::min(p.x + p.y, 1.0 + p.x - p.y),
                              std::min(1.0 - p.x + p.y, 2.0 - p.x - p.y));
    return -0.5 + 0.5 * m;
  };
}

/// Data of the control problem: minimize
///   1/2 ||y - y0||^2 + alpha/2 ||u||^2
/// subject to the state equation -Laplace(y) + phi(y) = u with y = 0 on the
/// boundary, control bounds u_a <= u <= u_b, and state bounds
/// y_a <= y <= y_b on the constraint region.
struct ProblemSpec {
  Nonlinearity phi = make_cubic();
  double alpha = 1e-2;
  ScalarField y0 = constant_field(0.0);
  double u_lower = -infinity;
  double u_upper = infinity;
  ScalarField y_lower = constant_field(-infinity);
  ScalarField y_upper = constant_field(infinity);
  ConstraintRegion region = ConstraintRegion::make_empty();
  int quad_order = 4;

  bool has_control_bounds() const { return u_lower > -infinity || u_upper < infinity; }

  double clamp_control(double v) const { return std::min(std::max(u_lower, v), u_upper); }

  /// Mesh-independent validation: positive alpha, ordered control bounds,
  /// monotone phi, growth condition.
  void validate() const {
    if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
    if (!(u_lower <= u_upper)) throw InvalidArgument("control bounds must satisfy u_a <= u_b");
    if (!(phi.r > 1.0)) throw InvalidArgument("growth exponent r must exceed 1");
    if (phi.M < 0.0) throw InvalidArgument("growth constant M must be nonnegative");
    if (quad_order < 2) throw InvalidArgument("quadrature order must be >= 2");
    if (!check_monotone(phi)) throw InvalidArgument("nonlinearity is not monotonically increasing");
    if (!check_growth(phi))
      throw InvalidArgument("nonlinearity violates the growth condition |phi''| <= M phi'^(1/r)");
  }

  /// Mesh-dependent validation of the state bounds: y_a < y_b on the
  /// constrained nodes, and for the whole-domain region y_a < 0 < y_b on the
  /// boundary (the homogeneous Dirichlet value must be feasible there).
  void validate_on_mesh(const Mesh& m) const {
    const auto nodes = constraint_nodes(m, region);
    for (int j : nodes) {
      const Vec2 x = m.vertices[j];
      if (!(y_lower(x) < y_upper(x)))
        throw InvalidArgument("state bounds must satisfy y_a < y_b on the constraint region");
    }
    if (region.kind() == ConstraintRegion::Kind::whole_domain) {
      for (int i = 0; i < m.n_vertices(); ++i) {
        if (!m.boundary_mask[i]) continue;
        const Vec2 x = m.vertices[i];
        if (!(y_lower(x) < 0.0 && 0.0 < y_upper(x)))
          throw InvalidArgument(
              "whole-domain constraint region requires y_a < 0 < y_b on the boundary");
      }
    } else if (region.kind() == ConstraintRegion::Kind::polygon) {
      for (int j : nodes) {
        if (!m.boundary_mask[j]) continue;
        const Vec2 x = m.vertices[j];
        if (!(y_lower(x) <= 0.0 && 0.0 <= y_upper(x)))
          throw InvalidArgument("constrained boundary node with infeasible bounds at (" +
                                std::to_string(x.x) + ", " + std::to_string(x.y) + ")");
      }
    }
  }
};

}  // namespace ocfem
