#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>

#include "ocfem/errors.hpp"
#include "ocfem/mesh.hpp"

namespace ocfem {

using ScalarField = std::function<double(const Vec2&)>;

/// Piecewise-linear function given by nodal values on a mesh.
struct FeFunction {
  MeshPtr mesh;
  Eigen::VectorXd coeffs;

  FeFunction() = default;
  FeFunction(MeshPtr m, Eigen::VectorXd c) : mesh(std::move(m)), coeffs(std::move(c)) {
    if (!mesh) throw InvalidArgument("FeFunction: null mesh");
    if (coeffs.size() != mesh->n_vertices())
      throw InvalidArgument("FeFunction: coefficient count does not match vertex count");
  }

  static FeFunction zero(MeshPtr m) {
    const int n = m->n_vertices();
    return FeFunction(std::move(m), Eigen::VectorXd::Zero(n));
  }

  /// Barycentric coordinates of x in triangle t.
  std::array<double, 3> barycentric(int t, Vec2 x) const {
    const auto& tri = mesh->triangles[t];
    const Vec2 a = mesh->vertices[tri[0]], b = mesh->vertices[tri[1]], c = mesh->vertices[tri[2]];
    const double area2 = signed_area2(a, b, c);
    return {signed_area2(x, b, c) / area2, signed_area2(a, x, c) / area2,
            signed_area2(a, b, x) / area2};
  }

  double eval_local(int t, const std::array<double, 3>& lambda) const {
    const auto& tri = mesh->triangles[t];
    return lambda[0] * coeffs[tri[0]] + lambda[1] * coeffs[tri[1]] + lambda[2] * coeffs[tri[2]];
  }

  /// Pointwise evaluation; x must lie in the closed domain.
  double eval(Vec2 x) const {
    int best = -1;
    double best_violation = std::numeric_limits<double>::infinity();
    std::array<double, 3> best_lambda{};
    for (int t = 0; t < mesh->n_triangles(); ++t) {
      const auto lambda = barycentric(t, x);
      const double violation = std::max({-lambda[0], -lambda[1], -lambda[2], 0.0});
      if (violation < best_violation) {
        best_violation = violation;
        best = t;
        best_lambda = lambda;
        if (violation == 0.0) break;
      }
    }
    if (best < 0 || best_violation > 1e-10)
      throw InvalidArgument("FeFunction::eval: point outside the mesh");
    return eval_local(best, best_lambda);
  }

  /// Constant gradient on triangle t.
  Vec2 gradient(int t) const {
    const auto& tri = mesh->triangles[t];
    const Vec2 a = mesh->vertices[tri[0]], b = mesh->vertices[tri[1]], c = mesh->vertices[tri[2]];
    const double area2 = signed_area2(a, b, c);
    const Vec2 g0{(b.y - c.y) / area2, (c.x - b.x) / area2};
    const Vec2 g1{(c.y - a.y) / area2, (a.x - c.x) / area2};
    const Vec2 g2{(a.y - b.y) / area2, (b.x - a.x) / area2};
    return coeffs[tri[0]] * g0 + coeffs[tri[1]] * g1 + coeffs[tri[2]] * g2;
  }
};

/// Nodal (Lagrange) interpolation of a scalar field.
inline FeFunction interpolate(const MeshPtr& m, const ScalarField& g) {
  Eigen::VectorXd c(m->n_vertices());
  for (int i = 0; i < m->n_vertices(); ++i) c[i] = g(m->vertices[i]);
  return FeFunction(m, std::move(c));
}

}  // namespace ocfem
