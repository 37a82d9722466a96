#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "ocfem/fe_function.hpp"
#include "ocfem/mesh.hpp"
#include "ocfem/quadrature.hpp"
#include "ocfem/sparse.hpp"

namespace ocfem {

/// Worker count for element-local evaluation, from OCFEM_THREADS (default:
/// all cores). The scatter into global structures is always sequential in
/// triangle order, so results are schedule-independent.
inline int assembly_thread_count() {
  static const int n = [] {
    if (const char* env = std::getenv("OCFEM_THREADS")) {
      const int v = std::atoi(env);
      if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
  }();
  return n;
}

namespace detail {

template <class F>
void parallel_for(int n, F&& body) {
  const int workers = std::min(assembly_thread_count(), n);
  if (workers <= 1 || n < 2048) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct ElementGeometry {
  std::array<Vec2, 3> grads;
  double area;
};

inline ElementGeometry element_geometry(const Mesh& m, int t) {
  const auto& tri = m.triangles[t];
  const Vec2 a = m.vertices[tri[0]], b = m.vertices[tri[1]], c = m.vertices[tri[2]];
  const double area2 = signed_area2(a, b, c);
  ElementGeometry g;
  g.area = 0.5 * area2;
  g.grads[0] = {(b.y - c.y) / area2, (c.x - b.x) / area2};
  g.grads[1] = {(c.y - a.y) / area2, (a.x - c.x) / area2};
  g.grads[2] = {(a.y - b.y) / area2, (b.x - a.x) / area2};
  return g;
}

inline SparseOperator scatter_elements(const Mesh& m, const std::vector<std::array<double, 9>>& el) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(m.n_triangles()) * 9);
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.push_back({tri[i], tri[j], el[t][3 * i + j]});
  }
  return SparseOperator::from_triplets(m.n_vertices(), m.n_vertices(), trips);
}

}  // namespace detail

/// Stiffness matrix: (i,j) -> integral of grad(phi_i) . grad(phi_j).
/// Exact (P1 gradients are constant per triangle).
inline SparseOperator assemble_stiffness(const Mesh& m) {
  std::vector<std::array<double, 9>> el(m.n_triangles());
  detail::parallel_for(m.n_triangles(), [&](int t) {
    const auto g = detail::element_geometry(m, t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) el[t][3 * i + j] = g.area * dot(g.grads[i], g.grads[j]);
  });
  return detail::scatter_elements(m, el);
}

/// Mass matrix: (i,j) -> integral of phi_i phi_j. Exact element formula
/// (area/12 off-diagonal, area/6 diagonal).
inline SparseOperator assemble_mass(const Mesh& m) {
  std::vector<std::array<double, 9>> el(m.n_triangles());
  detail::parallel_for(m.n_triangles(), [&](int t) {
    const double a = m.triangle_area(t) / 12.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) el[t][3 * i + j] = (i == j ? 2.0 : 1.0) * a;
  });
  return detail::scatter_elements(m, el);
}

/// Row sums of the mass matrix (integral of each basis function).
inline Eigen::VectorXd lumped_mass(const Mesh& m) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(m.n_vertices());
  for (int t = 0; t < m.n_triangles(); ++t) {
    const double a = m.triangle_area(t) / 3.0;
    for (int v : m.triangles[t]) d[v] += a;
  }
  return d;
}

/// Pointwise weight for weighted-mass assembly, evaluated at quadrature
/// points given (triangle, barycentric coordinates, physical point).
using LocalWeight = std::function<double(int, const std::array<double, 3>&, const Vec2&)>;

/// Weight w(x) = f(y(x)) for an FE function y.
inline LocalWeight composed_weight(const FeFunction& y, std::function<double(double)> f) {
  return [&y, f = std::move(f)](int t, const std::array<double, 3>& l, const Vec2&) {
    return f(y.eval_local(t, l));
  };
}

/// Weight w(x) = f(y(x)) p(x) for FE functions y, p.
inline LocalWeight product_weight(const FeFunction& y, const FeFunction& p,
                                  std::function<double(double)> f) {
  return [&y, &p, f = std::move(f)](int t, const std::array<double, 3>& l, const Vec2&) {
    return f(y.eval_local(t, l)) * p.eval_local(t, l);
  };
}

/// Weighted mass matrix: (i,j) -> integral of w(x) phi_i phi_j by quadrature
/// of the given polynomial exactness degree.
inline SparseOperator assemble_weighted_mass(const Mesh& m, const LocalWeight& w, int quad_degree) {
  const auto& rule = triangle_rule(quad_degree);
  std::vector<std::array<double, 9>> el(m.n_triangles());
  detail::parallel_for(m.n_triangles(), [&](int t) {
    const auto& tri = m.triangles[t];
    const Vec2 a = m.vertices[tri[0]], b = m.vertices[tri[1]], c = m.vertices[tri[2]];
    const double area = m.triangle_area(t);
    el[t].fill(0.0);
    for (const auto& q : rule) {
      const std::array<double, 3> lambda{q.l1, q.l2, q.l3};
      const Vec2 x = q.l1 * a + q.l2 * b + q.l3 * c;
      const double factor = area * q.w * w(t, lambda, x);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) el[t][3 * i + j] += factor * lambda[i] * lambda[j];
    }
  });
  return detail::scatter_elements(m, el);
}

/// Semilinear load vector: component i -> integral of f(y(x)) phi_i(x).
inline Eigen::VectorXd assemble_semilinear(const FeFunction& y, const std::function<double(double)>& f,
                                           int quad_degree) {
  if (quad_degree < 2) throw InvalidArgument("assemble_semilinear requires quadrature order >= 2");
  const Mesh& m = *y.mesh;
  const auto& rule = triangle_rule(quad_degree);
  std::vector<std::array<double, 3>> el(m.n_triangles());
  detail::parallel_for(m.n_triangles(), [&](int t) {
    const double area = m.triangle_area(t);
    el[t].fill(0.0);
    for (const auto& q : rule) {
      const std::array<double, 3> lambda{q.l1, q.l2, q.l3};
      const double factor = area * q.w * f(y.eval_local(t, lambda));
      for (int i = 0; i < 3; ++i) el[t][i] += factor * lambda[i];
    }
  });
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m.n_vertices());
  for (int t = 0; t < m.n_triangles(); ++t)
    for (int i = 0; i < 3; ++i) v[m.triangles[t][i]] += el[t][i];
  return v;
}

/// Load vector of a scalar field: component i -> integral of g(x) phi_i(x).
inline Eigen::VectorXd assemble_load(const Mesh& m, const ScalarField& g, int quad_degree) {
  const auto& rule = triangle_rule(quad_degree);
  std::vector<std::array<double, 3>> el(m.n_triangles());
  detail::parallel_for(m.n_triangles(), [&](int t) {
    const auto& tri = m.triangles[t];
    const Vec2 a = m.vertices[tri[0]], b = m.vertices[tri[1]], c = m.vertices[tri[2]];
    const double area = m.triangle_area(t);
    el[t].fill(0.0);
    for (const auto& q : rule) {
      const Vec2 x = q.l1 * a + q.l2 * b + q.l3 * c;
      const double factor = area * q.w * g(x);
      el[t][0] += factor * q.l1;
      el[t][1] += factor * q.l2;
      el[t][2] += factor * q.l3;
    }
  });
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m.n_vertices());
  for (int t = 0; t < m.n_triangles(); ++t)
    for (int i = 0; i < 3; ++i) v[m.triangles[t][i]] += el[t][i];
  return v;
}

/// Nodal representation of a sum of point loads at mesh vertices:
/// weights[k] added at position nodes[k].
inline Eigen::VectorXd assemble_point_loads(const Mesh& m, const std::vector<int>& nodes,
                                            const std::vector<double>& weights) {
  if (nodes.size() != weights.size())
    throw InvalidArgument("assemble_point_loads: node/weight count mismatch");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m.n_vertices());
  for (size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] < 0 || nodes[k] >= m.n_vertices())
      throw InvalidArgument("assemble_point_loads: node index out of range");
    v[nodes[k]] += weights[k];
  }
  return v;
}

}  // namespace ocfem
