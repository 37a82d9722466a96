#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ocfem/errors.hpp"
#include "ocfem/geometry.hpp"

namespace ocfem {

/// Conforming triangulation with positively oriented triangles.
/// Immutable after construction; share via MeshPtr.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<unsigned char> boundary_mask;
  int level = 0;
  double h = 0.0;

  /// Coarse mesh this one was refined from, if any.
  std::shared_ptr<const Mesh> parent;
  /// Per-vertex provenance in parent indexing: {a,a} copies parent vertex a,
  /// {a,b} with a<b is the midpoint of parent edge (a,b). Empty for root meshes.
  std::vector<std::array<int, 2>> parent_sources;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const {
    const auto& tri = triangles[t];
    return 0.5 * signed_area2(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
  }

  Vec2 centroid(int t) const {
    const auto& tri = triangles[t];
    return (1.0 / 3.0) * (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]);
  }

  double longest_edge(int t) const {
    const auto& tri = triangles[t];
    double e = 0.0;
    for (int k = 0; k < 3; ++k) {
      const Vec2 d = vertices[tri[k]] - vertices[tri[(k + 1) % 3]];
      e = std::max(e, std::sqrt(d.x * d.x + d.y * d.y));
    }
    return e;
  }

  /// Quasi-uniformity diagnostic: (max circumradius) / (min inradius).
  double shape_ratio() const {
    double max_circ = 0.0, min_in = std::numeric_limits<double>::infinity();
    for (int t = 0; t < n_triangles(); ++t) {
      const auto& tri = triangles[t];
      double len[3];
      for (int k = 0; k < 3; ++k) {
        const Vec2 d = vertices[tri[k]] - vertices[tri[(k + 1) % 3]];
        len[k] = std::sqrt(d.x * d.x + d.y * d.y);
      }
      const double area = triangle_area(t);
      const double s = 0.5 * (len[0] + len[1] + len[2]);
      max_circ = std::max(max_circ, len[0] * len[1] * len[2] / (4.0 * area));
      min_in = std::min(min_in, area / s);
    }
    return max_circ / min_in;
  }
};

using MeshPtr = std::shared_ptr<const Mesh>;

namespace detail {

inline double compute_h(const Mesh& m) {
  double h = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) h = std::max(h, m.longest_edge(t));
  return h;
}

/// Boundary vertices of a conforming mesh: endpoints of edges with a single
/// incident triangle. Also validates conformity (every edge borders 1 or 2
/// triangles) and positive orientation.
inline void finalize_topology(Mesh& m) {
  const int nv = m.n_vertices();
  std::map<std::pair<int, int>, int> edge_count;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      if (a < 0 || a >= nv || b < 0 || b >= nv)
        throw InvalidArgument("triangle vertex index out of range");
      ++edge_count[{std::min(a, b), std::max(a, b)}];
    }
    if (signed_area2(m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]) <= 0.0)
      throw InvalidArgument("triangle " + std::to_string(t) + " is not positively oriented");
  }
  m.boundary_mask.assign(nv, 0);
  for (const auto& [edge, count] : edge_count) {
    if (count > 2) throw InvalidArgument("non-conforming mesh: edge shared by >2 triangles");
    if (count == 1) {
      m.boundary_mask[edge.first] = 1;
      m.boundary_mask[edge.second] = 1;
    }
  }
  m.h = compute_h(m);
}

}  // namespace detail

/// Friedrichs-Keller triangulation of the unit square: n x n grid cells, each
/// split along the same diagonal. (n+1)^2 vertices, 2 n^2 triangles.
inline MeshPtr uniform_triangulation(int n) {
  if (n < 1) throw InvalidArgument("uniform_triangulation requires n >= 1");
  auto m = std::make_shared<Mesh>();
  m->vertices.reserve(static_cast<size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m->vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
  const auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  m->triangles.reserve(static_cast<size_t>(2) * n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      m->triangles.push_back({v00, v10, v11});
      m->triangles.push_back({v00, v11, v01});
    }
  detail::finalize_topology(*m);
  m->level = (n & (n - 1)) == 0 ? static_cast<int>(std::lround(std::log2(n))) : 0;
  return m;
}

/// Uniform red refinement: each triangle split into 4 congruent children via
/// edge midpoints. Coarse vertices keep their indices.
inline MeshPtr refine(const MeshPtr& coarse) {
  if (!coarse) throw InvalidArgument("refine: null mesh");
  auto fine = std::make_shared<Mesh>();
  fine->vertices = coarse->vertices;
  fine->parent = coarse;
  fine->parent_sources.reserve(coarse->n_vertices());
  for (int i = 0; i < coarse->n_vertices(); ++i) fine->parent_sources.push_back({i, i});

  std::map<std::pair<int, int>, int> midpoint;
  const auto mid = [&](int a, int b) {
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int idx = fine->n_vertices();
    fine->vertices.push_back(0.5 * (coarse->vertices[a] + coarse->vertices[b]));
    fine->parent_sources.push_back({key.first, key.second});
    midpoint.emplace(key, idx);
    return idx;
  };

  fine->triangles.reserve(static_cast<size_t>(4) * coarse->n_triangles());
  for (int t = 0; t < coarse->n_triangles(); ++t) {
    const auto [a, b, c] = coarse->triangles[t];
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    fine->triangles.push_back({a, ab, ca});
    fine->triangles.push_back({ab, b, bc});
    fine->triangles.push_back({ca, bc, c});
    fine->triangles.push_back({ab, bc, ca});
  }
  detail::finalize_topology(*fine);
  fine->level = coarse->level + 1;
  return fine;
}

/// Ascending indices of non-boundary vertices.
inline std::vector<int> interior_vertices(const Mesh& m) {
  std::vector<int> idx;
  for (int i = 0; i < m.n_vertices(); ++i)
    if (!m.boundary_mask[i]) idx.push_back(i);
  return idx;
}

/// Region K carrying the pointwise state constraints.
class ConstraintRegion {
 public:
  enum class Kind { empty, polygon, whole_domain };

  static ConstraintRegion make_empty() { return ConstraintRegion(Kind::empty, {}); }
  static ConstraintRegion make_whole_domain() { return ConstraintRegion(Kind::whole_domain, {}); }
  static ConstraintRegion make_polygon(std::vector<Vec2> verts) {
    if (verts.size() < 3) throw InvalidArgument("constraint polygon needs at least 3 vertices");
    double area2 = 0.0;
    for (size_t i = 0; i < verts.size(); ++i) {
      const Vec2 a = verts[i], b = verts[(i + 1) % verts.size()];
      area2 += cross(a, b);
    }
    if (area2 == 0.0) throw InvalidArgument("constraint polygon is degenerate");
    if (area2 < 0.0) std::reverse(verts.begin(), verts.end());
    return ConstraintRegion(Kind::polygon, std::move(verts));
  }

  Kind kind() const { return kind_; }
  const std::vector<Vec2>& polygon() const { return poly_; }

  double polygon_area() const {
    double area2 = 0.0;
    for (size_t i = 0; i < poly_.size(); ++i) area2 += cross(poly_[i], poly_[(i + 1) % poly_.size()]);
    return 0.5 * area2;
  }

  /// Closed-set membership test with boundary tolerance.
  bool contains(Vec2 p, double tol = 1e-12) const {
    if (kind_ == Kind::whole_domain) return true;
    if (kind_ == Kind::empty) return false;
    const size_t n = poly_.size();
    for (size_t i = 0; i < n; ++i)
      if (segment_distance(p, poly_[i], poly_[(i + 1) % n]) <= tol) return true;
    bool inside = false;
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2 a = poly_[i], b = poly_[j];
      if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
        inside = !inside;
    }
    return inside;
  }

 private:
  ConstraintRegion(Kind k, std::vector<Vec2> poly) : kind_(k), poly_(std::move(poly)) {}
  Kind kind_;
  std::vector<Vec2> poly_;
};

/// Constrained node set: vertices of triangles whose closure meets K
/// (polygon kind), all interior vertices (whole-domain kind), or none.
/// The polygon must be a union of closed mesh triangles; partial overlap
/// is rejected.
inline std::vector<int> constraint_nodes(const Mesh& m, const ConstraintRegion& k) {
  switch (k.kind()) {
    case ConstraintRegion::Kind::empty:
      return {};
    case ConstraintRegion::Kind::whole_domain:
      return interior_vertices(m);
    case ConstraintRegion::Kind::polygon:
      break;
  }
  const double tol = 1e-12;
  for (const Vec2& pv : k.polygon()) {
    bool found = false;
    for (const Vec2& mv : m.vertices)
      if (norm(pv - mv) <= tol) {
        found = true;
        break;
      }
    if (!found)
      throw AlignmentError("constraint region vertex (" + std::to_string(pv.x) + ", " +
                           std::to_string(pv.y) + ") is not a mesh vertex");
  }
  double member_area = 0.0;
  std::set<int> nodes;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    int in_count = 0;
    for (int v : tri) in_count += k.contains(m.vertices[v], tol) ? 1 : 0;
    const bool centroid_in = k.contains(m.centroid(t), tol);
    if (centroid_in) {
      if (in_count < 3)
        throw AlignmentError("triangle " + std::to_string(t) +
                             " straddles the constraint region boundary");
      member_area += m.triangle_area(t);
    }
    // closed intersection: touching K at a vertex or edge already counts
    if (in_count > 0)
      for (int v : tri) nodes.insert(v);
  }
  const double poly_area = k.polygon_area();
  if (std::abs(member_area - poly_area) > 1e-9 * std::max(1.0, poly_area))
    throw AlignmentError("constraint region is not a union of mesh triangles (area mismatch: " +
                         std::to_string(member_area) + " vs " + std::to_string(poly_area) + ")");
  return std::vector<int>(nodes.begin(), nodes.end());
}

/// Plain-text mesh serialization:
///   vertices <count> triangles <count>
///   x y                 (one vertex per line, 17 significant digits)
///   a b c               (one triangle per line, 0-based indices)
inline void save_mesh(const Mesh& m, std::ostream& os) {
  os << "vertices " << m.n_vertices() << " triangles " << m.n_triangles() << "\n";
  char buf[64];
  for (const Vec2& v : m.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x, v.y);
    os << buf;
  }
  for (const auto& t : m.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
}

inline void save_mesh(const Mesh& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open mesh file for writing: " + path);
  save_mesh(m, os);
  if (!os) throw IoError("failed writing mesh file: " + path);
}

inline MeshPtr load_mesh(std::istream& is) {
  std::string kw1, kw2;
  int nv = 0, nt = 0;
  if (!(is >> kw1 >> nv >> kw2 >> nt) || kw1 != "vertices" || kw2 != "triangles" || nv < 3 || nt < 1)
    throw InvalidArgument("malformed mesh header (expected 'vertices <count> triangles <count>')");
  auto m = std::make_shared<Mesh>();
  m->vertices.resize(nv);
  for (int i = 0; i < nv; ++i)
    if (!(is >> m->vertices[i].x >> m->vertices[i].y))
      throw InvalidArgument("malformed mesh vertex line " + std::to_string(i));
  m->triangles.resize(nt);
  for (int t = 0; t < nt; ++t)
    if (!(is >> m->triangles[t][0] >> m->triangles[t][1] >> m->triangles[t][2]))
      throw InvalidArgument("malformed mesh triangle line " + std::to_string(t));
  detail::finalize_topology(*m);
  return m;
}

inline MeshPtr load_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open mesh file: " + path);
  return load_mesh(is);
}

}  // namespace ocfem
