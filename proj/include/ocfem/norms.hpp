#pragma once

#include <cmath>

#include "ocfem/assembly.hpp"
#include "ocfem/fe_function.hpp"

namespace ocfem {

enum class NormKind { L2, H1, Linf };

/// Tag selecting the L^q norm.
struct Lq {
  double q;
};

inline double norm(const FeFunction& y, NormKind kind) {
  const Mesh& m = *y.mesh;
  switch (kind) {
    case NormKind::Linf:
      return y.coeffs.size() ? y.coeffs.cwiseAbs().maxCoeff() : 0.0;
    case NormKind::L2:
      return std::sqrt(assemble_mass(m).quadratic_form(y.coeffs));
    case NormKind::H1:
      return std::sqrt(assemble_mass(m).quadratic_form(y.coeffs) +
                       assemble_stiffness(m).quadratic_form(y.coeffs));
  }
  throw InvalidArgument("unknown norm kind");
}

/// L^q norm by per-triangle quadrature, exact for integer q (|y|^q is a
/// piecewise polynomial of degree q wherever y has one sign, and the rule is
/// exact for degree ceil(q)+1); order ceil(q)+2 for non-integer q.
inline double norm(const FeFunction& y, Lq lq) {
  const double q = lq.q;
  if (q < 1.0) throw InvalidArgument("Lq norm requires q >= 1");
  const bool integer_q = std::abs(q - std::round(q)) < 1e-12;
  const int degree = static_cast<int>(std::ceil(q)) + (integer_q ? 1 : 2);
  const auto& rule = triangle_rule(degree);
  const Mesh& m = *y.mesh;
  double acc = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const double area = m.triangle_area(t);
    double local = 0.0;
    for (const auto& p : rule)
      local += p.w * std::pow(std::abs(y.eval_local(t, {p.l1, p.l2, p.l3})), q);
    acc += area * local;
  }
  return std::pow(acc, 1.0 / q);
}

}  // namespace ocfem
