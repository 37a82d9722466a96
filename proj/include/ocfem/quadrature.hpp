#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "ocfem/errors.hpp"

namespace ocfem {

/// One node of a triangle quadrature rule in barycentric coordinates.
/// Rule weights sum to one; integrals are weight-sum times triangle area.
struct QuadPoint {
  double l1, l2, l3, w;
};

namespace detail {

inline void push_orbit3(std::vector<QuadPoint>& r, double a, double b, double w) {
  r.push_back({a, b, b, w});
  r.push_back({b, a, b, w});
  r.push_back({b, b, a, w});
}

inline void push_orbit6(std::vector<QuadPoint>& r, double a, double b, double c, double w) {
  r.push_back({a, b, c, w});
  r.push_back({a, c, b, w});
  r.push_back({b, a, c, w});
  r.push_back({b, c, a, w});
  r.push_back({c, a, b, w});
  r.push_back({c, b, a, w});
}

/// Gauss nodes/weights on [-1,1] from the symmetric tridiagonal Jacobi matrix
/// (Golub-Welsch). diag/offdiag are the three-term recurrence coefficients,
/// mu0 the integral of the weight function.
inline void golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0,
                         std::vector<double>& nodes, std::vector<double>& weights) {
  const int n = static_cast<int>(diag.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = diag[i];
    if (i + 1 < n) {
      J(i, i + 1) = offdiag[i];
      J(i + 1, i) = offdiag[i];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
}

inline void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n), e(n - 1 > 0 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) e[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  golub_welsch(d, e, 2.0, nodes, weights);
  for (int i = 0; i < n; ++i) {
    nodes[i] = 0.5 * (nodes[i] + 1.0);
    weights[i] *= 0.5;
  }
}

/// Gauss-Jacobi rule on [0,1] with weight (1-x).
inline void gauss_jacobi10_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::VectorXd d(n), e(n - 1 > 0 ? n - 1 : 0);
  for (int k = 0; k < n; ++k) d[k] = -1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0));
  for (int k = 1; k < n; ++k) e[k - 1] = std::sqrt(k * (k + 1.0)) / (2.0 * k + 1.0);
  golub_welsch(d, e, 2.0, nodes, weights);
  for (int i = 0; i < n; ++i) {
    nodes[i] = 0.5 * (nodes[i] + 1.0);
    weights[i] *= 0.25;
  }
}

/// Conical-product rule on the reference triangle, exact for total degree 2n-1.
inline std::vector<QuadPoint> conical_product_rule(int n) {
  std::vector<double> xi, wxi, eta, weta;
  gauss_legendre_01(n, xi, wxi);
  gauss_jacobi10_01(n, eta, weta);
  std::vector<QuadPoint> r;
  r.reserve(static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = xi[i] * (1.0 - eta[j]);
      const double y = eta[j];
      // reference-triangle weights sum to 1/2; normalize to 1
      r.push_back({1.0 - x - y, x, y, 2.0 * wxi[i] * weta[j]});
    }
  return r;
}

inline std::vector<QuadPoint> build_rule(int degree) {
  std::vector<QuadPoint> r;
  switch (degree) {
    case 1:
      r.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0});
      break;
    case 2:
      push_orbit3(r, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0);
      break;
    case 3:
    case 4:
      push_orbit3(r, 0.816847572980459, 0.091576213509771, 0.109951743655322);
      push_orbit3(r, 0.108103018168070, 0.445948490915965, 0.223381589678011);
      break;
    case 5:
      r.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225});
      push_orbit3(r, 0.797426985353087, 0.101286507323456, 0.125939180544827);
      push_orbit3(r, 0.059715871789770, 0.470142064105115, 0.132394152788506);
      break;
    default:
      r = conical_product_rule((degree + 2) / 2);
      break;
  }
  return r;
}

}  // namespace detail

inline constexpr int max_quadrature_degree = 40;

/// Quadrature rule exact for polynomials of the given total degree.
/// Degrees 1-5 use symmetric tabulated rules; higher degrees a Gauss
/// conical-product rule computed to machine precision.
inline const std::vector<QuadPoint>& triangle_rule(int degree) {
  if (degree < 1) throw InvalidArgument("quadrature degree must be >= 1");
  if (degree > max_quadrature_degree)
    throw UnsupportedError("unsupported quadrature order " + std::to_string(degree) +
                           " (maximum " + std::to_string(max_quadrature_degree) + ")");
  static std::map<int, std::vector<QuadPoint>> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(degree);
  if (it == cache.end()) it = cache.emplace(degree, detail::build_rule(degree)).first;
  return it->second;
}

}  // namespace ocfem
