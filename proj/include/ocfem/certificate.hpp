#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "ocfem/kkt.hpp"
#include "ocfem/norms.hpp"

namespace ocfem {

/// Inputs of the global-optimality threshold together with the derived
/// exponents q = (3r-2)/(r-1) and rho = (r+q)/(rq).
struct CertificateParams {
  double alpha;
  double r;
  double M;
  double C_q;
  double q;
  double rho;

  CertificateParams(double alpha_, double r_, double M_, double C_q_)
      : alpha(alpha_), r(r_), M(M_), C_q(C_q_) {
    if (alpha <= 0.0) throw InvalidArgument("CertificateParams: alpha must be positive");
    if (r <= 1.0) throw InvalidArgument("CertificateParams: r must exceed 1");
    if (M < 0.0) throw InvalidArgument("CertificateParams: M must be nonnegative");
    if (C_q <= 0.0) throw InvalidArgument("CertificateParams: C_q must be positive");
    q = (3.0 * r - 2.0) / (r - 1.0);
    rho = (r + q) / (r * q);
    if (!(q > 2.0) || !(rho > 0.0 && rho < 2.0))
      throw InvalidArgument("CertificateParams: derived exponents escaped their range");
  }
};

enum class Classification { unique_global, global, inconclusive };

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::unique_global:
      return "unique_global";
    case Classification::global:
      return "global";
    default:
      return "inconclusive";
  }
}

struct CertificateVerdict {
  double eta_value = 0.0;
  double p_norm = 0.0;
  double margin = 0.0;  // eta_value - p_norm
  Classification classification = Classification::inconclusive;
};

/// Threshold eta(alpha, r). An affine nonlinearity (M = 0) makes the problem
/// convex and the threshold infinite.
inline double eta(const CertificateParams& c) {
  if (c.M == 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(c.alpha, c.rho / 2.0) * std::pow(c.C_q, (2.0 - 2.0 * c.r) / c.r) / c.M *
         std::pow((c.r - 1.0) / (2.0 * c.r - 1.0), (1.0 - c.r) / c.r) *
         std::pow(c.q, 1.0 / c.q) * std::pow(c.r, 1.0 / c.r) * std::pow(c.rho, c.rho / 2.0) *
         std::pow(2.0 - c.rho, c.rho / 2.0 - 1.0);
}

/// Tabulated upper bound on the Gagliardo-Nirenberg embedding constant.
inline double gn_constant_bound(double q) {
  if (std::abs(q - 4.0) < 1e-12) return 0.648027075;
  throw UnsupportedError("gn_constant_bound: no tabulated bound for q = " + std::to_string(q) +
                         "; supply C_q manually in the configuration");
}

namespace detail {

inline Classification classify(double p_norm, double eta_value) {
  if (std::isinf(eta_value)) return Classification::unique_global;
  if (std::abs(p_norm - eta_value) <= 1e-14) return Classification::global;
  return p_norm < eta_value ? Classification::unique_global : Classification::inconclusive;
}

}  // namespace detail

/// Classifies a first-order point through the adjoint smallness test
/// ||p||_{Lq} <= eta(alpha, r). The stored kkt_residual guards against
/// certifying non-stationary points; solve_kkt fills it in.
inline CertificateVerdict certify(const KktSolution& sol, const ProblemSpec& spec,
                                  const MeshPtr& m,
                                  std::optional<double> C_q_override = std::nullopt) {
  if (!(sol.kkt_residual <= 1e-8))
    throw InvalidArgument("certify: refusing a point with first-order residual " +
                          std::to_string(sol.kkt_residual));
  if (sol.p.mesh != m) throw InvalidArgument("certify: solution lives on a different mesh");

  CertificateVerdict v;
  if (spec.phi.M == 0.0) {
    const double q_exp = (3.0 * spec.phi.r - 2.0) / (spec.phi.r - 1.0);
    v.eta_value = std::numeric_limits<double>::infinity();
    v.p_norm = norm(sol.p, Lq{q_exp});
    v.margin = std::numeric_limits<double>::infinity();
    v.classification = Classification::unique_global;
    return v;
  }

  const double q_exp = (3.0 * spec.phi.r - 2.0) / (spec.phi.r - 1.0);
  const double C_q = C_q_override ? *C_q_override : gn_constant_bound(q_exp);
  const CertificateParams params(spec.alpha, spec.phi.r, spec.phi.M, C_q);
  v.eta_value = eta(params);
  v.p_norm = norm(sol.p, Lq{params.q});
  v.margin = v.eta_value - v.p_norm;
  v.classification = detail::classify(v.p_norm, v.eta_value);
  return v;
}

}  // namespace ocfem
