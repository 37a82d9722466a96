#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ocfem/errors.hpp"

namespace ocfem {

/// Monotone C^2 nonlinearity with its derivatives and growth parameters
/// (r, M) satisfying |phi''(s)| <= M phi'(s)^(1/r).
struct Nonlinearity {
  std::string name;
  std::function<double(double)> phi;
  std::function<double(double)> dphi;
  std::function<double(double)> d2phi;
  double r = 2.0;
  double M = 0.0;
  bool linear = false;
};

inline Nonlinearity make_linear() {
  Nonlinearity n;
  n.name = "linear";
  n.phi = [](double s) { return s; };
  n.dphi = [](double) { return 1.0; };
  n.d2phi = [](double) { return 0.0; };
  n.r = 2.0;
  n.M = 0.0;
  n.linear = true;
  return n;
}

inline Nonlinearity make_cubic() {
  Nonlinearity n;
  n.name = "cubic";
  n.phi = [](double s) { return s * s * s; };
  n.dphi = [](double s) { return 3.0 * s * s; };
  n.d2phi = [](double s) { return 6.0 * s; };
  n.r = 2.0;
  n.M = 2.0 * std::sqrt(3.0);  // |6s| = 2*sqrt(3)*sqrt(3 s^2), tight
  return n;
}

inline Nonlinearity make_linear_cubic() {
  Nonlinearity n;
  n.name = "linear_cubic";
  n.phi = [](double s) { return s + s * s * s; };
  n.dphi = [](double s) { return 1.0 + 3.0 * s * s; };
  n.d2phi = [](double s) { return 6.0 * s; };
  n.r = 2.0;
  n.M = 2.0 * std::sqrt(3.0);  // |6s| <= 2*sqrt(3)*sqrt(1+3 s^2)
  return n;
}

/// Polynomial phi(s) = sum coeffs[k] s^k with user-supplied growth data.
inline Nonlinearity make_polynomial(std::vector<double> coeffs, double r, double M) {
  if (coeffs.empty()) throw InvalidArgument("polynomial nonlinearity needs coefficients");
  if (!(r > 1.0)) throw InvalidArgument("growth exponent r must exceed 1");
  if (M < 0.0) throw InvalidArgument("growth constant M must be nonnegative");
  Nonlinearity n;
  n.name = "polynomial";
  auto horner = [](const std::vector<double>& c, double s) {
    double v = 0.0;
    for (size_t k = c.size(); k-- > 0;) v = v * s + c[k];
    return v;
  };
  std::vector<double> d1(coeffs.size() > 1 ? coeffs.size() - 1 : 0);
  for (size_t k = 1; k < coeffs.size(); ++k) d1[k - 1] = k * coeffs[k];
  std::vector<double> d2(d1.size() > 1 ? d1.size() - 1 : 0);
  for (size_t k = 1; k < d1.size(); ++k) d2[k - 1] = k * d1[k];
  n.phi = [coeffs, horner](double s) { return horner(coeffs, s); };
  n.dphi = [d1, horner](double s) { return horner(d1, s); };
  n.d2phi = [d2, horner](double s) { return horner(d2, s); };
  n.r = r;
  n.M = M;
  n.linear = coeffs.size() <= 2;
  return n;
}

/// Sampled check that phi' >= 0 on [lo, hi].
inline bool check_monotone(const Nonlinearity& n, double lo = -100.0, double hi = 100.0,
                           int samples = 20001) {
  for (int i = 0; i < samples; ++i) {
    const double s = lo + (hi - lo) * i / (samples - 1);
    if (n.dphi(s) < 0.0) return false;
  }
  return true;
}

/// Sampled check of the growth condition |phi''(s)| <= M phi'(s)^(1/r) + 1e-12.
inline bool check_growth(const Nonlinearity& n, double lo = -100.0, double hi = 100.0,
                         int samples = 20001) {
  for (int i = 0; i < samples; ++i) {
    const double s = lo + (hi - lo) * i / (samples - 1);
    const double dp = n.dphi(s);
    if (dp < 0.0) return false;
    if (std::abs(n.d2phi(s)) > n.M * std::pow(dp, 1.0 / n.r) + 1e-12) return false;
  }
  return true;
}

}  // namespace ocfem
