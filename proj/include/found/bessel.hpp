#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "found/error.hpp"

namespace found {

namespace detail {

// Polynomials u_k(t) of the uniform (Debye) expansion of I_nu(nu z), from
//   u_{k+1}(t) = t^2 (1 - t^2) u_k'(t) / 2 + (1/8) int_0^t (1 - 5 s^2) u_k(s) ds.
// Coefficients are indexed by power of t.
inline const std::vector<std::vector<double>>& debye_polynomials() {
  static const std::vector<std::vector<double>> polys = [] {
    constexpr int kTerms = 9;
    std::vector<std::vector<double>> u(kTerms);
    u[0] = {1.0};
    for (int k = 0; k + 1 < kTerms; ++k) {
      const auto& p = u[k];
      std::vector<double> next(p.size() + 3, 0.0);
      for (std::size_t j = 1; j < p.size(); ++j) {
        // t^2 (1 - t^2) * j p_j t^{j-1} / 2
        next[j + 1] += 0.5 * static_cast<double>(j) * p[j];
        next[j + 3] -= 0.5 * static_cast<double>(j) * p[j];
      }
      for (std::size_t j = 0; j < p.size(); ++j) {
        // (1/8) int (p_j s^j - 5 p_j s^{j+2})
        next[j + 1] += p[j] / (8.0 * static_cast<double>(j + 1));
        next[j + 3] -= 5.0 * p[j] / (8.0 * static_cast<double>(j + 3));
      }
      u[k + 1] = std::move(next);
    }
    return u;
  }();
  return polys;
}

inline double eval_poly(const std::vector<double>& c, double t) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
  return acc;
}

// log I_nu(x) from the uniform asymptotic expansion; accurate for nu >= ~50
// and any x > 0.
inline double log_bessel_i_debye(double nu, double x) {
  const double z = x / nu;
  const double root = std::sqrt(1.0 + z * z);
  const double t = 1.0 / root;
  const double eta = root + std::log(z / (1.0 + root));
  const auto& u = debye_polynomials();
  double series = 0.0;
  double inv_pow = 1.0;
  for (const auto& poly : u) {
    series += eval_poly(poly, t) * inv_pow;
    inv_pow /= nu;
  }
  return nu * eta - 0.5 * std::log(2.0 * std::numbers::pi * nu) - 0.5 * std::log(root) + std::log(series);
}

}  // namespace detail

struct BesselEval {
  double log_i;  // log I_nu(x)
  double ratio;  // I_{nu+1}(x) / I_nu(x)
};

/// Modified Bessel function of the first kind in log space, with the ratio of
/// successive orders.
///
/// Orders below kDebyeMinOrder are reached from order nu + M >= kDebyeMinOrder
/// (uniform expansion) by the downward ratio recurrence
///   I_{n-1}/I_n = 2n/x + I_{n+1}/I_n,
/// which is stable for I. No overflow for any x handled in log space.
inline BesselEval bessel_i_eval(double nu, double x) {
  constexpr double kDebyeMinOrder = 50.0;
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw std::invalid_argument("Bessel order must be finite and >= 0");
  if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("Bessel argument must be finite and > 0");

  const double steps = nu >= kDebyeMinOrder ? 0.0 : std::ceil(kDebyeMinOrder - nu);
  const double top = nu + steps;
  const double log_top = detail::log_bessel_i_debye(top, x);
  double ratio = std::exp(detail::log_bessel_i_debye(top + 1.0, x) - log_top);
  double log_drop = 0.0;  // log(I_top / I_nu)
  for (double n = top; n > nu + 0.5; n -= 1.0) {
    ratio = 1.0 / (2.0 * n / x + ratio);  // now I_n / I_{n-1}
    log_drop += std::log(ratio);
  }
  return {log_top - log_drop, ratio};
}

inline double log_bessel_i(double nu, double x) { return bessel_i_eval(nu, x).log_i; }

inline double bessel_ratio(double nu, double x) { return bessel_i_eval(nu, x).ratio; }

}  // namespace found
