#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "found/bessel.hpp"

using namespace found;

namespace {

// log I_nu(x) by the ascending series, summed in long double relative to the
// largest term.
double log_i_series(double nu, double x) {
  const long double half = x / 2.0L;
  std::vector<long double> logs;
  long double peak = -INFINITY;
  for (int k = 0; k < 100000; ++k) {
    const long double t = (2.0L * k + nu) * std::log(half) - std::lgamma(k + 1.0L) - std::lgamma(k + nu + 1.0L);
    logs.push_back(t);
    peak = std::max(peak, t);
    if (k > x && t < peak - 60.0L) break;  // past the largest term
  }
  const long double top = *std::max_element(logs.begin(), logs.end());
  long double s = 0.0L;
  for (long double t : logs) s += std::exp(t - top);
  return static_cast<double>(top + std::log(s));
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("Debye polynomials match the tabulated u1..u4") {
  const auto& u = detail::debye_polynomials();
  REQUIRE(u.size() >= 5);
  for (double t : {0.0, 0.2, 0.5, 0.9, 1.0}) {
    const double t2 = t * t, t3 = t2 * t, t4 = t2 * t2, t5 = t4 * t, t6 = t4 * t2, t7 = t6 * t, t8 = t4 * t4,
                 t9 = t8 * t, t10 = t8 * t2, t12 = t6 * t6;
    const double u1 = (3 * t - 5 * t3) / 24.0;
    const double u2 = (81 * t2 - 462 * t4 + 385 * t6) / 1152.0;
    const double u3 = (30375 * t3 - 369603 * t5 + 765765 * t7 - 425425 * t9) / 414720.0;
    const double u4 = (4465125 * t4 - 94121676 * t6 + 349922430 * t8 - 446185740 * t10 + 185910725 * t12) / 39813120.0;
    CHECK(detail::eval_poly(u[0], t) == 1.0);
    CHECK(std::abs(detail::eval_poly(u[1], t) - u1) <= 1e-15);
    CHECK(std::abs(detail::eval_poly(u[2], t) - u2) <= 1e-14);
    CHECK(std::abs(detail::eval_poly(u[3], t) - u3) <= 1e-13);
    CHECK(std::abs(detail::eval_poly(u[4], t) - u4) <= 1e-12);
  }
}

TEST_CASE("half-integer orders match their elementary closed forms") {
  for (double x : {1e-4, 0.01, 0.5, 1.0, 3.0, 10.0, 100.0, 700.0, 5000.0}) {
    // I_{1/2}(x) = sqrt(2 / (pi x)) sinh x
    const double log_sinh = x > 20 ? x - std::log(2.0) + std::log1p(-std::exp(-2 * x)) : std::log(std::sinh(x));
    const double expected = 0.5 * std::log(2.0 / (std::numbers::pi * x)) + log_sinh;
    INFO("x = " << x);
    CHECK(rel(log_bessel_i(0.5, x), expected) <= 1e-12);
    // I_{3/2} / I_{1/2} = coth x - 1/x
    const double coth_minus = x < 1e-2 ? x / 3.0 - x * x * x / 45.0 : 1.0 / std::tanh(x) - 1.0 / x;
    CHECK(rel(bessel_ratio(0.5, x), coth_minus) <= 1e-10);
  }
}

TEST_CASE("integer and large orders match the ascending series") {
  for (double nu : {0.0, 1.0, 2.5, 7.0, 31.0, 49.5, 50.0, 63.0, 255.0, 1023.0})
    for (double x : {1e-3, 0.3, 2.0, 15.0, 40.0, 120.0}) {
      INFO("nu = " << nu << ", x = " << x);
      const double ref = log_i_series(nu, x);
      CHECK(std::abs(log_bessel_i(nu, x) - ref) <= 1e-11 * std::max(1.0, std::abs(ref)));
      const double ratio_ref = std::exp(log_i_series(nu + 1.0, x) - ref);
      CHECK(rel(bessel_ratio(nu, x), ratio_ref) <= 1e-9);
    }
}

TEST_CASE("large argument follows the Hankel asymptotic form") {
  // log I_0(x) ~ x - log(2 pi x)/2 + log(1 + 1/(8x) + 9/(128x^2) + 225/(3072 x^3))
  for (double x : {1e4, 1e5}) {
    const double expected =
        x - 0.5 * std::log(2 * std::numbers::pi * x) + std::log1p(1 / (8 * x) + 9 / (128 * x * x) + 225 / (3072 * x * x * x));
    CHECK(std::abs(log_bessel_i(0.0, x) - expected) <= 1e-12 * x);
  }
}

TEST_CASE("no overflow in log space") {
  const double v = log_bessel_i(255.0, 1e5);
  CHECK(std::isfinite(v));
  CHECK(v > 9.9e4);
  CHECK(std::isfinite(log_bessel_i(0.0, 1e-10)));
  CHECK(std::isfinite(log_bessel_i(1000.0, 1e-6)));
}

TEST_CASE("ratio is increasing in x and below one") {
  for (double nu : {0.0, 0.5, 3.0, 255.0}) {
    double prev = 0.0;
    for (double x = 0.01; x < 2000.0; x *= 1.7) {
      const double r = bessel_ratio(nu, x);
      CHECK(r > prev);
      CHECK(r < 1.0);
      prev = r;
    }
  }
}

TEST_CASE("Bessel argument checks") {
  CHECK_THROWS_AS(log_bessel_i(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(log_bessel_i(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(log_bessel_i(1.0, std::nan("")), std::invalid_argument);
}
