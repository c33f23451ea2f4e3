#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "found/vmf.hpp"
#include "oracles.hpp"

using namespace found;
using namespace found::vmf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// log(kappa / (4 pi sinh kappa))
double log_c3(double kappa) {
  const double log_sinh =
      kappa > 20 ? kappa - std::log(2.0) + std::log1p(-std::exp(-2 * kappa)) : std::log(std::sinh(kappa));
  return std::log(kappa) - std::log(4 * std::numbers::pi) - log_sinh;
}

// Integral of the density over S^{d-1}, reduced to the cosine t = mu . z:
// C_d(k) |S^{d-2}| int_{-1}^{1} exp(k t) (1 - t^2)^{(d-3)/2} dt.
double total_mass(std::size_t d, double kappa) {
  const double log_c = log_norm_const(d, kappa);
  if (d == 2) {
    return oracle::simpson([&](double th) { return std::exp(log_c + kappa * std::cos(th)); }, 0.0,
                           2 * std::numbers::pi, 200000);
  }
  const double half = 0.5 * static_cast<double>(d - 1);
  const double sphere = 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
  const double expo = 0.5 * (static_cast<double>(d) - 3.0);
  return sphere * oracle::simpson(
                      [&](double t) {
                        const double w = expo == 0.0 ? 1.0 : std::pow(std::max(0.0, 1.0 - t * t), expo);
                        return std::exp(log_c + kappa * t) * w;
                      },
                      -1.0, 1.0, 200000);
}

std::vector<double> unit(std::vector<double> v) {
  const double n = norm(v);
  for (double& x : v) x /= n;
  return v;
}

// Batch of n unit rows near mu, all in class 0.
EmbeddingBatch batch_near(const std::vector<double>& mu, std::size_t n, std::uint64_t seed) {
  RandomStream rng = rng_stream(seed, 5);
  EmbeddingBatch b{mu.size(), {}, std::vector<std::uint32_t>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> z(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j) z[j] = mu[j] + 0.7 * rng.normal() / std::sqrt(double(mu.size()));
    z = unit(z);
    b.features.insert(b.features.end(), z.begin(), z.end());
  }
  return b;
}

PrototypeBank one_class(const std::vector<double>& mu, double kappa) {
  PrototypeBank bank(1, mu.size());
  VmfClassParams p{0, UnitVector(mu)};
  p.set_kappa(kappa);
  bank.set(0, p);
  return bank;
}

}  // namespace

TEST_CASE("d = 3 normalizer matches kappa / (4 pi sinh kappa)") {
  for (double kappa : {1e-3, 0.1, 1.0, 10.0, 100.0, 1e4}) CHECK_THAT(log_norm_const(3, kappa), WithinAbs(log_c3(kappa), 1e-10));
  CHECK_THAT(log_norm_const(3, 1.0), WithinAbs(-2.6924636, 1e-5));
}

TEST_CASE("density integrates to one") {
  for (std::size_t d : {2u, 3u, 5u, 8u})
    for (double kappa : {0.1, 1.0, 10.0, 100.0}) {
      INFO("d = " << d << ", kappa = " << kappa);
      CHECK_THAT(total_mass(d, kappa), WithinAbs(1.0, 1e-6));
    }
}

TEST_CASE("mean cosine is minus the derivative of log C") {
  for (std::size_t d : {2u, 3u, 16u, 512u})
    for (double kappa : {0.5, 5.0, 50.0, 500.0}) {
      // Five-point stencil; a wider step keeps cancellation in log C small.
      const double h = 1e-3 * kappa;
      auto f = [&](double k) { return log_norm_const(d, k); };
      const double fd = -(f(kappa - 2 * h) - 8 * f(kappa - h) + 8 * f(kappa + h) - f(kappa + 2 * h)) / (12 * h);
      // Rounding in log C, which reaches ~1e3 at d = 512, bounds what the stencil can resolve.
      const double noise = 1e-14 * std::abs(f(kappa)) / h;
      CHECK(std::abs(mean_cosine(d, kappa) - fd) <= std::max(1e-7 * std::abs(fd), noise));
    }
  for (double kappa : {0.5, 5.0, 50.0}) CHECK_THAT(mean_cosine(3, kappa), WithinAbs(1 / std::tanh(kappa) - 1 / kappa, 1e-13));
}

TEST_CASE("mean cosine is increasing in kappa and decreasing in d") {
  double prev = 0.0;
  for (double kappa = 0.01; kappa < 1e4; kappa *= 2) {
    const double a = mean_cosine(16, kappa);
    CHECK(a > prev);
    CHECK(mean_cosine(64, kappa) < a);
    prev = a;
  }
}

TEST_CASE("negative log-likelihood of a sample at the mode") {
  const PrototypeBank bank = one_class({0, 0, 1}, 1.0);
  const EmbeddingBatch b{3, {0, 0, 1}, {0}};
  CHECK_THAT(nll_loss(b, bank), WithinAbs(-log_c3(1.0) - 1.0, 1e-12));
  CHECK_THAT(nll_loss(b, bank), WithinAbs(1.6924636, 1e-6));
  const EmbeddingBatch anti{3, {0, 0, -1}, {0}};
  CHECK_THAT(nll_loss(anti, bank), WithinAbs(-log_c3(1.0) + 1.0, 1e-12));
}

TEST_CASE("loss is the mean over samples of each sample's class") {
  PrototypeBank bank(2, 2);
  VmfClassParams a{0, UnitVector({1.0, 0.0})}, b{1, UnitVector({0.0, 1.0})};
  a.set_kappa(2.0);
  b.set_kappa(7.0);
  bank.set(0, a);
  bank.set(1, b);
  const EmbeddingBatch batch{2, {1, 0, 0, 1, 1, 0}, {0, 1, 1}};
  const double expected = -(log_pdf(batch.row(0), a) + log_pdf(batch.row(1), b) + log_pdf(batch.row(2), b)) / 3.0;
  CHECK_THAT(nll_loss(batch, bank), WithinAbs(expected, 1e-12));
}

TEST_CASE("analytic gradients agree with finite differences") {
  for (std::size_t d : {2u, 3u, 8u, 512u})
    for (double kappa : {0.5, 5.0, 50.0}) {
      INFO("d = " << d << ", kappa = " << kappa);
      std::vector<double> mu(d);
      RandomStream rng = rng_stream(d, 9);
      for (double& x : mu) x = rng.normal();
      mu = unit(mu);
      const EmbeddingBatch batch = batch_near(mu, 6, d + 1);
      const PrototypeBank bank = one_class(mu, kappa);
      const NllGradient g = nll_grad(batch, bank);

      const double hk = 1e-4;
      const double fd_k = (nll_loss(batch, one_class(mu, kappa + hk)) - nll_loss(batch, one_class(mu, kappa - hk))) / (2 * hk);
      CHECK(std::abs(g.kappa[0] - fd_k) <= 1e-5 * std::max(std::abs(fd_k), 1e-3));

      double worst = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i)
        for (std::size_t j = 0; j < std::min<std::size_t>(d, 8); ++j) {
          const double hz = 1e-6;
          EmbeddingBatch plus = batch, minus = batch;
          plus.features[i * d + j] += hz;
          minus.features[i * d + j] -= hz;
          // The loss is linear in z; unnormalized perturbations isolate dL/dz.
          const double fd = (nll_loss(plus, bank) - nll_loss(minus, bank)) / (2 * hz);
          worst = std::max(worst, std::abs(g.features[i * d + j] - fd));
        }
      CHECK(worst <= 1e-6);
    }
}

TEST_CASE("tangent projection removes the radial part") {
  const std::vector<double> z = unit({1, 2, 2});
  std::vector<double> g = {3, -1, 0.5};
  project_tangent(z, g);
  CHECK_THAT(dot(z, g), WithinAbs(0.0, 1e-15));
}

TEST_CASE("EMA update examples") {
  VmfClassParams p{0, UnitVector({1.0, 0.0})};
  const std::vector<double> v = {0.0, 1.0};

  p.ema_momentum = 0.99;
  const VmfClassParams a = ema_update(p, v);
  CHECK_THAT(a.mu[0], WithinAbs(0.99 / std::hypot(0.99, 0.01), 1e-15));
  CHECK_THAT(a.mu[1], WithinAbs(0.01 / std::hypot(0.99, 0.01), 1e-15));
  CHECK_THAT(a.mu[0], WithinAbs(0.9999490, 1e-7));
  CHECK_THAT(a.mu[1], WithinAbs(0.0101005, 1e-7));

  p.ema_momentum = 0.0;
  const VmfClassParams b = ema_update(p, std::vector<double>{0.0, 1.0, 0.6, 0.8});
  CHECK_THAT(b.mu[0], WithinAbs(0.6 / std::hypot(0.6, 1.8), 1e-15));
  CHECK_THAT(b.mu[1], WithinAbs(1.8 / std::hypot(0.6, 1.8), 1e-15));

  p.ema_momentum = 1.0;
  CHECK(ema_update(p, v).mu == p.mu);
}

TEST_CASE("EMA leaves mu unchanged when the blend cancels") {
  VmfClassParams p{0, UnitVector({1.0, 0.0})};
  p.ema_momentum = 0.5;
  const VmfClassParams out = ema_update(p, std::vector<double>{-1.0, 0.0});
  CHECK(out.mu == p.mu);
  CHECK_THROWS_AS(ema_update(p, std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(ema_update(p, std::vector<double>{1, 0, 0}), std::invalid_argument);
}

TEST_CASE("EMA does not touch kappa") {
  VmfClassParams p{0, UnitVector({1.0, 0.0})};
  p.set_kappa(3.0);
  CHECK(ema_update(p, std::vector<double>{0.0, 1.0}).log_kappa == p.log_kappa);
}

TEST_CASE("prototype bank lifecycle") {
  PrototypeBank bank(3, 2, 10.0, 0.99);
  CHECK_FALSE(bank.has(0));
  CHECK_THROWS_AS(bank.at(1), DataError);
  bank.initialize(1, std::vector<double>{1, 0, 0, 1});
  REQUIRE(bank.has(1));
  CHECK_THAT(bank.at(1).mu[0], WithinAbs(std::sqrt(0.5), 1e-15));
  CHECK_THAT(bank.at(1).kappa(), WithinRel(10.0, 1e-14));
  CHECK(bank.at(1).ema_momentum == 0.99);
  CHECK_FALSE(bank.has(3));
  CHECK_THROWS_AS(bank.set(5, bank.at(1)), DataError);
  CHECK_THROWS_AS(PrototypeBank(2, 2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(PrototypeBank(2, 2, 10.0, 1.5), std::invalid_argument);
}

TEST_CASE("kappa stays within its clamp") {
  VmfClassParams p{0, UnitVector({1.0, 0.0})};
  p.set_kappa(1e9);
  CHECK(p.kappa() == Catch::Approx(kKappaMax));
  p.set_kappa(0.0);
  CHECK(p.kappa() == Catch::Approx(kKappaMin));
  p.log_kappa = 100.0;
  p.clamp_kappa();
  CHECK(p.kappa() == Catch::Approx(kKappaMax));
}

TEST_CASE("unit vector invariants") {
  CHECK_THROWS_AS(UnitVector({1.0}), std::invalid_argument);
  CHECK_THROWS_AS(UnitVector({1.0, 1.0}), DataError);
  CHECK_THROWS_AS(UnitVector::normalized({0.0, 1e-13}), NumericalError);
  CHECK(UnitVector::normalized({0.0, 3.0}) == UnitVector({0.0, 1.0}));
}

TEST_CASE("sampler draws unit vectors with the expected mean cosine") {
  for (std::size_t d : {2u, 3u, 10u})
    for (double kappa : {0.5, 4.0, 40.0}) {
      const UnitVector mu = UnitVector::normalized(std::vector<double>(d, 1.0));
      RandomStream rng = rng_stream(d, static_cast<std::uint64_t>(kappa * 10));
      const std::size_t n = 20000;
      const std::vector<double> rows = sample(mu, kappa, n, rng);
      double sum = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        std::span<const double> z(rows.data() + i * d, d);
        CHECK_THAT(norm(z), WithinAbs(1.0, 1e-12));
        const double c = dot(z, mu.values());
        sum += c;
        sq += c * c;
      }
      const double mean = sum / n, sd = std::sqrt(sq / n - mean * mean);
      INFO("d = " << d << ", kappa = " << kappa);
      CHECK_THAT(mean, WithinAbs(mean_cosine(d, kappa), 5.0 * sd / std::sqrt(double(n))));
    }
}

TEST_CASE("fit recovers direction and concentration from samples") {
  for (std::size_t d : {3u, 8u})
    for (double kappa : {5.0, 20.0, 100.0}) {
      std::vector<double> m(d);
      for (std::size_t j = 0; j < d; ++j) m[j] = std::cos(1.0 + static_cast<double>(j));
      const UnitVector mu = UnitVector::normalized(m);
      RandomStream rng = rng_stream(1234, d * 1000 + static_cast<std::uint64_t>(kappa));
      const FitResult f = fit(sample(mu, kappa, 10000, rng), d);
      INFO("d = " << d << ", kappa = " << kappa);
      CHECK(oracle::angle_deg({f.mu.values().begin(), f.mu.values().end()}, m) < 2.0);
      CHECK_THAT(f.kappa, WithinRel(kappa, 0.1));
    }
}

TEST_CASE("fit argument errors") {
  CHECK_THROWS_AS(fit(std::vector<double>{1, 0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(fit(std::vector<double>{1, 0, -1, 0}, 2), NumericalError);
  CHECK_THROWS_AS(fit(std::vector<double>{1, 0, 1}, 2), DataError);
  const FitResult same = fit(std::vector<double>{0, 1, 0, 1}, 2);
  CHECK(same.kappa == kKappaMax);
}

TEST_CASE("sampler is deterministic under its stream") {
  const UnitVector mu({0.0, 0.0, 1.0});
  RandomStream a = rng_stream(5, 1), b = rng_stream(5, 1);
  CHECK(sample(mu, 3.0, 100, a) == sample(mu, 3.0, 100, b));
  CHECK_THROWS_AS(sample(mu, 0.0, 10, a), std::invalid_argument);
}
