#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "found/bessel.hpp"
#include "found/error.hpp"
#include "found/rng.hpp"

namespace found::vmf {

inline constexpr double kKappaMin = 1e-4;
inline constexpr double kKappaMax = 1e5;
inline constexpr double kKappaInit = 10.0;
inline constexpr double kDefaultMomentum = 0.99;
inline constexpr double kUnitTolerance = 1e-6;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Point on the unit hypersphere S^{d-1}, d >= 2.
class UnitVector {
 public:
  explicit UnitVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw std::invalid_argument("unit vector needs dimension >= 2");
    if (std::abs(norm(values_) - 1.0) > kUnitTolerance) throw DataError("vector is not unit-norm");
  }

  // Scales v to unit length; throws NumericalError when ||v|| < 1e-12.
  static UnitVector normalized(std::vector<double> v) {
    const double n = norm(v);
    if (!(n >= 1e-12) || !std::isfinite(n)) throw NumericalError("cannot normalize a (near-)zero vector");
    for (double& x : v) x /= n;
    return UnitVector(std::move(v));
  }

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const UnitVector&, const UnitVector&) = default;

 private:
  std::vector<double> values_;
};

// Concentration is held as log(kappa) so gradient steps cannot leave (0, inf).
struct VmfClassParams {
  int class_id = 0;
  UnitVector mu;
  double log_kappa = std::log(kKappaInit);
  double ema_momentum = kDefaultMomentum;

  double kappa() const { return std::exp(log_kappa); }
  void set_kappa(double kappa) { log_kappa = std::log(std::clamp(kappa, kKappaMin, kKappaMax)); }
  void clamp_kappa() { log_kappa = std::clamp(log_kappa, std::log(kKappaMin), std::log(kKappaMax)); }
};

/// n x d features (unit rows) with integer class labels.
struct EmbeddingBatch {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return std::span(features).subspan(i * dim, dim); }

  void validate() const {
    if (dim < 2) throw DataError("embedding dimension must be >= 2");
    if (features.size() != labels.size() * dim) throw DataError("embedding feature count does not match n x d");
    for (std::size_t i = 0; i < size(); ++i)
      if (!(std::abs(norm(row(i)) - 1.0) <= kUnitTolerance))
        throw DataError("embedding row " + std::to_string(i) + " is not unit-norm");
  }

  std::vector<double> rows_of(std::uint32_t label) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i)
      if (labels[i] == label) out.insert(out.end(), row(i).begin(), row(i).end());
    return out;
  }
};

/// log C_d(kappa) = (d/2 - 1) log kappa - (d/2) log(2 pi) - log I_{d/2-1}(kappa).
inline double log_norm_const(std::size_t dim, double kappa) {
  if (dim < 2) throw std::invalid_argument("vMF dimension must be >= 2");
  if (!(kappa > 0.0)) throw std::invalid_argument("vMF concentration must be > 0");
  const double half = 0.5 * static_cast<double>(dim);
  const double nu = half - 1.0;
  const double v = nu * std::log(kappa) - half * std::log(2.0 * std::numbers::pi) - log_bessel_i(nu, kappa);
  if (!std::isfinite(v)) throw NumericalError("log C_d(kappa) is not finite for d=" + std::to_string(dim));
  return v;
}

/// A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa) = -d/dkappa log C_d(kappa);
/// the expected cosine between a draw and the mean direction.
inline double mean_cosine(std::size_t dim, double kappa) {
  if (dim < 2) throw std::invalid_argument("vMF dimension must be >= 2");
  if (!(kappa > 0.0)) throw std::invalid_argument("vMF concentration must be > 0");
  return bessel_ratio(0.5 * static_cast<double>(dim) - 1.0, kappa);
}

inline double log_pdf(std::span<const double> z, const VmfClassParams& params) {
  if (z.size() != params.mu.dim()) throw DataError("feature/prototype dimension mismatch");
  const double kappa = params.kappa();
  return log_norm_const(z.size(), kappa) + kappa * dot(params.mu.values(), z);
}

/// Per-class parameters indexed by class id; a class has no prototype until first observed.
class PrototypeBank {
 public:
  PrototypeBank(std::size_t n_classes, std::size_t dim, double kappa_init = kKappaInit,
                double momentum = kDefaultMomentum)
      : dim_(dim), kappa_init_(kappa_init), momentum_(momentum), classes_(n_classes) {
    if (dim < 2) throw std::invalid_argument("prototype dimension must be >= 2");
    if (!(kappa_init >= kKappaMin && kappa_init <= kKappaMax)) throw std::invalid_argument("kappa_init out of range");
    if (!(momentum >= 0.0 && momentum <= 1.0)) throw std::invalid_argument("EMA momentum must lie in [0, 1]");
  }

  std::size_t n_classes() const { return classes_.size(); }
  std::size_t dim() const { return dim_; }
  double momentum() const { return momentum_; }
  double kappa_init() const { return kappa_init_; }

  bool has(std::uint32_t k) const { return k < classes_.size() && classes_[k].has_value(); }

  const VmfClassParams& at(std::uint32_t k) const {
    if (!has(k)) throw DataError("no vMF parameters registered for class " + std::to_string(k));
    return *classes_[k];
  }
  VmfClassParams& at(std::uint32_t k) {
    if (!has(k)) throw DataError("no vMF parameters registered for class " + std::to_string(k));
    return *classes_[k];
  }

  void set(std::uint32_t k, VmfClassParams params) {
    if (k >= classes_.size()) throw DataError("class id " + std::to_string(k) + " out of range");
    if (params.mu.dim() != dim_) throw DataError("prototype dimension mismatch");
    classes_[k] = std::move(params);
  }

  // First observation seeds mu with the normalized batch mean.
  void initialize(std::uint32_t k, std::span<const double> rows) {
    std::vector<double> mean(dim_, 0.0);
    const std::size_t m = rows.size() / dim_;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < dim_; ++j) mean[j] += rows[i * dim_ + j];
    VmfClassParams p{static_cast<int>(k), UnitVector::normalized(std::move(mean)), 0.0, momentum_};
    p.set_kappa(kappa_init_);
    set(k, std::move(p));
  }

 private:
  std::size_t dim_;
  double kappa_init_;
  double momentum_;
  std::vector<std::optional<VmfClassParams>> classes_;
};

/// Mean negative log-likelihood of the batch under each sample's class vMF.
inline double nll_loss(const EmbeddingBatch& batch, const PrototypeBank& bank) {
  if (batch.size() == 0) throw DataError("vMF loss on an empty batch");
  if (batch.dim != bank.dim()) throw DataError("batch/prototype dimension mismatch");
  std::vector<double> log_c(bank.n_classes(), 0.0);
  std::vector<bool> cached(bank.n_classes(), false);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::uint32_t k = batch.labels[i];
    const VmfClassParams& p = bank.at(k);
    if (!cached[k]) {
      log_c[k] = log_norm_const(batch.dim, p.kappa());
      cached[k] = true;
    }
    total -= log_c[k] + p.kappa() * dot(p.mu.values(), batch.row(i));
  }
  return total / static_cast<double>(batch.size());
}

struct NllGradient {
  std::vector<double> features;  // n x d, ambient-space dL/dz
  std::vector<double> kappa;     // per class dL/dkappa (0 for classes absent from the batch)
};

/// dL/dz_i = -(kappa_k / n) mu_k; dL/dkappa_k = (1/n) sum_{i in k} (A_d(kappa_k) - mu_k . z_i).
/// mu gets no gradient.
inline NllGradient nll_grad(const EmbeddingBatch& batch, const PrototypeBank& bank) {
  if (batch.size() == 0) throw DataError("vMF gradient on an empty batch");
  if (batch.dim != bank.dim()) throw DataError("batch/prototype dimension mismatch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  NllGradient g{std::vector<double>(batch.features.size(), 0.0), std::vector<double>(bank.n_classes(), 0.0)};
  std::vector<double> a(bank.n_classes(), -1.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::uint32_t k = batch.labels[i];
    const VmfClassParams& p = bank.at(k);
    const double kappa = p.kappa();
    if (a[k] < 0.0) a[k] = mean_cosine(batch.dim, kappa);
    auto z = batch.row(i);
    for (std::size_t j = 0; j < batch.dim; ++j) g.features[i * batch.dim + j] = -kappa * inv_n * p.mu[j];
    g.kappa[k] += inv_n * (a[k] - dot(p.mu.values(), z));
  }
  return g;
}

// Removes the radial component of g at the unit point z.
inline void project_tangent(std::span<const double> z, std::span<double> g) {
  const double r = dot(z, g);
  for (std::size_t j = 0; j < g.size(); ++j) g[j] -= r * z[j];
}

/// mu' = normalize(m * mu + (1 - m) * mean(rows)). kappa is untouched. A no-op
/// when the blended vector has norm below 1e-12.
inline VmfClassParams ema_update(const VmfClassParams& params, std::span<const double> class_features) {
  const std::size_t d = params.mu.dim();
  if (class_features.empty() || class_features.size() % d != 0)
    throw std::invalid_argument("ema_update needs at least one feature row of the prototype dimension");
  const double m = params.ema_momentum;
  if (m == 1.0) return params;
  const std::size_t rows = class_features.size() / d;
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += class_features[i * d + j];
  std::vector<double> blended(d);
  for (std::size_t j = 0; j < d; ++j) blended[j] = m * params.mu[j] + (1.0 - m) * (mean[j] / static_cast<double>(rows));
  if (norm(blended) < 1e-12) return params;
  VmfClassParams out = params;
  out.mu = UnitVector::normalized(std::move(blended));
  return out;
}

struct FitResult {
  UnitVector mu;
  double kappa;
  double mean_resultant;
};

/// Maximum-likelihood direction and the approximate concentration
/// kappa = R(d - R^2) / (1 - R^2), capped at kKappaMax.
inline FitResult fit(std::span<const double> rows, std::size_t dim) {
  if (dim < 2) throw std::invalid_argument("fit needs dimension >= 2");
  if (rows.size() % dim != 0) throw DataError("fit rows are not a multiple of the dimension");
  const std::size_t n = rows.size() / dim;
  if (n < 2) throw std::invalid_argument("fit needs at least two samples");
  std::vector<double> sum(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) sum[j] += rows[i * dim + j];
  const double len = norm(sum);
  if (!(len > 1e-12)) throw NumericalError("fit: resultant vector is zero");
  const double r = std::min(len / static_cast<double>(n), 1.0);
  const double d = static_cast<double>(dim);
  double kappa = kKappaMax;
  if (r < 1.0) kappa = std::min(r * (d - r * r) / (1.0 - r * r), kKappaMax);
  return {UnitVector::normalized(std::move(sum)), kappa, r};
}

/// n i.i.d. draws from vMF(mu, kappa), row-major n x d.
///
/// Wood's rejection sampler for the cosine w = mu . z, then a uniform
/// direction in the tangent space of mu.
inline std::vector<double> sample(const UnitVector& mu, double kappa, std::size_t n, RandomStream& rng) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("sample needs finite kappa > 0");
  const std::size_t d = mu.dim();
  const double dm1 = static_cast<double>(d - 1);
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);

  std::vector<double> out(n * d);
  std::vector<double> v(d);
  for (std::size_t i = 0; i < n; ++i) {
    double w = 0.0;
    for (;;) {
      const double beta = rng.beta(0.5 * dm1, 0.5 * dm1);
      w = (1.0 - (1.0 + b) * beta) / (1.0 - (1.0 - b) * beta);
      const double u = rng.uniform();
      if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
    }
    w = std::clamp(w, -1.0, 1.0);
    double vn = 0.0;
    do {
      for (double& x : v) x = rng.normal();
      const double r = dot(v, mu.values());
      for (std::size_t j = 0; j < d; ++j) v[j] -= r * mu[j];
      vn = norm(v);
    } while (vn < 1e-12);
    const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
    std::span<double> z(out.data() + i * d, d);
    for (std::size_t j = 0; j < d; ++j) z[j] = w * mu[j] + s * v[j] / vn;
    const double zn = norm(z);
    for (double& x : z) x /= zn;
  }
  return out;
}

}  // namespace found::vmf
