#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "found/error.hpp"
#include "found/image.hpp"
#include "found/rng.hpp"
#include "found/vmf.hpp"

namespace found::harness {

/// 2x2 average pooling, flattened (h, w, c). Odd trailing rows/cols are dropped.
inline std::vector<double> pooled_input(const ImageTensor& img) {
  const std::size_t ph = img.height() / 2, pw = img.width() / 2, c = img.channels();
  std::vector<double> out(ph * pw * c);
  for (std::size_t h = 0; h < ph; ++h)
    for (std::size_t w = 0; w < pw; ++w)
      for (std::size_t k = 0; k < c; ++k)
        out[(h * pw + w) * c + k] = 0.25 * (img.at(2 * h, 2 * w, k) + img.at(2 * h, 2 * w + 1, k) +
                                            img.at(2 * h + 1, 2 * w, k) + img.at(2 * h + 1, 2 * w + 1, k));
  return out;
}

/// Feature extractor tanh(W1 x + b1) followed by L2 normalization, and a
/// linear classifier W2 z + b2 over the unit feature z.
struct ToyModel {
  std::size_t input_dim = 0;
  std::size_t feature_dim = 0;
  std::size_t n_classes = 0;
  std::vector<double> w1, b1, w2, b2;

  static ToyModel init(std::size_t input_dim, std::size_t feature_dim, std::size_t n_classes, RandomStream& rng) {
    ToyModel m{input_dim, feature_dim, n_classes, std::vector<double>(feature_dim * input_dim),
               std::vector<double>(feature_dim, 0.0), std::vector<double>(n_classes * feature_dim),
               std::vector<double>(n_classes, 0.0)};
    const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(feature_dim));
    for (double& w : m.w1) w = s1 * rng.normal();
    for (double& w : m.w2) w = s2 * rng.normal();
    return m;
  }

  friend bool operator==(const ToyModel&, const ToyModel&) = default;
};

struct ForwardPass {
  std::size_t batch = 0;
  std::vector<double> hidden;    // u = tanh(a), B x d
  std::vector<double> norms;     // |u_i|
  std::vector<double> features;  // z = u / |u|, B x d
  std::vector<double> probs;     // softmax(logits), B x K
};

inline ForwardPass forward(const ToyModel& m, std::span<const double> inputs) {
  const std::size_t P = m.input_dim, d = m.feature_dim, K = m.n_classes;
  if (inputs.size() % P != 0) throw DataError("input rows do not match the model input dimension");
  ForwardPass f;
  f.batch = inputs.size() / P;
  f.hidden.resize(f.batch * d);
  f.norms.resize(f.batch);
  f.features.resize(f.batch * d);
  f.probs.resize(f.batch * K);
  for (std::size_t i = 0; i < f.batch; ++i) {
    const double* x = inputs.data() + i * P;
    double* u = f.hidden.data() + i * d;
    for (std::size_t r = 0; r < d; ++r) {
      double a = m.b1[r];
      const double* wr = m.w1.data() + r * P;
      for (std::size_t c = 0; c < P; ++c) a += wr[c] * x[c];
      u[r] = std::tanh(a);
    }
    const double n = std::max(vmf::norm(std::span<const double>(u, d)), 1e-12);
    f.norms[i] = n;
    double* z = f.features.data() + i * d;
    for (std::size_t r = 0; r < d; ++r) z[r] = u[r] / n;
    double* p = f.probs.data() + i * K;
    double top = -1e300;
    for (std::size_t k = 0; k < K; ++k) {
      double l = m.b2[k];
      for (std::size_t r = 0; r < d; ++r) l += m.w2[k * d + r] * z[r];
      p[k] = l;
      top = std::max(top, l);
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) sum += (p[k] = std::exp(p[k] - top));
    for (std::size_t k = 0; k < K; ++k) p[k] /= sum;
  }
  return f;
}

struct ModelGradient {
  std::vector<double> w1, b1, w2, b2;
};

struct LossAndGradient {
  double l_cls = 0.0;
  double l_vmf = 0.0;
  double l_total = 0.0;
  std::size_t vmf_count = 0;  // samples whose class has a prototype
  ModelGradient model;
  std::vector<double> log_kappa;  // dL_total / d log kappa_k
  ForwardPass pass;
};

/// L_total = L_cls + lambda_vmf * L_vMF for one minibatch, with gradients.
///
/// L_cls is mean softmax cross-entropy. L_vMF is the mean vMF negative
/// log-likelihood over samples whose class already has a prototype (0 when
/// none does). The vMF feature gradient is chained through the L2
/// normalization and tanh into W1, b1.
inline LossAndGradient loss_and_gradient(const ToyModel& m, std::span<const double> inputs,
                                         std::span<const std::uint32_t> labels, const vmf::PrototypeBank& bank,
                                         double lambda_vmf) {
  const std::size_t P = m.input_dim, d = m.feature_dim, K = m.n_classes;
  LossAndGradient out;
  out.pass = forward(m, inputs);
  const ForwardPass& f = out.pass;
  const std::size_t B = f.batch;
  if (labels.size() != B) throw DataError("label count does not match the batch");
  const double inv_b = 1.0 / static_cast<double>(B);

  std::vector<double> dz(B * d, 0.0);
  std::vector<double> dlogits(B * K);
  for (std::size_t i = 0; i < B; ++i) {
    const std::uint32_t y = labels[i];
    if (y >= K) throw DataError("label out of range");
    out.l_cls -= std::log(std::max(f.probs[i * K + y], 1e-300));
    for (std::size_t k = 0; k < K; ++k) dlogits[i * K + k] = (f.probs[i * K + k] - (k == y ? 1.0 : 0.0)) * inv_b;
  }
  out.l_cls *= inv_b;

  vmf::EmbeddingBatch included{d, {}, {}};
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < B; ++i) {
    if (!bank.has(labels[i])) continue;
    rows.push_back(i);
    included.labels.push_back(labels[i]);
    included.features.insert(included.features.end(), f.features.begin() + static_cast<std::ptrdiff_t>(i * d),
                             f.features.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
  }
  out.vmf_count = rows.size();
  out.log_kappa.assign(bank.n_classes(), 0.0);
  if (!rows.empty()) {
    out.l_vmf = vmf::nll_loss(included, bank);
    const vmf::NllGradient g = vmf::nll_grad(included, bank);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t j = 0; j < d; ++j) dz[rows[r] * d + j] += lambda_vmf * g.features[r * d + j];
    for (std::size_t k = 0; k < bank.n_classes(); ++k)
      if (bank.has(static_cast<std::uint32_t>(k)))
        out.log_kappa[k] = lambda_vmf * g.kappa[k] * bank.at(static_cast<std::uint32_t>(k)).kappa();
  }
  out.l_total = out.l_cls + lambda_vmf * out.l_vmf;

  ModelGradient& g = out.model;
  g.w1.assign(m.w1.size(), 0.0);
  g.b1.assign(m.b1.size(), 0.0);
  g.w2.assign(m.w2.size(), 0.0);
  g.b2.assign(m.b2.size(), 0.0);
  std::vector<double> da(d);
  for (std::size_t i = 0; i < B; ++i) {
    const double* z = f.features.data() + i * d;
    const double* u = f.hidden.data() + i * d;
    double* dzi = dz.data() + i * d;
    for (std::size_t k = 0; k < K; ++k) {
      const double gl = dlogits[i * K + k];
      g.b2[k] += gl;
      for (std::size_t r = 0; r < d; ++r) {
        g.w2[k * d + r] += gl * z[r];
        dzi[r] += gl * m.w2[k * d + r];
      }
    }
    // z = u / |u|  =>  du = (dz - z (z . dz)) / |u|
    double radial = 0.0;
    for (std::size_t r = 0; r < d; ++r) radial += z[r] * dzi[r];
    for (std::size_t r = 0; r < d; ++r) da[r] = (dzi[r] - z[r] * radial) / f.norms[i] * (1.0 - u[r] * u[r]);
    const double* x = inputs.data() + i * P;
    for (std::size_t r = 0; r < d; ++r) {
      g.b1[r] += da[r];
      double* gw = g.w1.data() + r * P;
      for (std::size_t c = 0; c < P; ++c) gw[c] += da[r] * x[c];
    }
  }
  return out;
}

inline void sgd_step(ToyModel& m, const ModelGradient& g, double lr) {
  auto step = [lr](std::vector<double>& w, const std::vector<double>& dw) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * dw[i];
  };
  step(m.w1, g.w1);
  step(m.b1, g.b1);
  step(m.w2, g.w2);
  step(m.b2, g.b2);
}

}  // namespace found::harness
