#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "found/error.hpp"
#include "found/format.hpp"
#include "found/io.hpp"
#include "found/vmf.hpp"

namespace found::harness {

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;
  bool degenerate = false;
};

/// Top-k eigenpairs of a symmetric positive semidefinite d x d matrix by power
/// iteration with deflation. Each vector is kept orthogonal to the previous
/// ones; its largest-magnitude component is made positive. A pair whose
/// eigenvalue is negligible relative to the trace is flagged degenerate and gets
/// an arbitrary orthonormal completion.
inline std::vector<EigenPair> top_eigenpairs(std::span<const double> matrix, std::size_t d, std::size_t k) {
  if (matrix.size() != d * d) throw DataError("matrix is not d x d");
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += matrix[i * d + i];
  const double negligible = 1e-12 * std::max(trace, 1e-300);

  std::vector<EigenPair> out;
  std::vector<double> deflated(matrix.begin(), matrix.end());
  auto orthogonalize = [&](std::vector<double>& v) {
    for (const EigenPair& p : out) {
      const double r = vmf::dot(v, p.vector);
      for (std::size_t j = 0; j < d; ++j) v[j] -= r * p.vector[j];
    }
  };
  auto normalize = [](std::vector<double>& v) {
    const double n = vmf::norm(v);
    if (n > 0.0)
      for (double& x : v) x /= n;
    return n;
  };

  for (std::size_t idx = 0; idx < std::min(k, d); ++idx) {
    std::vector<double> v(d), w(d);
    for (std::size_t j = 0; j < d; ++j) v[j] = 1.0 + 0.37 * static_cast<double>((j * 7 + idx * 3) % 11);
    orthogonalize(v);
    normalize(v);
    double lambda = 0.0;
    for (int it = 0; it < 100000; ++it) {
      for (std::size_t r = 0; r < d; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += deflated[r * d + c] * v[c];
        w[r] = s;
      }
      orthogonalize(w);
      lambda = vmf::dot(v, w);
      if (normalize(w) <= negligible) break;
      double delta = 0.0;
      for (std::size_t j = 0; j < d; ++j) delta = std::max(delta, std::abs(w[j] - v[j]));
      v.swap(w);
      if (delta < 1e-14) break;
    }
    EigenPair pair;
    if (lambda <= negligible) {
      pair.degenerate = true;
      lambda = std::max(lambda, 0.0);
      // Completion: first basis vector with a nonzero residual.
      for (std::size_t e = 0; e < d; ++e) {
        std::vector<double> b(d, 0.0);
        b[e] = 1.0;
        orthogonalize(b);
        if (normalize(b) > 1e-6) {
          v = b;
          break;
        }
      }
    }
    const auto big = std::ranges::max_element(v, {}, [](double x) { return std::abs(x); });
    if (*big < 0.0)
      for (double& x : v) x = -x;
    pair.value = lambda;
    pair.vector = v;
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) deflated[r * d + c] -= lambda * v[r] * v[c];
    out.push_back(std::move(pair));
  }
  return out;
}

struct PcaProjection {
  std::array<EigenPair, 2> axes;
  std::vector<double> coords;  // n x 2
  std::vector<std::string> warnings;
};

/// Projection of the centered rows onto the top two principal directions.
inline PcaProjection pca2(const vmf::EmbeddingBatch& batch) {
  const std::size_t n = batch.size();
  const std::size_t d = batch.dim;
  if (n < 3) throw DataError("PCA scatter needs at least 3 points");
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += batch.features[i * d + j] / static_cast<double>(n);
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < d; ++r) {
      const double xr = batch.features[i * d + r] - mean[r];
      for (std::size_t c = 0; c < d; ++c) cov[r * d + c] += xr * (batch.features[i * d + c] - mean[c]);
    }
  for (double& x : cov) x /= static_cast<double>(n);

  auto pairs = top_eigenpairs(cov, d, 2);
  PcaProjection p;
  p.axes = {pairs[0], pairs[1]};
  for (std::size_t a = 0; a < 2; ++a)
    if (p.axes[a].degenerate) p.warnings.push_back("principal axis " + std::to_string(a + 1) + " is degenerate (rank-deficient input)");
  p.coords.resize(2 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < 2; ++a) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += (batch.features[i * d + j] - mean[j]) * p.axes[a].vector[j];
      p.coords[2 * i + a] = s;
    }
  return p;
}

inline std::string scatter_csv(const PcaProjection& p, const vmf::EmbeddingBatch& batch) {
  std::string out = "x,y,label\n";
  for (std::size_t i = 0; i < batch.size(); ++i)
    out += format_double(p.coords[2 * i]) + "," + format_double(p.coords[2 * i + 1]) + "," +
           std::to_string(batch.labels[i]) + "\n";
  return out;
}

// One <circle> per point, colored by class.
inline std::string scatter_svg(const PcaProjection& p, const vmf::EmbeddingBatch& batch) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  constexpr double size = 480.0, margin = 20.0;
  double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    lo_x = std::min(lo_x, p.coords[2 * i]);
    hi_x = std::max(hi_x, p.coords[2 * i]);
    lo_y = std::min(lo_y, p.coords[2 * i + 1]);
    hi_y = std::max(hi_y, p.coords[2 * i + 1]);
  }
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  const double scale = (size - 2 * margin) / span;
  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"0 0 480 480\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"480\" height=\"480\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double x = margin + (p.coords[2 * i] - lo_x) * scale;
    const double y = size - margin - (p.coords[2 * i + 1] - lo_y) * scale;
    char buf[160];
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"2.5\" fill=\"%s\" fill-opacity=\"0.7\"/>\n", x, y,
                  palette[batch.labels[i] % 10]);
    svg += buf;
  }
  svg += "</svg>\n";
  return svg;
}

/// Writes <prefix>.svg and <prefix>.csv; returns warnings (degenerate axes).
inline std::vector<std::string> pca_scatter_export(const vmf::EmbeddingBatch& batch, const std::filesystem::path& prefix) {
  const PcaProjection p = pca2(batch);
  io::write_text(prefix.string() + ".svg", scatter_svg(p, batch));
  io::write_text(prefix.string() + ".csv", scatter_csv(p, batch));
  return p.warnings;
}

}  // namespace found::harness
