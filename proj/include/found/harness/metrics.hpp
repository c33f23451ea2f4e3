#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <vector>

#include "found/error.hpp"
#include "found/vmf.hpp"

namespace found::harness {

struct ClassCompactness {
  std::uint32_t label = 0;
  std::size_t count = 0;
  double mean_cosine = 0.0;  // mean pairwise cosine over i != j
};

/// Geometry of an embedding batch: per-class mean pairwise cosine and the
/// smallest angle (degrees) between normalized class centroids. Classes with
/// fewer than two samples are listed in `excluded` and left out of both.
struct CompactnessMetrics {
  std::vector<ClassCompactness> classes;
  std::vector<std::uint32_t> excluded;
  double mean_intra_cosine = std::numeric_limits<double>::quiet_NaN();
  double min_centroid_angle_deg = std::numeric_limits<double>::quiet_NaN();
};

inline CompactnessMetrics compactness_metrics(const vmf::EmbeddingBatch& batch) {
  const std::size_t d = batch.dim;
  std::map<std::uint32_t, std::pair<std::size_t, std::vector<double>>> sums;
  std::map<std::uint32_t, double> self_dots;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto& [count, sum] = sums[batch.labels[i]];
    if (sum.empty()) sum.assign(d, 0.0);
    ++count;
    auto z = batch.row(i);
    for (std::size_t j = 0; j < d; ++j) sum[j] += z[j];
    self_dots[batch.labels[i]] += vmf::dot(z, z);
  }

  CompactnessMetrics m;
  std::vector<std::vector<double>> centroids;
  double intra = 0.0;
  for (const auto& [label, entry] : sums) {
    const auto& [count, sum] = entry;
    if (count < 2) {
      m.excluded.push_back(label);
      continue;
    }
    // sum_{i != j} z_i . z_j = |sum z|^2 - sum |z_i|^2
    const double pair_sum = vmf::dot(sum, sum) - self_dots[label];
    const double n = static_cast<double>(count);
    const double mean_cos = pair_sum / (n * (n - 1.0));
    m.classes.push_back({label, count, mean_cos});
    intra += mean_cos;
    const double len = vmf::norm(sum);
    std::vector<double> c(d, 0.0);
    if (len > 0.0)
      for (std::size_t j = 0; j < d; ++j) c[j] = sum[j] / len;
    centroids.push_back(std::move(c));
  }
  if (!m.classes.empty()) m.mean_intra_cosine = intra / static_cast<double>(m.classes.size());
  for (std::size_t a = 0; a < centroids.size(); ++a) {
    for (std::size_t b = a + 1; b < centroids.size(); ++b) {
      const double cosine = std::clamp(vmf::dot(centroids[a], centroids[b]), -1.0, 1.0);
      const double angle = std::acos(cosine) * 180.0 / std::numbers::pi;
      if (std::isnan(m.min_centroid_angle_deg) || angle < m.min_centroid_angle_deg) m.min_centroid_angle_deg = angle;
    }
  }
  return m;
}

}  // namespace found::harness
