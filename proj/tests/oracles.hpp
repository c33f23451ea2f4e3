#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library code under test.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <unistd.h>

#include "found/image.hpp"
#include "found/rng.hpp"

namespace oracle {

using LComplex = std::complex<long double>;

/// Direct double sum F(c,u,v) = sum_h sum_w x(h,w,c) exp(-2 pi i (hu/H + wv/W)),
/// channel-planar output (c, u, v). sign = +1 gives the unnormalized inverse kernel.
inline std::vector<LComplex> dft2d(const std::vector<LComplex>& planes, std::size_t C, std::size_t H, std::size_t W,
                                   int sign = -1) {
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  std::vector<LComplex> out(C * H * W);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t u = 0; u < H; ++u)
      for (std::size_t v = 0; v < W; ++v) {
        LComplex acc = 0;
        for (std::size_t h = 0; h < H; ++h)
          for (std::size_t w = 0; w < W; ++w) {
            const long double frac = static_cast<long double>((h * u) % H) / H + static_cast<long double>((w * v) % W) / W;
            const long double a = sign * two_pi * frac;
            acc += planes[(c * H + h) * W + w] * LComplex(std::cos(a), std::sin(a));
          }
        out[(c * H + u) * W + v] = acc;
      }
  return out;
}

// Image (h, w, c) -> channel-planar complex planes.
inline std::vector<LComplex> planes_of(const found::ImageTensor& img) {
  const std::size_t H = img.height(), W = img.width(), C = img.channels();
  std::vector<LComplex> p(C * H * W);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) p[(c * H + h) * W + w] = img.at(h, w, c);
  return p;
}

inline found::ImageTensor random_image(std::size_t H, std::size_t W, std::size_t C, std::uint64_t seed) {
  found::RandomStream rng = found::rng_stream(seed, 0xfeed);
  found::ImageTensor img(H, W, C);
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t w = 0; w < W; ++w)
      for (std::size_t c = 0; c < C; ++c) img.at(h, w, c) = rng.uniform();
  return img;
}

/// Eigenvalues of a symmetric 3x3 matrix, descending, by the trigonometric
/// closed form of the characteristic cubic.
inline std::array<double, 3> symmetric3_eigenvalues(const std::array<double, 9>& a) {
  const double p1 = a[1] * a[1] + a[2] * a[2] + a[5] * a[5];
  const double q = (a[0] + a[4] + a[8]) / 3.0;
  if (p1 == 0.0) {
    std::array<double, 3> e{a[0], a[4], a[8]};
    std::ranges::sort(e, std::greater<>());
    return e;
  }
  const double p2 = (a[0] - q) * (a[0] - q) + (a[4] - q) * (a[4] - q) + (a[8] - q) * (a[8] - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  std::array<double, 9> b;
  for (int i = 0; i < 9; ++i) b[i] = (a[i] - (i % 4 == 0 ? q : 0.0)) / p;
  const double det = b[0] * (b[4] * b[8] - b[5] * b[7]) - b[1] * (b[3] * b[8] - b[5] * b[6]) +
                     b[2] * (b[3] * b[7] - b[4] * b[6]);
  const double r = std::clamp(det / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2.0 * p * std::cos(phi);
  const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  return {e1, 3.0 * q - e1 - e3, e3};
}

/// Composite Simpson rule with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  if (n % 2) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Angle in degrees between two vectors.
inline double angle_deg(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return std::acos(std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

/// Fresh empty directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() /
                     ("found_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace oracle
