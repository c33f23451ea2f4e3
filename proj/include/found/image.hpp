#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "found/error.hpp"

namespace found {

struct Shape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t pixels() const { return height * width; }
  std::size_t size() const { return height * width * channels; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" + std::to_string(s.channels);
}

inline void check_shape(const Shape& s) {
  if (s.height == 0 || s.width == 0) throw DataError("zero-sized image dimension: " + to_string(s));
  if (s.channels != 1 && s.channels != 3) throw DataError("channel count must be 1 or 3: " + to_string(s));
}

/// Real-valued H x W x C image, interleaved row-major (h, w, c). Nominal range [0, 1].
class ImageTensor {
 public:
  ImageTensor() = default;

  ImageTensor(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0)
      : shape_{height, width, channels} {
    check_shape(shape_);
    data_.assign(shape_.size(), fill);
  }

  ImageTensor(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data)
      : shape_{height, width, channels}, data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_.size())
      throw DataError("image data length " + std::to_string(data_.size()) + " does not match " +
                      to_string(shape_));
  }

  const Shape& shape() const { return shape_; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t h, std::size_t w, std::size_t c) { return data_[(h * shape_.width + w) * shape_.channels + c]; }
  double at(std::size_t h, std::size_t w, std::size_t c) const {
    return data_[(h * shape_.width + w) * shape_.channels + c];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  void validate() const {
    check_shape(shape_);
    if (data_.size() != shape_.size()) throw DataError("image data length does not match its shape");
    if (!all_finite()) throw DataError("image contains non-finite values");
  }

  void clamp(double lo = 0.0, double hi = 1.0) {
    for (double& v : data_) v = std::clamp(v, lo, hi);
  }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

inline double max_abs_diff(const ImageTensor& a, const ImageTensor& b) {
  if (a.shape() != b.shape()) throw DataError("shape mismatch: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  double m = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

// Bilinear resampling with half-pixel centers (edge-clamped).
inline ImageTensor resize_bilinear(const ImageTensor& src, std::size_t height, std::size_t width) {
  if (src.height() == height && src.width() == width) return src;
  ImageTensor out(height, width, src.channels());
  const double sy = static_cast<double>(src.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(src.width()) / static_cast<double>(width);
  for (std::size_t h = 0; h < height; ++h) {
    double fy = std::clamp((static_cast<double>(h) + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
    auto y0 = static_cast<std::size_t>(fy);
    std::size_t y1 = std::min(y0 + 1, src.height() - 1);
    double ty = fy - static_cast<double>(y0);
    for (std::size_t w = 0; w < width; ++w) {
      double fx = std::clamp((static_cast<double>(w) + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
      auto x0 = static_cast<std::size_t>(fx);
      std::size_t x1 = std::min(x0 + 1, src.width() - 1);
      double tx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < src.channels(); ++c) {
        double top = (1 - tx) * src.at(y0, x0, c) + tx * src.at(y0, x1, c);
        double bot = (1 - tx) * src.at(y1, x0, c) + tx * src.at(y1, x1, c);
        out.at(h, w, c) = (1 - ty) * top + ty * bot;
      }
    }
  }
  return out;
}

// Quarter turn counter-clockwise: out(h, w) = in(w, W-1-h).
inline ImageTensor rotate90(const ImageTensor& src) {
  ImageTensor out(src.width(), src.height(), src.channels());
  for (std::size_t h = 0; h < out.height(); ++h)
    for (std::size_t w = 0; w < out.width(); ++w)
      for (std::size_t c = 0; c < src.channels(); ++c) out.at(h, w, c) = src.at(w, src.width() - 1 - h, c);
  return out;
}

}  // namespace found
