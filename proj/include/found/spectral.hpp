#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "found/error.hpp"
#include "found/image.hpp"

namespace found {

using Complex = std::complex<double>;

/// Per-channel complex 2D frequency grid, channel-planar: coeff(c, u, v).
class Spectrum {
 public:
  Spectrum() = default;
  explicit Spectrum(Shape shape) : shape_(shape) {
    check_shape(shape_);
    coeff_.assign(shape_.size(), Complex{});
  }

  const Shape& shape() const { return shape_; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t channels() const { return shape_.channels; }

  Complex& at(std::size_t c, std::size_t u, std::size_t v) { return coeff_[(c * shape_.height + u) * shape_.width + v]; }
  const Complex& at(std::size_t c, std::size_t u, std::size_t v) const {
    return coeff_[(c * shape_.height + u) * shape_.width + v];
  }

  std::span<Complex> plane(std::size_t c) { return std::span(coeff_).subspan(c * shape_.pixels(), shape_.pixels()); }
  std::span<const Complex> plane(std::size_t c) const {
    return std::span(coeff_).subspan(c * shape_.pixels(), shape_.pixels());
  }
  std::span<Complex> coeffs() { return coeff_; }
  std::span<const Complex> coeffs() const { return coeff_; }

  void validate() const {
    check_shape(shape_);
    if (coeff_.size() != shape_.size()) throw DataError("spectrum length does not match its shape");
    for (const Complex& z : coeff_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw DataError("spectrum contains non-finite values");
  }

 private:
  Shape shape_;
  std::vector<Complex> coeff_;
};

/// Polar form of a Spectrum. Phase lies in (-pi, pi]; arg(0) is 0.
struct AmplitudePhase {
  Shape shape;
  std::vector<double> amplitude;
  std::vector<double> phase;
};

namespace detail {

inline std::vector<std::size_t> prime_factors(std::size_t n) {
  std::vector<std::size_t> f;
  for (std::size_t p : {4u, 2u, 3u, 5u}) {
    while (n % p == 0) {
      f.push_back(p);
      n /= p;
    }
  }
  for (std::size_t p = 7; p * p <= n; p += 2) {
    while (n % p == 0) {
      f.push_back(p);
      n /= p;
    }
  }
  if (n > 1) f.push_back(n);
  return f;
}

// Plain complex product; std::complex's operator* takes a slow NaN-recovery path.
inline Complex cmul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

// exp(-2*pi*i*k/n) with exact reduction of k.
inline Complex unit_root(std::size_t k, std::size_t n) {
  const double angle = -2.0 * std::numbers::pi * static_cast<double>(k % n) / static_cast<double>(n);
  return {std::cos(angle), std::sin(angle)};
}

}  // namespace detail

/// Forward 1D DFT of a fixed length, unnormalized.
///
/// Mixed-radix Cooley-Tukey over the prime factorization; lengths with a prime
/// factor above `kMaxDirectRadix` go through Bluestein's chirp-z transform on a
/// power-of-two grid. Inverse transforms use the conjugation identity.
class Fft1d {
 public:
  static constexpr std::size_t kMaxDirectRadix = 31;

  explicit Fft1d(std::size_t n) : n_(n) {
    if (n == 0) throw DataError("FFT length must be positive");
    factors_ = detail::prime_factors(n);
    if (!factors_.empty() && std::ranges::max(factors_) > kMaxDirectRadix) {
      init_bluestein();
    } else {
      twiddle_.resize(n);
      for (std::size_t k = 0; k < n; ++k) twiddle_[k] = detail::unit_root(k, n);
    }
  }

  std::size_t size() const { return n_; }

  void forward(std::span<Complex> x) const {
    if (x.size() != n_) throw DataError("FFT buffer length mismatch");
    if (n_ == 1) return;
    if (inner_) {
      bluestein(x);
      return;
    }
    thread_local std::vector<Complex> scratch;
    if (scratch.size() < n_) scratch.resize(n_);
    dit(x.data(), 1, scratch.data(), n_, 0, 1);
    std::copy_n(scratch.begin(), n_, x.begin());
  }

  // Unnormalized inverse: sum_k X[k] exp(+2*pi*i*k*n/N).
  void backward(std::span<Complex> x) const {
    for (Complex& z : x) z = std::conj(z);
    forward(x);
    for (Complex& z : x) z = std::conj(z);
  }

 private:
  void dit(const Complex* in, std::size_t stride, Complex* out, std::size_t n, std::size_t fi,
           std::size_t tw_step) const {
    const std::size_t p = factors_[fi];
    const std::size_t m = n / p;
    if (m > 1)
      for (std::size_t r = 0; r < p; ++r) dit(in + r * stride, stride * p, out + r * m, m, fi + 1, tw_step * p);

    const std::size_t root_step = n_ / p;
    // Left uninitialized; std::complex<double> is layout-compatible with double[2].
    double t_buf[2 * kMaxDirectRadix];
    double y_buf[2 * kMaxDirectRadix];
    Complex* t = reinterpret_cast<Complex*>(t_buf);
    Complex* y = reinterpret_cast<Complex*>(y_buf);
    for (std::size_t k = 0; k < m; ++k) {
      if (m == 1) {
        for (std::size_t r = 0; r < p; ++r) t[r] = in[r * stride];
      } else {
        t[0] = out[k];
        for (std::size_t r = 1; r < p; ++r) t[r] = detail::cmul(out[r * m + k], twiddle_[r * k * tw_step]);
      }
      if (p == 2) {
        y[0] = t[0] + t[1];
        y[1] = t[0] - t[1];
      } else if (p == 3) {
        constexpr double kSin60 = 0.86602540378443864676;
        const Complex sum = t[1] + t[2];
        const Complex diff = t[1] - t[2];
        const Complex mid = t[0] - 0.5 * sum;
        const Complex rot{kSin60 * diff.imag(), -kSin60 * diff.real()};  // -i sin(60) diff
        y[0] = t[0] + sum;
        y[1] = mid + rot;
        y[2] = mid - rot;
      } else if (p == 4) {
        const Complex a = t[0] + t[2], b = t[0] - t[2];
        const Complex c = t[1] + t[3];
        const Complex e = t[1] - t[3];
        const Complex d{e.imag(), -e.real()};
        y[0] = a + c;
        y[1] = b + d;
        y[2] = a - c;
        y[3] = b - d;
      } else {
        for (std::size_t q = 0; q < p; ++q) {
          Complex acc = t[0];
          for (std::size_t r = 1; r < p; ++r) acc += detail::cmul(t[r], twiddle_[((r * q) % p) * root_step]);
          y[q] = acc;
        }
      }
      for (std::size_t q = 0; q < p; ++q) out[q * m + k] = y[q];
    }
  }

  void init_bluestein() {
    std::size_t m = 1;
    while (m < 2 * n_ - 1) m <<= 1;
    inner_ = std::make_shared<const Fft1d>(m);
    chirp_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      // exp(-i*pi*k^2/n), with k^2 reduced mod 2n.
      const std::size_t k2 = (k * k) % (2 * n_);
      const double angle = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n_);
      chirp_[k] = {std::cos(angle), std::sin(angle)};
    }
    kernel_.assign(m, Complex{});
    kernel_[0] = std::conj(chirp_[0]);
    for (std::size_t k = 1; k < n_; ++k) kernel_[k] = kernel_[m - k] = std::conj(chirp_[k]);
    inner_->forward(kernel_);
  }

  void bluestein(std::span<Complex> x) const {
    const std::size_t m = inner_->size();
    std::vector<Complex> a(m);
    for (std::size_t k = 0; k < n_; ++k) a[k] = detail::cmul(x[k], chirp_[k]);
    inner_->forward(a);
    for (std::size_t k = 0; k < m; ++k) a[k] = detail::cmul(a[k], kernel_[k]);
    inner_->backward(a);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n_; ++k) x[k] = detail::cmul(a[k], chirp_[k]) * scale;
  }

  std::size_t n_;
  std::vector<std::size_t> factors_;
  std::vector<Complex> twiddle_;
  std::shared_ptr<const Fft1d> inner_;
  std::vector<Complex> chirp_;
  std::vector<Complex> kernel_;
};

namespace detail {

// In-place 2D transform of one H x W plane (rows, then columns).
inline void transform_plane(std::span<Complex> plane, std::size_t height, std::size_t width, const Fft1d& rows,
                            const Fft1d& cols, bool inverse) {
  for (std::size_t u = 0; u < height; ++u) {
    auto row = plane.subspan(u * width, width);
    inverse ? rows.backward(row) : rows.forward(row);
  }
  std::vector<Complex> col(height);
  for (std::size_t v = 0; v < width; ++v) {
    for (std::size_t u = 0; u < height; ++u) col[u] = plane[u * width + v];
    inverse ? cols.backward(col) : cols.forward(col);
    for (std::size_t u = 0; u < height; ++u) plane[u * width + v] = col[u];
  }
}

// Forces F(u, v) = conj(F(-u, -v)) exactly; the spectrum of a real plane.
inline void enforce_hermitian(std::span<Complex> plane, std::size_t height, std::size_t width) {
  for (std::size_t u = 0; u < height; ++u) {
    const std::size_t mu = (height - u) % height;
    for (std::size_t v = 0; v < width; ++v) {
      const std::size_t mv = (width - v) % width;
      const std::size_t i = u * width + v;
      const std::size_t j = mu * width + mv;
      if (i < j) {
        const Complex avg = 0.5 * (plane[i] + std::conj(plane[j]));
        plane[i] = avg;
        plane[j] = std::conj(avg);
      } else if (i == j) {
        plane[i] = {plane[i].real(), 0.0};
      }
    }
  }
}

}  // namespace detail

/// Unnormalized forward 2D DFT, applied independently to each channel:
/// F(c,u,v) = sum_h sum_w x(h,w,c) exp(-2*pi*i*(h*u/H + w*v/W)).
inline Spectrum fft2d(const ImageTensor& image) {
  image.validate();
  const Shape& s = image.shape();
  Spectrum spec(s);
  const Fft1d rows(s.width), cols(s.height);
  for (std::size_t c = 0; c < s.channels; ++c) {
    auto plane = spec.plane(c);
    for (std::size_t h = 0; h < s.height; ++h)
      for (std::size_t w = 0; w < s.width; ++w) plane[h * s.width + w] = {image.at(h, w, c), 0.0};
    detail::transform_plane(plane, s.height, s.width, rows, cols, false);
    detail::enforce_hermitian(plane, s.height, s.width);
  }
  return spec;
}

/// Inverse 2D DFT with 1/(HW) scaling.
///
/// The result must be real: throws DataError when the largest imaginary
/// residue exceeds 1e-6 * max(1, max |Re|). Values are not clamped.
inline ImageTensor ifft2d(const Spectrum& spec) {
  spec.validate();
  const Shape& s = spec.shape();
  const Fft1d rows(s.width), cols(s.height);
  const double scale = 1.0 / static_cast<double>(s.pixels());
  ImageTensor out(s.height, s.width, s.channels);
  std::vector<Complex> plane(s.pixels());
  double max_re = 0.0, max_im = 0.0;
  for (std::size_t c = 0; c < s.channels; ++c) {
    auto src = spec.plane(c);
    std::copy(src.begin(), src.end(), plane.begin());
    detail::transform_plane(plane, s.height, s.width, rows, cols, true);
    for (std::size_t h = 0; h < s.height; ++h) {
      for (std::size_t w = 0; w < s.width; ++w) {
        const Complex z = plane[h * s.width + w] * scale;
        max_re = std::max(max_re, std::abs(z.real()));
        max_im = std::max(max_im, std::abs(z.imag()));
        out.at(h, w, c) = z.real();
      }
    }
  }
  if (max_im > 1e-6 * std::max(1.0, max_re))
    throw DataError("inverse transform is not real (imaginary residue " + std::to_string(max_im) +
                    "); spectrum is not conjugate-symmetric");
  return out;
}

inline AmplitudePhase decompose(const Spectrum& spec) {
  AmplitudePhase ap{spec.shape(), {}, {}};
  auto coeffs = spec.coeffs();
  ap.amplitude.resize(coeffs.size());
  ap.phase.resize(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double a = std::abs(coeffs[i]);
    double p = a == 0.0 ? 0.0 : std::arg(coeffs[i]);
    if (p <= -std::numbers::pi) p = std::numbers::pi;
    ap.amplitude[i] = a;
    ap.phase[i] = p;
  }
  return ap;
}

inline Spectrum recompose(const AmplitudePhase& ap) {
  Spectrum spec(ap.shape);
  if (ap.amplitude.size() != ap.shape.size() || ap.phase.size() != ap.shape.size())
    throw DataError("amplitude/phase length does not match shape " + to_string(ap.shape));
  auto coeffs = spec.coeffs();
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double a = ap.amplitude[i];
    if (!(a >= 0.0)) throw DataError("negative or NaN amplitude at index " + std::to_string(i));
    coeffs[i] = std::polar(a, ap.phase[i]);
  }
  return spec;
}

// Wraps an angle difference into (-pi, pi].
inline double wrap_phase(double d) {
  d = std::remainder(d, 2.0 * std::numbers::pi);
  if (d <= -std::numbers::pi) d += 2.0 * std::numbers::pi;
  return d;
}

}  // namespace found
