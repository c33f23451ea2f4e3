#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "found/image.hpp"
#include "found/rng.hpp"

namespace found::harness {

/// Appearance of one domain. Per-image values are drawn uniformly within
/// +/- the jitter around the nominal gain and bias.
struct DomainStyle {
  std::array<double, 3> gain{1.0, 1.0, 1.0};
  std::array<double, 3> bias{0.0, 0.0, 0.0};
  double texture = 0.0;  // amplitude of the additive low-frequency texture
  double gain_jitter = 0.0;
  double bias_jitter = 0.0;
  double noise = 0.0;  // sd of i.i.d. pixel noise
};

enum class Glyph : std::uint8_t { Disk, Cross, HBar, Ring, VBar, Square, Diagonal, Triangle };
inline constexpr std::size_t kGlyphCount = 8;

struct SynthSpec {
  std::size_t n_classes = 4;
  std::size_t samples_per_class = 200;
  std::size_t height = 24;
  std::size_t width = 24;
  double position_jitter = 2.0;  // pixels
  double scale_jitter = 0.15;    // relative
  DomainStyle source;
  DomainStyle shifted;

  void validate() const {
    if (n_classes < 2 || n_classes > kGlyphCount) throw std::invalid_argument("n_classes must lie in [2, 8]");
    if (samples_per_class == 0) throw std::invalid_argument("samples_per_class must be positive");
    if (height < 4 || width < 4) throw std::invalid_argument("synthetic images must be at least 4x4");
  }
};

/// The committed fixture: a bright, clean source domain with moderate
/// per-image style variation, and a dim, low-contrast, tinted and textured
/// shifted domain.
inline SynthSpec default_synth_spec() {
  SynthSpec s;
  s.source.gain = {0.8, 0.8, 0.8};
  s.source.bias = {0.1, 0.1, 0.1};
  s.source.texture = 0.05;
  s.source.gain_jitter = 0.15;
  s.source.bias_jitter = 0.08;
  s.source.noise = 0.03;
  s.shifted.gain = {0.35, 0.3, 0.45};
  s.shifted.bias = {0.35, 0.3, 0.2};
  s.shifted.texture = 0.2;
  s.shifted.gain_jitter = 0.05;
  s.shifted.bias_jitter = 0.05;
  s.shifted.noise = 0.06;
  return s;
}

struct LabeledImage {
  ImageTensor image;
  std::uint32_t label = 0;
};

struct SynthDataset {
  std::vector<LabeledImage> source;
  std::vector<LabeledImage> shifted;
};

namespace detail {

// Coverage of the glyph at normalized coordinates (x, y) in [-1, 1]^2.
inline bool glyph_covers(Glyph g, double x, double y) {
  const double r = std::hypot(x, y);
  switch (g) {
    case Glyph::Disk: return r <= 0.55;
    case Glyph::Ring: return r <= 0.7 && r >= 0.45;
    case Glyph::Cross: return (std::abs(x) <= 0.16 && std::abs(y) <= 0.7) || (std::abs(y) <= 0.16 && std::abs(x) <= 0.7);
    case Glyph::HBar: return std::abs(y) <= 0.2 && std::abs(x) <= 0.75;
    case Glyph::VBar: return std::abs(x) <= 0.2 && std::abs(y) <= 0.75;
    case Glyph::Square: {
      const double m = std::max(std::abs(x), std::abs(y));
      return m <= 0.65 && m >= 0.45;
    }
    case Glyph::Diagonal: return std::abs(x - y) <= 0.25 && std::abs(x + y) <= 1.3;
    case Glyph::Triangle: return y <= 0.55 && std::abs(x) <= 0.55 * (y + 0.65);
  }
  return false;
}

}  // namespace detail

/// Renders one glyph image (2x2 supersampled mask) in the given domain style.
inline ImageTensor render_glyph(Glyph glyph, std::size_t height, std::size_t width, const DomainStyle& style,
                                double position_jitter, double scale_jitter, RandomStream& rng) {
  const double cy = 0.5 * static_cast<double>(height) + rng.uniform(-position_jitter, position_jitter);
  const double cx = 0.5 * static_cast<double>(width) + rng.uniform(-position_jitter, position_jitter);
  const double half = 0.4 * static_cast<double>(std::min(height, width)) * (1.0 + rng.uniform(-scale_jitter, scale_jitter));

  std::array<double, 3> gain{}, bias{};
  for (std::size_t c = 0; c < 3; ++c) {
    gain[c] = style.gain[c] * (1.0 + rng.uniform(-style.gain_jitter, style.gain_jitter));
    bias[c] = style.bias[c] + rng.uniform(-style.bias_jitter, style.bias_jitter);
  }

  // Two low-frequency plane waves per channel, 1-2 cycles per image.
  struct Wave {
    double fy, fx, phase;
  };
  std::array<std::array<Wave, 2>, 3> waves{};
  for (auto& channel : waves) {
    for (Wave& w : channel) {
      const double cycles = rng.uniform(1.0, 2.0);
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      w = {cycles * std::sin(theta) / static_cast<double>(height), cycles * std::cos(theta) / static_cast<double>(width),
           rng.uniform(0.0, 2.0 * std::numbers::pi)};
    }
  }

  ImageTensor img(height, width, 3);
  for (std::size_t h = 0; h < height; ++h) {
    for (std::size_t w = 0; w < width; ++w) {
      int hits = 0;
      for (double dy : {0.25, 0.75})
        for (double dx : {0.25, 0.75}) {
          const double y = (static_cast<double>(h) + dy - cy) / half;
          const double x = (static_cast<double>(w) + dx - cx) / half;
          hits += detail::glyph_covers(glyph, x, y) ? 1 : 0;
        }
      const double mask = 0.25 * hits;
      for (std::size_t c = 0; c < 3; ++c) {
        double tex = 0.0;
        for (const Wave& wv : waves[c])
          tex += 0.5 * std::sin(2.0 * std::numbers::pi * (wv.fy * static_cast<double>(h) + wv.fx * static_cast<double>(w)) +
                                wv.phase);
        double v = bias[c] + gain[c] * mask + style.texture * tex;
        if (style.noise > 0.0) v += style.noise * rng.normal();
        img.at(h, w, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return img;
}

/// Source and shifted splits with identical class geometry; only the style differs.
inline SynthDataset synth_dataset(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  SynthDataset ds;
  auto make = [&](const DomainStyle& style, std::uint64_t domain) {
    std::vector<LabeledImage> out;
    out.reserve(spec.n_classes * spec.samples_per_class);
    for (std::size_t k = 0; k < spec.n_classes; ++k) {
      for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
        RandomStream rng = rng_stream(seed, (domain << 40) | (k << 24) | i);
        out.push_back({render_glyph(static_cast<Glyph>(k), spec.height, spec.width, style, spec.position_jitter,
                                    spec.scale_jitter, rng),
                       static_cast<std::uint32_t>(k)});
      }
    }
    return out;
  };
  ds.source = make(spec.source, 1);
  ds.shifted = make(spec.shifted, 2);
  return ds;
}

}  // namespace found::harness
