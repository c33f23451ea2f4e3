#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "found/error.hpp"
#include "found/format.hpp"
#include "found/image.hpp"
#include "found/rng.hpp"
#include "found/spectral.hpp"

namespace found {

struct UniformLambda {
  double lo = 0.0;
  double hi = 1.0;
};

struct BetaLambda {
  double alpha = 1.0;
};

struct FixedLambda {
  double value = 0.5;
};

/// Distribution of the amplitude interpolation weight.
using LambdaSampler = std::variant<UniformLambda, BetaLambda, FixedLambda>;

inline void validate(const LambdaSampler& sampler) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UniformLambda>) {
          if (!(0.0 <= s.lo && s.lo <= s.hi && s.hi <= 1.0))
            throw std::invalid_argument("uniform sampler requires 0 <= lo <= hi <= 1");
        } else if constexpr (std::is_same_v<T, BetaLambda>) {
          if (!(s.alpha > 0.0) || !std::isfinite(s.alpha)) throw std::invalid_argument("beta sampler requires alpha > 0");
        } else {
          if (!(0.0 <= s.value && s.value <= 1.0)) throw std::invalid_argument("fixed lambda must lie in [0, 1]");
        }
      },
      sampler);
}

// "uniform:LO,HI" | "beta:ALPHA" | "fixed:LAMBDA"
inline std::string to_string(const LambdaSampler& sampler) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UniformLambda>)
          return "uniform:" + format_double(s.lo) + "," + format_double(s.hi);
        else if constexpr (std::is_same_v<T, BetaLambda>)
          return "beta:" + format_double(s.alpha);
        else
          return "fixed:" + format_double(s.value);
      },
      sampler);
}

inline LambdaSampler parse_lambda_sampler(std::string_view text) {
  text = trim(text);
  const auto colon = text.find(':');
  const std::string_view kind = text.substr(0, colon);
  const std::string_view args = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  LambdaSampler out;
  if (kind == "uniform") {
    UniformLambda u;
    if (!args.empty()) {
      const auto comma = args.find(',');
      if (comma == std::string_view::npos) throw std::invalid_argument("uniform sampler expects 'uniform:LO,HI'");
      u.lo = parse_double(trim(args.substr(0, comma)));
      u.hi = parse_double(trim(args.substr(comma + 1)));
    }
    out = u;
  } else if (kind == "beta") {
    if (args.empty()) throw std::invalid_argument("beta sampler expects 'beta:ALPHA'");
    out = BetaLambda{parse_double(trim(args))};
  } else if (kind == "fixed") {
    if (args.empty()) throw std::invalid_argument("fixed sampler expects 'fixed:LAMBDA'");
    out = FixedLambda{parse_double(trim(args))};
  } else {
    throw std::invalid_argument("unknown lambda sampler '" + std::string(text) + "'");
  }
  validate(out);
  return out;
}

struct AugPolicy {
  double p_aug = 0.5;
  LambdaSampler lambda_sampler = UniformLambda{0.0, 1.0};
  std::uint64_t seed = 0;

  void validate() const {
    if (!(0.0 <= p_aug && p_aug <= 1.0)) throw std::invalid_argument("p_aug must lie in [0, 1]");
    found::validate(lambda_sampler);
  }
};

/// Outcome of the gate for one batch element. lambda/style_index are set iff applied.
struct AugRecord {
  std::size_t index = 0;
  bool applied = false;
  std::optional<double> lambda;
  std::optional<std::size_t> style_index;

  friend bool operator==(const AugRecord&, const AugRecord&) = default;
};

// One line: "index=3 applied=true lambda=0.25 style_index=7"; absent fields print '-'.
inline std::string format_record(const AugRecord& r) {
  std::string s = "index=" + std::to_string(r.index) + " applied=" + (r.applied ? "true" : "false");
  s += " lambda=" + (r.lambda ? format_double(*r.lambda) : std::string("-"));
  s += " style_index=" + (r.style_index ? std::to_string(*r.style_index) : std::string("-"));
  return s;
}

inline double sample_lambda(const AugPolicy& policy, RandomStream& rng) {
  return std::visit(
      [&rng](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UniformLambda>)
          return std::clamp(rng.uniform(s.lo, s.hi), s.lo, s.hi);
        else if constexpr (std::is_same_v<T, BetaLambda>)
          return std::clamp(rng.beta(s.alpha, s.alpha), 0.0, 1.0);
        else
          return s.value;
      },
      policy.lambda_sampler);
}

/// Amplitude Mix on precomputed spectra: keeps the content phase, interpolates
/// the amplitude towards the style amplitude, and inverts. Not clamped.
inline ImageTensor amplitude_mix_spectra(const AmplitudePhase& content, std::span<const double> style_amplitude,
                                         double lambda) {
  if (!(0.0 <= lambda && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (style_amplitude.size() != content.amplitude.size()) throw DataError("content/style spectrum size mismatch");
  AmplitudePhase mixed{content.shape, std::vector<double>(content.amplitude.size()), content.phase};
  for (std::size_t i = 0; i < mixed.amplitude.size(); ++i)
    mixed.amplitude[i] = (1.0 - lambda) * content.amplitude[i] + lambda * style_amplitude[i];
  return ifft2d(recompose(mixed));
}

/// Content spectrum prepared for repeated mixing: amplitude and unit phasors
/// exp(i * phase).
struct MixableSpectrum {
  Shape shape;
  std::vector<double> amplitude;
  std::vector<Complex> phasor;
};

inline MixableSpectrum prepare_mix(const ImageTensor& image) {
  const Spectrum spec = fft2d(image);
  MixableSpectrum m{spec.shape(), std::vector<double>(spec.shape().size()), std::vector<Complex>(spec.shape().size())};
  auto coeffs = spec.coeffs();
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double a = std::abs(coeffs[i]);
    m.amplitude[i] = a;
    m.phasor[i] = a == 0.0 ? Complex(1.0, 0.0) : coeffs[i] / a;
  }
  return m;
}

// Same mix as amplitude_mix_spectra, from a prepared content spectrum. Not clamped.
inline ImageTensor amplitude_mix_prepared(const MixableSpectrum& content, std::span<const double> style_amplitude,
                                          double lambda) {
  if (!(0.0 <= lambda && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (style_amplitude.size() != content.amplitude.size()) throw DataError("content/style spectrum size mismatch");
  Spectrum mixed(content.shape);
  auto coeffs = mixed.coeffs();
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    coeffs[i] = content.phasor[i] * ((1.0 - lambda) * content.amplitude[i] + lambda * style_amplitude[i]);
  return ifft2d(mixed);
}

inline ImageTensor amplitude_mix_unclamped(const ImageTensor& content, const ImageTensor& style, double lambda) {
  if (content.shape() != style.shape())
    throw DataError("amplitude mix shape mismatch: content " + to_string(content.shape()) + ", style " +
                    to_string(style.shape()));
  const AmplitudePhase c = decompose(fft2d(content));
  const AmplitudePhase s = decompose(fft2d(style));
  return amplitude_mix_spectra(c, s.amplitude, lambda);
}

inline ImageTensor amplitude_mix(const ImageTensor& content, const ImageTensor& style, double lambda) {
  ImageTensor out = amplitude_mix_unclamped(content, style, lambda);
  out.clamp(0.0, 1.0);
  return out;
}

struct StyleDraw {
  std::size_t index = 0;
  ImageTensor image;
};

/// Source of style images for the augmentation policy.
template <class S>
concept StyleSampler = requires(S& s, RandomStream& rng, const Shape& shape) {
  { s.draw(rng, shape) } -> std::convertible_to<StyleDraw>;
};

/// Uniform draw with replacement from a fixed set of images; a drawn image is
/// bilinearly resized to the requested height and width.
class StylePool {
 public:
  explicit StylePool(std::vector<ImageTensor> images) : images_(std::move(images)) {
    if (images_.empty()) throw DataError("style pool is empty");
  }

  std::size_t size() const { return images_.size(); }
  const ImageTensor& operator[](std::size_t i) const { return images_[i]; }

  StyleDraw draw(RandomStream& rng, const Shape& shape) const {
    const std::size_t i = rng.index(images_.size());
    const ImageTensor& img = images_[i];
    if (img.channels() != shape.channels)
      throw DataError("style image " + std::to_string(i) + " has " + std::to_string(img.channels()) +
                      " channels, content has " + std::to_string(shape.channels));
    return {i, resize_bilinear(img, shape.height, shape.width)};
  }

 private:
  std::vector<ImageTensor> images_;
};

struct AugmentedBatch {
  std::vector<ImageTensor> images;
  std::vector<AugRecord> records;
};

/// Per-element gate for one image: draws r ~ U(0,1), and when r < p_aug mixes
/// with a drawn style image at a sampled lambda.
template <StyleSampler S>
std::pair<ImageTensor, AugRecord> augment_one(const ImageTensor& image, std::size_t index, S& styles,
                                              const AugPolicy& policy, RandomStream& rng) {
  AugRecord rec{index, false, std::nullopt, std::nullopt};
  if (rng.uniform() < policy.p_aug) {
    StyleDraw style = styles.draw(rng, image.shape());
    const double lambda = sample_lambda(policy, rng);
    rec.applied = true;
    rec.lambda = lambda;
    rec.style_index = style.index;
    return {amplitude_mix(image, style.image, lambda), rec};
  }
  return {image, rec};
}

/// Probabilistic Fourier Augmentation over a batch.
///
/// One value drawn from `rng` keys the batch; element i then uses its own
/// stream rng_stream(key, i), so results do not depend on processing order.
/// Order and count of the batch are preserved.
template <StyleSampler S>
AugmentedBatch apply_policy(std::span<const ImageTensor> batch, S& styles, const AugPolicy& policy,
                            RandomStream& rng) {
  policy.validate();
  if (batch.empty()) throw DataError("augmentation batch is empty");
  const std::uint64_t key = rng();
  AugmentedBatch out;
  out.images.reserve(batch.size());
  out.records.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    RandomStream element_rng = rng_stream(key, i);
    auto [img, rec] = augment_one(batch[i], i, styles, policy, element_rng);
    out.images.push_back(std::move(img));
    out.records.push_back(rec);
  }
  return out;
}

/// Gate decisions only, for a batch of `batch_size` drawn against a pool of
/// `pool_size` styles. Consumes `rng` exactly like apply_policy with a
/// StylePool of that size and yields the same records.
inline std::vector<AugRecord> plan_policy(std::size_t batch_size, std::size_t pool_size, const AugPolicy& policy,
                                          RandomStream& rng) {
  policy.validate();
  if (batch_size == 0) throw DataError("augmentation batch is empty");
  if (pool_size == 0) throw DataError("style pool is empty");
  const std::uint64_t key = rng();
  std::vector<AugRecord> records;
  records.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    RandomStream element_rng = rng_stream(key, i);
    AugRecord rec{i, false, std::nullopt, std::nullopt};
    if (element_rng.uniform() < policy.p_aug) {
      rec.applied = true;
      rec.style_index = element_rng.index(pool_size);
      rec.lambda = sample_lambda(policy, element_rng);
    }
    records.push_back(rec);
  }
  return records;
}

template <StyleSampler S>
AugmentedBatch apply_policy(std::span<const ImageTensor> batch, S& styles, const AugPolicy& policy) {
  RandomStream rng = rng_stream(policy.seed, 0);
  return apply_policy(batch, styles, policy, rng);
}

/// True iff at every coefficient where both images have amplitude above
/// tol * (per-channel mean amplitude), the wrapped phase difference is <= 1e-3.
inline bool phase_preservation_check(const ImageTensor& content, const ImageTensor& augmented, double tol) {
  if (content.shape() != augmented.shape()) return false;
  const AmplitudePhase a = decompose(fft2d(content));
  const AmplitudePhase b = decompose(fft2d(augmented));
  const std::size_t plane = content.shape().pixels();
  for (std::size_t c = 0; c < content.channels(); ++c) {
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = c * plane; i < (c + 1) * plane; ++i) {
      mean_a += a.amplitude[i];
      mean_b += b.amplitude[i];
    }
    mean_a /= static_cast<double>(plane);
    mean_b /= static_cast<double>(plane);
    for (std::size_t i = c * plane; i < (c + 1) * plane; ++i) {
      if (a.amplitude[i] > tol * mean_a && b.amplitude[i] > tol * mean_b &&
          std::abs(wrap_phase(a.phase[i] - b.phase[i])) > 1e-3)
        return false;
    }
  }
  return true;
}

}  // namespace found
