#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "found/augment.hpp"
#include "oracles.hpp"

using namespace found;
using Catch::Matchers::WithinAbs;

namespace {

// Always returns the same style image, resized.
struct FixedStyle {
  ImageTensor image;
  int draws = 0;
  StyleDraw draw(RandomStream&, const Shape& s) {
    ++draws;
    return {0, resize_bilinear(image, s.height, s.width)};
  }
};

std::vector<ImageTensor> random_batch(std::size_t n, std::size_t H, std::size_t W, std::uint64_t seed) {
  std::vector<ImageTensor> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(oracle::random_image(H, W, 3, seed * 1000 + i));
  return v;
}

}  // namespace

TEST_CASE("lambda sampler specs parse and print") {
  CHECK(to_string(parse_lambda_sampler("uniform")) == "uniform:0,1");
  CHECK(to_string(parse_lambda_sampler("uniform:0.2,0.8")) == "uniform:0.2,0.8");
  CHECK(to_string(parse_lambda_sampler(" beta:0.3 ")) == "beta:0.3");
  CHECK(to_string(parse_lambda_sampler("fixed:0")) == "fixed:0");
  CHECK_THROWS_AS(parse_lambda_sampler("gauss:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_lambda_sampler("beta:0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_lambda_sampler("beta"), std::invalid_argument);
  CHECK_THROWS_AS(parse_lambda_sampler("uniform:0.8,0.2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_lambda_sampler("fixed:1.5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_lambda_sampler("fixed:abc"), std::invalid_argument);
}

TEST_CASE("policy defaults and validation") {
  const AugPolicy p;
  CHECK(p.p_aug == 0.5);
  CHECK(to_string(p.lambda_sampler) == "uniform:0,1");
  CHECK_THROWS_AS((AugPolicy{1.5, UniformLambda{}, 0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((AugPolicy{-0.1, UniformLambda{}, 0}.validate()), std::invalid_argument);
  CHECK_NOTHROW((AugPolicy{0.0, FixedLambda{1.0}, 0}.validate()));
}

TEST_CASE("sampled lambda follows the configured distribution") {
  const std::size_t n = 40000;
  auto moments = [&](const LambdaSampler& s) {
    AugPolicy p{0.5, s, 0};
    RandomStream rng = rng_stream(3, 4);
    double sum = 0.0, sq = 0.0, lo = 1.0, hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = sample_lambda(p, rng);
      sum += x;
      sq += x * x;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    const double mean = sum / n;
    return std::array<double, 4>{mean, sq / n - mean * mean, lo, hi};
  };
  SECTION("uniform") {
    const auto m = moments(UniformLambda{0.2, 0.6});
    CHECK_THAT(m[0], WithinAbs(0.4, 4.0 * std::sqrt(0.16 / 12.0 / n)));
    CHECK_THAT(m[1], WithinAbs(0.16 / 12.0, 5e-4));
    CHECK(m[2] >= 0.2);
    CHECK(m[3] <= 0.6);
  }
  SECTION("beta") {
    for (double a : {0.3, 1.0, 4.0}) {
      const auto m = moments(BetaLambda{a});
      const double var = 1.0 / (4.0 * (2.0 * a + 1.0));
      CHECK_THAT(m[0], WithinAbs(0.5, 4.0 * std::sqrt(var / n)));
      CHECK_THAT(m[1], WithinAbs(var, 0.05 * var));
      CHECK(m[2] >= 0.0);
      CHECK(m[3] <= 1.0);
    }
  }
  SECTION("fixed") {
    const auto m = moments(FixedLambda{0.7});
    CHECK(m[0] == Catch::Approx(0.7));
    CHECK(m[1] <= 1e-12);
  }
}

TEST_CASE("amplitude mix at lambda 0 returns the content") {
  const ImageTensor c = oracle::random_image(9, 7, 3, 1), s = oracle::random_image(9, 7, 3, 2);
  CHECK(max_abs_diff(amplitude_mix(c, s, 0.0), c) <= 1e-9);
}

TEST_CASE("mixing an image with itself returns it for every lambda") {
  const ImageTensor c = oracle::random_image(8, 8, 3, 3);
  for (double lambda : {0.0, 0.3, 0.5, 1.0}) CHECK(max_abs_diff(amplitude_mix(c, c, lambda), c) <= 1e-9);
}

TEST_CASE("amplitude mix matches the direct-DFT composition") {
  const std::size_t H = 5, W = 6, C = 3;
  const ImageTensor c = oracle::random_image(H, W, C, 4), s = oracle::random_image(H, W, C, 5);
  const double lambda = 0.35;
  const auto Fc = oracle::dft2d(oracle::planes_of(c), C, H, W);
  const auto Fs = oracle::dft2d(oracle::planes_of(s), C, H, W);
  std::vector<oracle::LComplex> mixed(Fc.size());
  for (std::size_t i = 0; i < Fc.size(); ++i) {
    const long double amp = (1.0L - lambda) * std::abs(Fc[i]) + lambda * std::abs(Fs[i]);
    mixed[i] = std::polar(amp, std::arg(Fc[i]));
  }
  const auto back = oracle::dft2d(mixed, C, H, W, +1);
  const ImageTensor got = amplitude_mix_unclamped(c, s, lambda);
  double err = 0.0;
  for (std::size_t ch = 0; ch < C; ++ch)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        const long double ref = back[(ch * H + h) * W + w].real() / static_cast<long double>(H * W);
        err = std::max(err, static_cast<double>(std::abs(got.at(h, w, ch) - ref)));
      }
  CHECK(err <= 1e-9);
}

TEST_CASE("unclamped mix keeps content phase and interpolates amplitude") {
  for (std::uint64_t k = 0; k < 10; ++k) {
    const ImageTensor c = oracle::random_image(12, 10, 3, 100 + k), s = oracle::random_image(12, 10, 3, 200 + k);
    const double lambda = 0.1 * static_cast<double>(k);
    const ImageTensor mixed = amplitude_mix_unclamped(c, s, lambda);
    CHECK(phase_preservation_check(c, mixed, 1e-3));
    const AmplitudePhase ac = decompose(fft2d(c)), as = decompose(fft2d(s)), am = decompose(fft2d(mixed));
    double err = 0.0;
    for (std::size_t i = 0; i < am.amplitude.size(); ++i)
      err = std::max(err, std::abs(am.amplitude[i] - ((1.0 - lambda) * ac.amplitude[i] + lambda * as.amplitude[i])));
    CHECK(err <= 1e-6);
  }
}

TEST_CASE("phase check detects a geometric change") {
  const ImageTensor c = oracle::random_image(8, 8, 1, 6);
  CHECK_FALSE(phase_preservation_check(c, rotate90(c), 1e-3));
  CHECK_FALSE(phase_preservation_check(c, oracle::random_image(8, 6, 1, 6), 1e-3));
}

TEST_CASE("clamped mix stays in range") {
  const ImageTensor c = oracle::random_image(16, 16, 3, 7), s = oracle::random_image(16, 16, 3, 8);
  const ImageTensor out = amplitude_mix(c, s, 0.9);
  for (double x : out.data()) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
}

TEST_CASE("amplitude mix argument errors") {
  const ImageTensor c = oracle::random_image(4, 4, 3, 1);
  CHECK_THROWS_AS(amplitude_mix(c, oracle::random_image(4, 5, 3, 1), 0.5), DataError);
  CHECK_THROWS_AS(amplitude_mix(c, oracle::random_image(4, 4, 1, 1), 0.5), DataError);
  CHECK_THROWS_AS(amplitude_mix(c, c, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(amplitude_mix(c, c, 1.1), std::invalid_argument);
}

TEST_CASE("prepared mix agrees with the polar-form mix") {
  const ImageTensor c = oracle::random_image(10, 12, 3, 9), s = oracle::random_image(10, 12, 3, 10);
  const MixableSpectrum prepared = prepare_mix(c);
  const AmplitudePhase style = decompose(fft2d(s));
  const ImageTensor a = amplitude_mix_prepared(prepared, style.amplitude, 0.6);
  const ImageTensor b = amplitude_mix_spectra(decompose(fft2d(c)), style.amplitude, 0.6);
  CHECK(max_abs_diff(a, b) <= 1e-12);
}

TEST_CASE("record formatting") {
  CHECK(format_record({3, true, 0.25, 7}) == "index=3 applied=true lambda=0.25 style_index=7");
  CHECK(format_record({0, false, std::nullopt, std::nullopt}) == "index=0 applied=false lambda=- style_index=-");
}

TEST_CASE("p_aug 0 leaves every image untouched") {
  const auto batch = random_batch(20, 6, 6, 1);
  StylePool pool(random_batch(3, 6, 6, 2));
  const AugmentedBatch out = apply_policy(std::span<const ImageTensor>(batch), pool, AugPolicy{0.0, UniformLambda{}, 5});
  REQUIRE(out.images.size() == batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(out.images[i] == batch[i]);
    CHECK(out.records[i] == AugRecord{i, false, std::nullopt, std::nullopt});
  }
}

TEST_CASE("p_aug 1 augments every image and records the draw") {
  const auto batch = random_batch(12, 6, 6, 3);
  StylePool pool(random_batch(4, 6, 6, 4));
  const AugmentedBatch out = apply_policy(std::span<const ImageTensor>(batch), pool, AugPolicy{1.0, UniformLambda{}, 1});
  std::set<std::size_t> styles;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const AugRecord& r = out.records[i];
    CHECK(r.index == i);
    REQUIRE(r.applied);
    REQUIRE(r.lambda);
    REQUIRE(r.style_index);
    CHECK(*r.style_index < 4);
    styles.insert(*r.style_index);
    CHECK(max_abs_diff(out.images[i], amplitude_mix(batch[i], pool[*r.style_index], *r.lambda)) <= 1e-12);
  }
  CHECK(styles.size() > 1);
}

TEST_CASE("gate rate over many calls matches p_aug") {
  const std::vector<AugRecord> records = [] {
    RandomStream rng = rng_stream(11, 0);
    std::vector<AugRecord> all;
    for (int b = 0; b < 100; ++b) {
      auto r = plan_policy(100, 10, AugPolicy{0.3, UniformLambda{}, 0}, rng);
      all.insert(all.end(), r.begin(), r.end());
    }
    return all;
  }();
  const double applied = static_cast<double>(std::ranges::count_if(records, [](const AugRecord& r) { return r.applied; }));
  const double n = static_cast<double>(records.size());
  CHECK_THAT(applied / n, WithinAbs(0.3, 4.0 * std::sqrt(0.3 * 0.7 / n)));
}

TEST_CASE("policy is deterministic under its seed") {
  const auto batch = random_batch(10, 5, 7, 5);
  StylePool pool(random_batch(3, 5, 7, 6));
  const AugPolicy p{0.5, BetaLambda{0.5}, 77};
  const AugmentedBatch a = apply_policy(std::span<const ImageTensor>(batch), pool, p);
  const AugmentedBatch b = apply_policy(std::span<const ImageTensor>(batch), pool, p);
  CHECK(a.records == b.records);
  CHECK(a.images == b.images);
  AugPolicy q = p;
  q.seed = 78;
  CHECK(apply_policy(std::span<const ImageTensor>(batch), pool, q).records != a.records);
}

TEST_CASE("element results do not depend on the rest of the batch") {
  const auto batch = random_batch(8, 4, 4, 7);
  StylePool pool(random_batch(3, 4, 4, 8));
  RandomStream r1 = rng_stream(9, 0), r2 = rng_stream(9, 0);
  const AugmentedBatch full = apply_policy(std::span<const ImageTensor>(batch), pool, AugPolicy{0.5, UniformLambda{}, 0}, r1);
  const AugmentedBatch head =
      apply_policy(std::span<const ImageTensor>(batch).first(3), pool, AugPolicy{0.5, UniformLambda{}, 0}, r2);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(full.records[i] == head.records[i]);
    CHECK(full.images[i] == head.images[i]);
  }
}

TEST_CASE("plan_policy reproduces the decisions of apply_policy") {
  const auto batch = random_batch(16, 4, 4, 9);
  StylePool pool(random_batch(5, 4, 4, 10));
  const AugPolicy p{0.5, UniformLambda{0.1, 0.9}, 0};
  RandomStream a = rng_stream(12, 3), b = rng_stream(12, 3);
  for (int round = 0; round < 3; ++round) {
    const auto applied = apply_policy(std::span<const ImageTensor>(batch), pool, p, a).records;
    CHECK(plan_policy(batch.size(), 5, p, b) == applied);
  }
}

TEST_CASE("style images are resized to the content") {
  const ImageTensor content = oracle::random_image(8, 6, 3, 1);
  StylePool pool({oracle::random_image(3, 11, 3, 2)});
  RandomStream rng = rng_stream(0, 0);
  const StyleDraw d = pool.draw(rng, content.shape());
  CHECK(d.image.shape() == content.shape());
  CHECK(d.index == 0);

  StylePool gray({oracle::random_image(8, 6, 1, 2)});
  CHECK_THROWS_AS(gray.draw(rng, content.shape()), DataError);
  CHECK_THROWS_AS(StylePool({}), DataError);
}

TEST_CASE("any StyleSampler can drive the policy") {
  const auto batch = random_batch(6, 5, 5, 11);
  FixedStyle style{oracle::random_image(5, 5, 3, 12)};
  const AugmentedBatch out = apply_policy(std::span<const ImageTensor>(batch), style, AugPolicy{1.0, FixedLambda{0.5}, 0});
  CHECK(style.draws == 6);
  for (std::size_t i = 0; i < batch.size(); ++i)
    CHECK(max_abs_diff(out.images[i], amplitude_mix(batch[i], style.image, 0.5)) <= 1e-12);
}

TEST_CASE("empty batch is rejected") {
  StylePool pool({oracle::random_image(2, 2, 1, 1)});
  std::vector<ImageTensor> none;
  CHECK_THROWS_AS(apply_policy(std::span<const ImageTensor>(none), pool, AugPolicy{}), DataError);
  RandomStream rng = rng_stream(0, 0);
  CHECK_THROWS_AS(plan_policy(0, 3, AugPolicy{}, rng), DataError);
  CHECK_THROWS_AS(plan_policy(3, 0, AugPolicy{}, rng), DataError);
}

TEST_CASE("rotating the content rotates the phase structure the mix keeps") {
  const ImageTensor c = oracle::random_image(8, 8, 3, 13), s = oracle::random_image(8, 8, 3, 14);
  const ImageTensor rotated = amplitude_mix_unclamped(rotate90(c), s, 0.4);
  CHECK(phase_preservation_check(rotate90(c), rotated, 1e-3));
  CHECK_FALSE(phase_preservation_check(c, rotated, 1e-3));
}
