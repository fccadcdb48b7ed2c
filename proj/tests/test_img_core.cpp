#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sisrfp/png_io.hpp"
#include "sisrfp/resample.hpp"
#include "sisrfp/stats.hpp"

using namespace sisrfp;

namespace {

Image random_image(std::uint64_t seed, int h, int w, int c = 3) {
  Rng rng(seed);
  Image img(h, w, c);
  for (float& v : img.data()) v = static_cast<float>(rng.uniform());
  return img;
}

Image ramp8() {
  Image img(8, 8, 1);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) img.at(y, x) = static_cast<float>((x + 2 * y) / 21.0);
  }
  return img;
}

}  // namespace

TEST(BicubicResample, ConstantStaysConstant) {
  const Image img(10, 12, 3, 0.5f);
  const Image out = bicubic_resample(img, 2.0);
  ASSERT_EQ(out.height(), 20);
  ASSERT_EQ(out.width(), 24);
  for (float v : out.data()) EXPECT_NEAR(v, 0.5f, 1e-6);
}

TEST(BicubicResample, ScaleOneIsExactIdentity) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Image img = random_image(seed, 5 + seed % 7, 3 + seed % 11, seed % 2 ? 3 : 1);
    EXPECT_EQ(bicubic_resample(img, 1.0), img) << "seed " << seed;
  }
}

TEST(BicubicResample, RampHalfMatchesBruteForceKernelSum) {
  const Image img = ramp8();
  const Image out = bicubic_resample(img, 0.5);
  ASSERT_EQ(out.height(), 4);
  ASSERT_EQ(out.width(), 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const double expected = std::clamp(oracle::resample_pixel(img, y, x, 4, 4, 0), 0.0, 1.0);
      EXPECT_NEAR(out.at(y, x), expected, 1e-6) << y << "," << x;
    }
  }
}

TEST(BicubicResample, RandomUpscaleMatchesBruteForce) {
  const Image img = random_image(7, 6, 5, 3);
  const Image out = bicubic_resample(img, 2.5);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const double expected =
            std::clamp(oracle::resample_pixel(img, y, x, out.height(), out.width(), c), 0.0, 1.0);
        EXPECT_NEAR(out.at(y, x, c), expected, 1e-6);
      }
    }
  }
}

TEST(BicubicResample, DegenerateOutputIsAnError) {
  const Image img(3, 3, 1, 0.2f);
  try {
    bicubic_resample(img, 0.1);
    FAIL() << "expected empty-output";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "empty-output");
  }
  EXPECT_THROW(bicubic_resample(img, 0.0), Error);
}

TEST(GaussianBlur, SigmaZeroIsIdentity) {
  const Image img = random_image(3, 9, 9);
  EXPECT_EQ(gaussian_blur(img, 0.0), img);
}

TEST(GaussianBlur, ConstantImageUnchanged) {
  const Image img(16, 16, 3, 0.25f);
  for (double sigma : {0.5, 1.0, 3.0, 7.0}) {
    const Image out = gaussian_blur(img, sigma);
    for (float v : out.data()) EXPECT_NEAR(v, 0.25f, 1e-6);
  }
}

TEST(GaussianBlur, ImpulseMatchesDirectKernel) {
  Image img(15, 15, 1, 0.0f);
  img.at(7, 7) = 1.0f;
  const double sigma = 1.5;
  const Image out = gaussian_blur(img, sigma);
  const int radius = 5;  // ceil(3 * 1.5)
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) norm += std::exp(-i * i / (2 * sigma * sigma));
  for (int y = 0; y < 15; ++y) {
    for (int x = 0; x < 15; ++x) {
      const int dy = y - 7, dx = x - 7;
      double expected = 0.0;
      if (std::abs(dy) <= radius && std::abs(dx) <= radius) {
        expected = std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma)) / (norm * norm);
      }
      EXPECT_NEAR(out.at(y, x), expected, 1e-7) << y << "," << x;
    }
  }
}

TEST(GaussianBlur, PreservesMeanOnSmoothImages) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Image img = oracle::natural_probe(seed, 128, 128);
    EXPECT_NEAR(gaussian_blur(img, 1.0).mean(), img.mean(), 1e-4);
  }
}

TEST(GaussianBlur, NegativeSigmaRejected) { EXPECT_THROW(gaussian_blur(Image(4, 4, 1), -1.0), Error); }

TEST(Degrade, ConstantHalves) {
  const Image out = degrade(Image(64, 64, 3, 0.4f), 2);
  ASSERT_EQ(out.height(), 32);
  ASSERT_EQ(out.width(), 32);
  for (float v : out.data()) EXPECT_NEAR(v, 0.4f, 1e-6);
}

TEST(Degrade, IsBlurThenBicubicBitExact) {
  const Image img = random_image(11, 40, 36);
  for (int s : {2, 4}) {
    const Image seq = bicubic_resample(gaussian_blur(img, s / 2.0), 1.0 / s);
    EXPECT_EQ(degrade(img, s), seq);
    EXPECT_EQ(degrade(img, s, 0.8), bicubic_resample(gaussian_blur(img, 0.8), 1.0 / s));
  }
  EXPECT_THROW(degrade(img, 3), Error);
}

TEST(FitMaxDim, LargestDimensionBecomes960) {
  const Image big(1080, 1920, 3, 0.3f);
  const Image out = fit_max_dim(big, 960);
  EXPECT_EQ(out.height(), 540);
  EXPECT_EQ(out.width(), 960);
}

TEST(FitMaxDim, NeverEnlarges) {
  const Image img = random_image(2, 60, 80);
  EXPECT_EQ(fit_max_dim(img, 960), img);
}

TEST(Crop, CenterFullSizeIsIdentity) {
  const Image img = random_image(5, 10, 10);
  EXPECT_EQ(crop(img, {CropPolicy::Mode::center, 10}, 0), img);
}

TEST(Crop, CenterOffsetIsFloorOfHalfSlack) {
  const auto off = crop_offset(11, 11, {CropPolicy::Mode::center, 9}, 0);
  EXPECT_EQ(off.y, 1);
  EXPECT_EQ(off.x, 1);
}

TEST(Crop, RandomIsDeterministicPerSeedAndInRange) {
  const CropPolicy p{CropPolicy::Mode::random, 16};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = crop_offset(40, 30, p, seed);
    EXPECT_EQ(a, crop_offset(40, 30, p, seed));
    EXPECT_GE(a.y, 0);
    EXPECT_LE(a.y, 24);
    EXPECT_GE(a.x, 0);
    EXPECT_LE(a.x, 14);
  }
  const Image img = random_image(9, 40, 30);
  EXPECT_EQ(crop(img, p, 42), crop(img, p, 42));
}

TEST(Crop, TooLargeIsAnError) {
  try {
    crop(Image(8, 8, 1), {CropPolicy::Mode::center, 9}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "crop-too-large");
  }
}

TEST(Entropy, ConstantIsZero) { EXPECT_EQ(grayscale_entropy(Image(20, 20, 3, 0.7f)), 0.0); }

TEST(Entropy, UniformHistogramIsEightBits) {
  Image img(16, 16, 1);
  for (int i = 0; i < 256; ++i) img.at(i / 16, i % 16) = i / 255.0f;
  EXPECT_EQ(grayscale_entropy(img), 8.0);
}

TEST(Entropy, TwoValuesHalfAndHalfIsOneBit) {
  Image img(10, 10, 1, 0.0f);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 10; ++x) img.at(y, x) = 1.0f;
  }
  EXPECT_DOUBLE_EQ(grayscale_entropy(img), 1.0);
}

TEST(Entropy, AlwaysWithinZeroToEight) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double h = grayscale_entropy(random_image(seed, 30, 30));
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 8.0);
  }
}

TEST(CorpusStats, ConstantImageHasZeroEntropy) {
  const std::vector<Image> imgs = {Image(100, 100, 3, 0.5f)};
  const auto s = corpus_stats(imgs);
  EXPECT_EQ(s.image_count, 1u);
  EXPECT_EQ(s.entropy.mean, 0.0);
  EXPECT_EQ(s.mean_ppi, 10000.0);
  EXPECT_GT(s.bpp_png.mean, 0.0);
}

TEST(CorpusStats, DuplicatesHaveZeroSpread) {
  const Image img = random_image(4, 32, 32);
  const std::vector<Image> imgs = {img, img};
  const auto s = corpus_stats(imgs);
  EXPECT_EQ(s.bpp_png.stddev, 0.0);
  EXPECT_EQ(s.entropy.stddev, 0.0);
}

TEST(CorpusStats, EmptyCorpusIsAnError) {
  try {
    corpus_stats(std::vector<Image>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "empty-corpus");
  }
}

TEST(CorpusStats, NoiseBppAgreesWithReferenceEncoder) {
  for (int c : {1, 3}) {
    const Image img = quantize8(random_image(21 + c, 64, 64, c));
    const double ours = png_bits_per_pixel(img);
    const double ref = 8.0 * double(oracle::reference_png(img).size()) / double(img.pixel_count());
    EXPECT_NEAR(ours, ref, 0.1 * ref) << "channels " << c;
  }
}

TEST(PngIo, RoundTripsEightBitData) {
  for (int c : {1, 3}) {
    const Image img = quantize8(random_image(30 + c, 17, 23, c));
    EXPECT_EQ(decode_png(encode_png(img)), img);
    EXPECT_EQ(decode_png(oracle::reference_png(img)), img);
  }
}

TEST(PngIo, GarbageIsRejected) { EXPECT_THROW(decode_png({1, 2, 3, 4}), Error); }
