#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "sisrfp/error.hpp"
#include "sisrfp/image.hpp"
#include "sisrfp/rng.hpp"

namespace sisrfp {

// Separable interpolation kernel: weight(offset) with |offset| < support.
struct ResampleKernel {
  double support = 2.0;
  std::function<double(double)> weight;
};

// Keys cubic convolution; a = -0.5 is Catmull-Rom.
inline double cubic_weight(double x, double a = -0.5) noexcept {
  x = std::abs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

inline double sinc(double x) noexcept {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

inline ResampleKernel cubic_kernel(double a = -0.5) {
  return {2.0, [a](double x) { return cubic_weight(x, a); }};
}

inline ResampleKernel lanczos_kernel(int lobes = 3, double stretch = 1.0) {
  const double support = lobes * stretch;
  return {support, [lobes, stretch](double x) {
            const double u = x / stretch;
            if (std::abs(u) >= lobes) return 0.0;
            return sinc(u) * sinc(u / lobes);
          }};
}

// Gaussian-windowed sinc with a cutoff below Nyquist.
inline ResampleKernel windowed_sinc_kernel(double cutoff, double window_sigma, double support = 3.0) {
  return {support, [cutoff, window_sigma](double x) {
            return cutoff * sinc(cutoff * x) * std::exp(-0.5 * x * x / (window_sigma * window_sigma));
          }};
}

namespace detail {

struct Taps {
  std::vector<int> index;     // clamped source indices, `width` per output sample
  std::vector<double> weight;
  int width = 0;
};

inline int clamp_index(int i, int n) noexcept { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

// Reflect-101 padding: -1 -> 1, n -> n-2; wraps repeatedly for wide kernels.
inline int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

inline Taps make_taps(int in_size, int out_size, const ResampleKernel& k) {
  Taps t;
  const double ratio = static_cast<double>(in_size) / out_size;
  t.width = static_cast<int>(std::ceil(k.support)) * 2;
  t.index.resize(static_cast<std::size_t>(out_size) * t.width);
  t.weight.resize(t.index.size());
  for (int o = 0; o < out_size; ++o) {
    const double center = (o + 0.5) * ratio - 0.5;
    const int first = static_cast<int>(std::floor(center)) - t.width / 2 + 1;
    double sum = 0.0;
    for (int j = 0; j < t.width; ++j) {
      const double w = k.weight(center - (first + j));
      t.index[static_cast<std::size_t>(o) * t.width + j] = clamp_index(first + j, in_size);
      t.weight[static_cast<std::size_t>(o) * t.width + j] = w;
      sum += w;
    }
    if (sum != 0.0 && sum != 1.0) {
      for (int j = 0; j < t.width; ++j) t.weight[static_cast<std::size_t>(o) * t.width + j] /= sum;
    }
  }
  return t;
}

}  // namespace detail

// Separable resampling to an explicit size, clamped borders, output clamped.
inline Image resample_to(const Image& img, int out_h, int out_w, const ResampleKernel& kernel) {
  if (out_h < 1 || out_w < 1) {
    fail("empty-output", "resample to " + std::to_string(out_h) + "x" + std::to_string(out_w));
  }
  const int c = img.channels();
  const auto tx = detail::make_taps(img.width(), out_w, kernel);
  const auto ty = detail::make_taps(img.height(), out_h, kernel);

  // horizontal pass into double buffer
  std::vector<double> mid(static_cast<std::size_t>(img.height()) * out_w * c, 0.0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < out_w; ++x) {
      for (int j = 0; j < tx.width; ++j) {
        const auto t = static_cast<std::size_t>(x) * tx.width + j;
        const double w = tx.weight[t];
        if (w == 0.0) continue;
        for (int ch = 0; ch < c; ++ch) {
          mid[(static_cast<std::size_t>(y) * out_w + x) * c + ch] += w * img.at(y, tx.index[t], ch);
        }
      }
    }
  }
  Image out(out_h, out_w, c);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int j = 0; j < ty.width; ++j) {
          const auto t = static_cast<std::size_t>(y) * ty.width + j;
          const double w = ty.weight[t];
          if (w == 0.0) continue;
          acc += w * mid[(static_cast<std::size_t>(ty.index[t]) * out_w + x) * c + ch];
        }
        out.at(y, x, ch) = static_cast<float>(acc);
      }
    }
  }
  out.clamp01();
  return out;
}

inline int scaled_dim(int dim, double scale) {
  return static_cast<int>(std::lround(dim * scale));
}

// Catmull-Rom resampling; output is round(h*scale) x round(w*scale).
inline Image bicubic_resample(const Image& img, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    fail("empty-output", "scale must be positive");
  }
  return resample_to(img, scaled_dim(img.height(), scale), scaled_dim(img.width(), scale),
                     cubic_kernel(-0.5));
}

inline std::vector<double> gaussian_kernel_1d(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable convolution of an interleaved float buffer with reflect-101 borders.
inline void convolve_separable(std::vector<float>& data, int h, int w, int c,
                               const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  std::vector<double> tmp(data.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sx = detail::reflect_index(x + i, w);
          acc += kernel[static_cast<std::size_t>(i + radius)] *
                 data[(static_cast<std::size_t>(y) * w + sx) * c + ch];
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * c + ch] = acc;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sy = detail::reflect_index(y + i, h);
          acc += kernel[static_cast<std::size_t>(i + radius)] *
                 tmp[(static_cast<std::size_t>(sy) * w + x) * c + ch];
        }
        data[(static_cast<std::size_t>(y) * w + x) * c + ch] = static_cast<float>(acc);
      }
    }
  }
}

// Separable Gaussian, radius ceil(3*sigma), reflect-101 borders. sigma = 0 is identity.
inline Image gaussian_blur(const Image& img, double sigma) {
  if (sigma < 0.0 || !std::isfinite(sigma)) fail("bad-sigma", std::to_string(sigma));
  if (sigma == 0.0) return img;
  std::vector<float> buf(img.data().begin(), img.data().end());
  convolve_separable(buf, img.height(), img.width(), img.channels(), gaussian_kernel_1d(sigma));
  return Image(img.height(), img.width(), img.channels(), std::move(buf));
}

inline Plane gaussian_blur(const Plane& p, double sigma) {
  if (sigma <= 0.0) return p;
  Plane out = p;
  convolve_separable(out.data, p.height, p.width, 1, gaussian_kernel_1d(sigma));
  return out;
}

inline double default_degrade_sigma(int scale_factor) { return scale_factor / 2.0; }

// Low-resolution producer: Gaussian blur, then Catmull-Rom downsampling by 1/scale_factor.
inline Image degrade(const Image& img, int scale_factor, double blur_sigma) {
  if (scale_factor != 2 && scale_factor != 4) {
    fail("bad-scale", "scale factor must be 2 or 4, got " + std::to_string(scale_factor));
  }
  return bicubic_resample(gaussian_blur(img, blur_sigma), 1.0 / scale_factor);
}

inline Image degrade(const Image& img, int scale_factor) {
  return degrade(img, scale_factor, default_degrade_sigma(scale_factor));
}

// Shrinks so that max(h, w) == max_dim; never enlarges.
inline Image fit_max_dim(const Image& img, int max_dim) {
  const int largest = std::max(img.height(), img.width());
  if (largest <= max_dim) return img;
  const double scale = static_cast<double>(max_dim) / largest;
  const Image blurred = gaussian_blur(img, 0.5 / scale);
  const int h = img.height() >= img.width() ? max_dim : scaled_dim(img.height(), scale);
  const int w = img.width() >= img.height() ? max_dim : scaled_dim(img.width(), scale);
  return resample_to(blurred, h, w, cubic_kernel(-0.5));
}

struct CropPolicy {
  enum class Mode { random, center };
  Mode mode = Mode::center;
  int size = 64;
};

struct CropOffset {
  int y = 0;
  int x = 0;
  friend bool operator==(const CropOffset&, const CropOffset&) = default;
};

inline CropOffset crop_offset(int height, int width, const CropPolicy& policy, std::uint64_t rng_seed) {
  if (policy.size < 1 || policy.size > height || policy.size > width) {
    fail("crop-too-large", "crop " + std::to_string(policy.size) + " from " + std::to_string(height) +
                               "x" + std::to_string(width));
  }
  if (policy.mode == CropPolicy::Mode::center) {
    return {(height - policy.size) / 2, (width - policy.size) / 2};
  }
  Rng rng(rng_seed);
  const int oy = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - policy.size + 1)));
  const int ox = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - policy.size + 1)));
  return {oy, ox};
}

inline Image crop_at(const Image& img, CropOffset off, int size) {
  Image out(size, size, img.channels());
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < img.channels(); ++c) out.at(y, x, c) = img.at(off.y + y, off.x + x, c);
    }
  }
  return out;
}

inline Image crop(const Image& img, const CropPolicy& policy, std::uint64_t rng_seed) {
  return crop_at(img, crop_offset(img.height(), img.width(), policy, rng_seed), policy.size);
}

}  // namespace sisrfp
