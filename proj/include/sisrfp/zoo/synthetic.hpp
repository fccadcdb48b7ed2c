#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "json.hpp"
#include "sisrfp/image.hpp"
#include "sisrfp/resample.hpp"
#include "sisrfp/rng.hpp"
#include "sisrfp/zoo/model_spec.hpp"

namespace sisrfp::zoo {

// Procedural parameters of one synthetic upsampler, all derived from
// (ModelSpec, master seed).
struct SyntheticParams {
  int scale = 2;
  Architecture architecture = Architecture::bicubic;
  double kernel_param = 0.0;  // cubic a, lanczos stretch, sinc cutoff, edge strength or nonlocal h
  std::array<double, 3> gain{1.0, 1.0, 1.0};
  double gamma = 1.0;
  double smooth_sigma = 0.0;  // L1 analog
  bool adversarial = false;
  double sharpen_sigma = 0.0;
  double sharpen_amount = 0.0;
  std::array<double, 25> texture_kernel{};  // 5x5, zero mean, unit L2 norm
  double texture_amplitude = 0.0;
  std::vector<double> tile;  // scale x scale, zero mean, unit RMS
  double tile_amplitude = 0.0;
  std::uint64_t noise_seed = 0;
};

inline void to_json(nlohmann::json& j, const SyntheticParams& p) {
  j = {{"scale", p.scale},
       {"architecture", to_string(p.architecture)},
       {"kernel_param", p.kernel_param},
       {"gain", p.gain},
       {"gamma", p.gamma},
       {"smooth_sigma", p.smooth_sigma},
       {"adversarial", p.adversarial},
       {"sharpen_sigma", p.sharpen_sigma},
       {"sharpen_amount", p.sharpen_amount},
       {"texture_kernel", p.texture_kernel},
       {"texture_amplitude", p.texture_amplitude},
       {"tile", p.tile},
       {"tile_amplitude", p.tile_amplitude},
       {"noise_seed", p.noise_seed}};
}

// Knobs of the synthetic family. Defaults are tuned so loss and scale
// dominate output statistics while dataset and seed stay subtle.
struct SyntheticTuning {
  double kernel_jitter_2x = 0.35;  // fraction of the full jitter range used at 2x
  double l1_smooth_sigma = 0.45;
  double texture_amplitude_per_scale = 0.025;
  double sharpen_amount_2x = 0.6;
  double sharpen_amount_4x = 1.4;
  double tile_amplitude = 0.003;
  double l1_tile_amplitude_2x = 0.0;  // grid-periodic residue left by L1 models
  double l1_tile_amplitude_4x = 0.004;
  double palette_gain = 0.015;
  double palette_gamma = 0.03;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SyntheticTuning, kernel_jitter_2x, l1_smooth_sigma,
                                                texture_amplitude_per_scale, sharpen_amount_2x, sharpen_amount_4x,
                                                tile_amplitude, l1_tile_amplitude_2x, l1_tile_amplitude_4x,
                                                palette_gain, palette_gamma)

namespace detail {

using sisrfp::detail::clamp_index;
using sisrfp::detail::reflect_index;

inline void normalize_kernel(std::array<double, 25>& k) {
  double mean = 0.0;
  for (double v : k) mean += v / 25.0;
  double norm = 0.0;
  for (double& v : k) {
    v -= mean;
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : k) v /= norm;
}

// VGG-analog texture: smooth random blob pattern.
inline std::array<double, 25> blob_kernel(Rng& rng) {
  std::array<double, 25> k{};
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double r2 = (i - 2) * (i - 2) + (j - 2) * (j - 2);
      k[i * 5 + j] = rng.normal() * std::exp(-r2 / (2 * 1.2 * 1.2));
    }
  }
  normalize_kernel(k);
  return k;
}

// ResNet-analog texture: oriented Gabor with a little random admixture.
inline std::array<double, 25> gabor_kernel(Rng& rng) {
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const double freq = rng.uniform(0.18, 0.42);
  const double phase = rng.uniform(0.0, 2 * std::numbers::pi);
  std::array<double, 25> k{};
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double y = i - 2, x = j - 2;
      const double u = x * std::cos(theta) + y * std::sin(theta);
      const double env = std::exp(-(x * x + y * y) / (2 * 1.3 * 1.3));
      k[i * 5 + j] = env * std::cos(2 * std::numbers::pi * freq * u + phase) + 0.3 * env * rng.normal();
    }
  }
  normalize_kernel(k);
  return k;
}

inline void normalize_tile(std::vector<double>& t) {
  double mean = 0.0;
  for (double v : t) mean += v / double(t.size());
  double rms = 0.0;
  for (double& v : t) {
    v -= mean;
    rms += v * v / double(t.size());
  }
  rms = std::sqrt(rms);
  for (double& v : t) v /= rms;
}

inline std::vector<double> random_tile(Rng& rng, int s) {
  std::vector<double> t(static_cast<std::size_t>(s) * s);
  for (double& v : t) v = rng.normal();
  normalize_tile(t);
  return t;
}

inline std::vector<float> luma(const Image& img) {
  std::vector<float> y(img.pixel_count());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      const std::size_t i = std::size_t(r) * img.width() + c;
      y[i] = img.channels() == 3 ? 0.299f * img.at(r, c, 0) + 0.587f * img.at(r, c, 1) + 0.114f * img.at(r, c, 2)
                                 : img.at(r, c);
    }
  }
  return y;
}

inline float sample_bilinear(const Image& img, double y, double x, int ch) {
  const int y0 = static_cast<int>(std::floor(y)), x0 = static_cast<int>(std::floor(x));
  const double fy = y - y0, fx = x - x0;
  auto at = [&](int yy, int xx) {
    return img.at(clamp_index(yy, img.height()), clamp_index(xx, img.width()), ch);
  };
  return static_cast<float>((1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
                            fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1)));
}

// Smooths along the local isophote so edges stay crisp while stair-steps fade.
inline Image edge_directed_smooth(const Image& img, double strength) {
  const auto y = luma(img);
  const int h = img.height(), w = img.width();
  auto L = [&](int r, int c) { return y[std::size_t(clamp_index(r, h)) * w + clamp_index(c, w)]; };
  Image out = img;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double gx = 0.5 * (L(r, c + 1) - L(r, c - 1));
      const double gy = 0.5 * (L(r + 1, c) - L(r - 1, c));
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag < 1e-6) continue;
      const double tx = -gy / mag, ty = gx / mag;
      const double wgt = strength * std::min(1.0, mag * 20.0);
      for (int ch = 0; ch < img.channels(); ++ch) {
        const double along =
            0.5 * (sample_bilinear(img, r + ty, c + tx, ch) + sample_bilinear(img, r - ty, c - tx, ch));
        out.at(r, c, ch) = static_cast<float>((1 - wgt) * img.at(r, c, ch) + wgt * along);
      }
    }
  }
  return out;
}

// 5x5 search window, 3x3 luma patches, Gaussian weights exp(-d2 / h^2).
inline Image nonlocal_average(const Image& img, double hparam) {
  const auto y = luma(img);
  const int h = img.height(), w = img.width(), cc = img.channels();
  auto L = [&](int r, int c) { return y[std::size_t(clamp_index(r, h)) * w + clamp_index(c, w)]; };
  Image out(h, w, cc);
  const double inv_h2 = 1.0 / (hparam * hparam);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc[3] = {0, 0, 0}, wsum = 0.0;
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          double d2 = 0.0;
          for (int py = -1; py <= 1; ++py) {
            for (int px = -1; px <= 1; ++px) {
              const double d = L(r + py, c + px) - L(r + dy + py, c + dx + px);
              d2 += d * d;
            }
          }
          const double wt = std::exp(-d2 / 9.0 * inv_h2);
          const int rr = clamp_index(r + dy, h), cx = clamp_index(c + dx, w);
          for (int ch = 0; ch < cc; ++ch) acc[ch] += wt * img.at(rr, cx, ch);
          wsum += wt;
        }
      }
      for (int ch = 0; ch < cc; ++ch) out.at(r, c, ch) = static_cast<float>(acc[ch] / wsum);
    }
  }
  return out;
}

}  // namespace detail

inline SyntheticParams derive_params(const ModelSpec& spec, std::uint64_t master_seed,
                                     const SyntheticTuning& tune = {}) {
  spec.validate();
  SyntheticParams p;
  p.scale = spec.scale;
  p.architecture = spec.architecture;
  Rng rng(spec.hash(master_seed));
  const double j = rng.uniform(-1.0, 1.0) * (spec.scale == 2 ? tune.kernel_jitter_2x : 1.0);
  switch (spec.architecture) {
    case Architecture::bicubic: p.kernel_param = -0.5 + 0.15 * j; break;
    case Architecture::lanczos: p.kernel_param = 1.0 + 0.08 * j; break;
    case Architecture::learned: p.kernel_param = 0.9 + 0.06 * j; break;
    case Architecture::edge: p.kernel_param = 0.6 + 0.25 * j; break;
    case Architecture::nonlocal: p.kernel_param = 0.06 * (1.0 + 0.35 * j); break;
  }

  // the palette depends on the dataset only, so it is shared by every model of that dataset
  Rng drng(hash_combine(master_seed, hash_string("dataset:" + to_string(spec.dataset))));
  const bool quarter = spec.dataset == Dataset::quarter_div2k || spec.dataset == Dataset::quarter_flickr2k;
  const double strength = quarter ? 1.5 : 1.0;
  for (double& g : p.gain) g = 1.0 + strength * tune.palette_gain * drng.uniform(-1.0, 1.0);
  p.gamma = 1.0 + strength * tune.palette_gamma * drng.uniform(-1.0, 1.0);

  p.noise_seed = rng.next_u64();
  if (!is_adversarial(spec.loss)) {
    p.smooth_sigma = tune.l1_smooth_sigma;
    p.tile_amplitude = spec.scale == 2 ? tune.l1_tile_amplitude_2x : tune.l1_tile_amplitude_4x;
    if (p.tile_amplitude > 0.0) {
      // half shared by every L1 model of this architecture and scale, half per model
      Rng srng(hash_combine(master_seed, hash_string("l1-tile:" + to_string(spec.architecture) + ":" +
                                                     std::to_string(spec.scale))));
      const auto shared = detail::random_tile(srng, spec.scale);
      p.tile = detail::random_tile(rng, spec.scale);
      for (std::size_t i = 0; i < p.tile.size(); ++i) p.tile[i] += shared[i];
      detail::normalize_tile(p.tile);
    }
    return p;
  }
  p.adversarial = true;
  p.sharpen_sigma = spec.scale / 2.0;
  p.sharpen_amount = (spec.scale == 2 ? tune.sharpen_amount_2x : tune.sharpen_amount_4x) *
                     (spec.loss == Loss::resnet_adv ? 1.15 : 1.0);
  p.texture_kernel = spec.loss == Loss::vgg_adv ? detail::blob_kernel(rng) : detail::gabor_kernel(rng);
  p.texture_amplitude = tune.texture_amplitude_per_scale * spec.scale;
  p.tile = detail::random_tile(rng, spec.scale);
  p.tile_amplitude = tune.tile_amplitude;
  return p;
}

inline Image upsample(const SyntheticParams& p, const Image& lr) {
  const int H = lr.height() * p.scale, W = lr.width() * p.scale;
  switch (p.architecture) {
    case Architecture::bicubic: return resample_to(lr, H, W, cubic_kernel(p.kernel_param));
    case Architecture::lanczos: return resample_to(lr, H, W, lanczos_kernel(3, p.kernel_param));
    case Architecture::learned: return resample_to(lr, H, W, windowed_sinc_kernel(p.kernel_param, 1.5, 3.0));
    case Architecture::edge: return detail::edge_directed_smooth(resample_to(lr, H, W, cubic_kernel()), p.kernel_param);
    case Architecture::nonlocal: return detail::nonlocal_average(resample_to(lr, H, W, cubic_kernel()), p.kernel_param);
  }
  return {};
}

// LR -> HR for a synthetic model; deterministic per (params, lr).
inline Image synthesize(const SyntheticParams& p, const Image& lr) {
  Image hr = upsample(p, lr);
  for (int r = 0; r < hr.height(); ++r) {
    for (int c = 0; c < hr.width(); ++c) {
      for (int ch = 0; ch < hr.channels(); ++ch) {
        float& v = hr.at(r, c, ch);
        v = static_cast<float>(p.gain[ch % 3] * std::pow(double(std::max(v, 0.0f)), p.gamma));
      }
    }
  }
  hr.clamp01();
  if (!p.adversarial) {
    Image out = gaussian_blur(hr, p.smooth_sigma);
    if (p.tile_amplitude <= 0.0) return out;
    for (int r = 0; r < out.height(); ++r) {
      for (int c = 0; c < out.width(); ++c) {
        const double add = p.tile_amplitude * p.tile[std::size_t(r % p.scale) * p.scale + (c % p.scale)];
        for (int ch = 0; ch < out.channels(); ++ch) out.at(r, c, ch) += static_cast<float>(add);
      }
    }
    out.clamp01();
    return out;
  }

  const Image blurred = gaussian_blur(hr, p.sharpen_sigma);
  const int h = hr.height(), w = hr.width();
  // content-dependent modulation: hallucinated detail concentrates on structure
  Plane activity(h, w);
  {
    const auto y = detail::luma(blurred);
    auto L = [&](int r, int c) { return y[std::size_t(detail::clamp_index(r, h)) * w + detail::clamp_index(c, w)]; };
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const double gx = 0.5 * (L(r, c + 1) - L(r, c - 1)), gy = 0.5 * (L(r + 1, c) - L(r - 1, c));
        activity.at(r, c) = static_cast<float>(0.35 + std::min(1.2, 12.0 * std::sqrt(gx * gx + gy * gy)));
      }
    }
  }
  Plane noise(h, w);
  Rng rng(hash_combine(p.noise_seed, hash_floats(lr.data())));
  for (float& v : noise.data) v = static_cast<float>(rng.normal());
  Image out(h, w, hr.channels());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double t = 0.0;
      for (int i = 0; i < 5; ++i) {
        for (int k = 0; k < 5; ++k) {
          t += p.texture_kernel[i * 5 + k] *
               noise.at(detail::reflect_index(r + i - 2, h), detail::reflect_index(c + k - 2, w));
        }
      }
      const double add = p.texture_amplitude * activity.at(r, c) * t +
                         p.tile_amplitude * p.tile[std::size_t(r % p.scale) * p.scale + (c % p.scale)];
      for (int ch = 0; ch < hr.channels(); ++ch) {
        const double base = hr.at(r, c, ch);
        out.at(r, c, ch) = static_cast<float>(base + p.sharpen_amount * (base - blurred.at(r, c, ch)) + add);
      }
    }
  }
  out.clamp01();
  return out;
}

}  // namespace sisrfp::zoo
