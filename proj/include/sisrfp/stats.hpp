#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "sisrfp/error.hpp"
#include "sisrfp/image.hpp"
#include "sisrfp/png_io.hpp"

namespace sisrfp {

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

// Population standard deviation; a single sample has stddev 0.
inline MeanStd mean_std(std::span<const double> xs) {
  if (xs.empty()) return {};
  double s = 0.0;
  for (double x : xs) s += x;
  const double m = s / static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

// Shannon entropy (bits) of the 256-bin Rec.601 grayscale histogram.
inline double grayscale_entropy(const Image& img) {
  const Image g = to_grayscale(img);
  std::array<std::size_t, 256> hist{};
  for (float v : g.data()) {
    const long bin = std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f);
    ++hist[static_cast<std::size_t>(bin)];
  }
  const double n = static_cast<double>(g.pixel_count());
  double h = 0.0;
  for (std::size_t count : hist) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  return h == 0.0 ? 0.0 : h;  // no negative zero
}

inline double png_bits_per_pixel(const Image& img) {
  return 8.0 * static_cast<double>(encode_png(img).size()) / static_cast<double>(img.pixel_count());
}

struct CorpusStats {
  std::size_t image_count = 0;
  double mean_ppi = 0.0;
  MeanStd bpp_png;
  MeanStd entropy;
};

inline CorpusStats corpus_stats(std::span<const Image> images) {
  if (images.empty()) fail("empty-corpus", "no images");
  CorpusStats s;
  s.image_count = images.size();
  std::vector<double> bpp;
  std::vector<double> ent;
  double ppi = 0.0;
  for (const Image& img : images) {
    ppi += static_cast<double>(img.pixel_count());
    bpp.push_back(png_bits_per_pixel(img));
    ent.push_back(grayscale_entropy(img));
  }
  s.mean_ppi = ppi / static_cast<double>(images.size());
  s.bpp_png = mean_std(bpp);
  s.entropy = mean_std(ent);
  return s;
}

}  // namespace sisrfp
