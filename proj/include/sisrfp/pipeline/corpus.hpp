#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "sisrfp/image.hpp"
#include "sisrfp/png_io.hpp"
#include "sisrfp/resample.hpp"
#include "sisrfp/rng.hpp"

namespace sisrfp::pipeline {

namespace detail {

// Bilinearly interpolated lattice noise with `cells` cells across the image.
inline void add_value_noise(Image& img, Rng& rng, int cells, double amp, const std::array<double, 3>& tint) {
  const int h = img.height(), w = img.width();
  std::vector<double> lattice(std::size_t(cells + 2) * (cells + 2));
  for (double& v : lattice) v = rng.uniform(-1.0, 1.0);
  for (int y = 0; y < h; ++y) {
    const double fy = double(y) / h * cells;
    const int iy = int(fy);
    const double ty = fy - iy;
    for (int x = 0; x < w; ++x) {
      const double fx = double(x) / w * cells;
      const int ix = int(fx);
      const double tx = fx - ix;
      auto at = [&](int a, int b) { return lattice[std::size_t(a) * (cells + 2) + b]; };
      const double v = (1 - ty) * ((1 - tx) * at(iy, ix) + tx * at(iy, ix + 1)) +
                       ty * ((1 - tx) * at(iy + 1, ix) + tx * at(iy + 1, ix + 1));
      for (int c = 0; c < img.channels(); ++c) img.at(y, x, c) += float(amp * v * tint[std::size_t(c % 3)]);
    }
  }
}

}  // namespace detail

// Procedural stand-in for a photograph: smooth illumination, multi-octave
// texture, hard-edged shapes and thin lines, so that images carry both flat
// regions and edges at several scales. Deterministic in (seed, h, w).
inline Image synthesize_source(std::uint64_t seed, int height, int width) {
  Rng rng(hash_combine(seed, 0xc0de));
  Image img(height, width, 3);
  std::array<double, 3> base{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)};
  const double gy = rng.uniform(-0.25, 0.25), gx = rng.uniform(-0.25, 0.25);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.at(y, x, c) = float(base[std::size_t(c)] + gy * (double(y) / height - 0.5) + gx * (double(x) / width - 0.5));
      }
    }
  }
  for (int octave = 0; octave < 4; ++octave) {
    const int cells = 2 << octave;
    const std::array<double, 3> tint{rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0)};
    detail::add_value_noise(img, rng, std::max(2, cells * std::max(height, width) / 64), 0.18 / (octave + 1), tint);
  }
  const int shapes = 3 + int(rng.below(6));
  for (int s = 0; s < shapes; ++s) {
    const std::array<double, 3> col{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};
    const double alpha = rng.uniform(0.4, 0.9);
    const double cy = rng.uniform(0, height), cx = rng.uniform(0, width);
    const double ry = rng.uniform(3, height / 3.0), rx = rng.uniform(3, width / 3.0);
    const auto kind = rng.below(3);
    const double angle = rng.uniform(0, 3.14159), ca = std::cos(angle), sa = std::sin(angle);
    const double thickness = rng.uniform(0.5, 1.5);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double u = ca * (x - cx) + sa * (y - cy), v = -sa * (x - cx) + ca * (y - cy);
        bool inside = false;
        if (kind == 0) inside = (u * u) / (rx * rx) + (v * v) / (ry * ry) < 1.0;
        if (kind == 1) inside = std::fabs(u) < rx && std::fabs(v) < ry;
        if (kind == 2) inside = std::fabs(v) < thickness && std::fabs(u) < rx * 2;  // line
        if (!inside) continue;
        for (int c = 0; c < 3; ++c) {
          img.at(y, x, c) = float((1 - alpha) * img.at(y, x, c) + alpha * col[std::size_t(c)]);
        }
      }
    }
  }
  img.clamp01();
  return quantize8(img);
}

struct SourceImage {
  std::string image_id;  // file stem
  std::filesystem::path path;
  Image image;
};

struct IngestOptions {
  int max_dim = 960;
  int min_dim = 64;  // smaller images are rejected
};

struct IngestResult {
  std::vector<SourceImage> images;
  std::vector<std::string> skipped;  // "path: reason"
};

// Loads every PNG in `dir` (sorted by file name), shrinking each so that its
// longest side is at most max_dim. Undecodable or too-small files are
// skipped with a warning.
inline IngestResult ingest_corpus(const std::filesystem::path& dir, const IngestOptions& opt = {},
                                  std::ostream* warn = &std::cerr) {
  if (!std::filesystem::is_directory(dir)) fail("io-error", dir.string() + " is not a directory", ErrorKind::usage);
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    if (ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  IngestResult res;
  for (const auto& f : files) {
    try {
      Image img = read_png(f);
      if (std::min(img.height(), img.width()) < opt.min_dim) {
        fail("too-small", std::to_string(img.height()) + "x" + std::to_string(img.width()) + " is below the minimum " +
                              std::to_string(opt.min_dim));
      }
      img = fit_max_dim(img, opt.max_dim);
      if (img.channels() == 1) {
        Image rgb(img.height(), img.width(), 3);
        for (int y = 0; y < img.height(); ++y) {
          for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = img.at(y, x);
          }
        }
        img = rgb;
      }
      res.images.push_back({f.stem().string(), f, quantize8(img)});
    } catch (const Error& e) {
      res.skipped.push_back(f.string() + ": " + e.what());
      if (warn) *warn << "warning: skipping " << f.string() << " (" << e.what() << ")\n";
    }
  }
  if (res.images.empty()) fail("empty-corpus", "no usable PNG images in " + dir.string());
  return res;
}

// Writes `count` procedural sources as src_0000.png, ... into `dir`.
inline void write_synthetic_corpus(const std::filesystem::path& dir, int count, int height, int width,
                                   std::uint64_t seed) {
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "src_%04d.png", i);
    write_png(dir / name, synthesize_source(hash_combine(seed, std::uint64_t(i)), height, width));
  }
}

}  // namespace sisrfp::pipeline
