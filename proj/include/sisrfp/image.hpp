#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sisrfp/error.hpp"

namespace sisrfp {

// H x W x C float image, row-major with interleaved channels. Public
// operations keep samples finite and inside [0, 1].
class Image {
 public:
  Image() = default;

  Image(int height, int width, int channels, float fill = 0.0f)
      : height_(height), width_(width), channels_(channels) {
    if (height < 1 || width < 1) {
      fail("empty-image", std::to_string(height) + "x" + std::to_string(width));
    }
    if (channels != 1 && channels != 3) {
      fail("bad-channels", "channels must be 1 or 3, got " + std::to_string(channels));
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  Image(int height, int width, int channels, std::vector<float> data)
      : Image(height, width, channels) {
    if (data.size() != data_.size()) {
      fail("bad-image-data", "expected " + std::to_string(data_.size()) + " samples, got " +
                                 std::to_string(data.size()));
    }
    data_ = std::move(data);
    clamp01();
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int y, int x, int c = 0) noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float at(int y, int x, int c = 0) const noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  void clamp01() noexcept {
    for (float& v : data_) {
      v = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
    }
  }

  double mean() const noexcept {
    double s = 0.0;
    for (float v : data_) s += v;
    return data_.empty() ? 0.0 : s / static_cast<double>(data_.size());
  }

  bool same_shape(const Image& o) const noexcept {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

// Unclamped single-channel float field (noise residuals, fingerprints).
struct Plane {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Plane() = default;
  Plane(int h, int w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  float& at(int y, int x) noexcept { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const noexcept { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Rec.601 luma.
inline Image to_grayscale(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.height(), img.width(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out.at(y, x) = 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) + 0.114f * img.at(y, x, 2);
    }
  }
  out.clamp01();
  return out;
}

inline Plane to_plane(const Image& img) {
  const Image g = to_grayscale(img);
  Plane p(g.height(), g.width());
  std::copy(g.data().begin(), g.data().end(), p.data.begin());
  return p;
}

// Round to the 8-bit grid that PNG storage imposes.
inline Image quantize8(Image img) {
  for (float& v : img.data()) v = std::round(v * 255.0f) / 255.0f;
  return img;
}

}  // namespace sisrfp
