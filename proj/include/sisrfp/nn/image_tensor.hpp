#pragma once

#include <span>
#include <vector>

#include "sisrfp/image.hpp"
#include "sisrfp/nn/tensor.hpp"

namespace sisrfp::nn {

// Writes an HWC image into one CHW sample slot.
template <typename T>
void image_to_chw(const Image& img, std::span<T> out) {
  const int h = img.height(), w = img.width(), c = img.channels();
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out[(std::size_t(ch) * h + y) * w + x] = static_cast<T>(img.at(y, x, ch));
    }
  }
}

template <typename T>
Tensor<T> images_to_batch(std::span<const Image> imgs) {
  if (imgs.empty()) fail("shape-error", "empty image batch");
  const Image& f = imgs.front();
  Tensor<T> t({imgs.size(), std::size_t(f.channels()), std::size_t(f.height()), std::size_t(f.width())});
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    if (!imgs[i].same_shape(f)) fail("shape-error", "images in a batch must share a shape");
    image_to_chw<T>(imgs[i], t.sample(i));
  }
  return t;
}

template <typename T>
Tensor<T> image_to_tensor(const Image& img) {
  return images_to_batch<T>(std::span<const Image>(&img, 1));
}

// Sample n of a [N, C, H, W] tensor as an image (values clamped to [0, 1]).
template <typename T>
Image tensor_to_image(const Tensor<T>& t, std::size_t n = 0) {
  const int c = int(t.dim(1)), h = int(t.dim(2)), w = int(t.dim(3));
  Image img(h, w, c);
  const auto s = t.sample(n);
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) img.at(y, x, ch) = static_cast<float>(s[(std::size_t(ch) * h + y) * w + x]);
    }
  }
  img.clamp01();
  return img;
}

}  // namespace sisrfp::nn
