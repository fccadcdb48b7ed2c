#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "sisrfp/nn/layers.hpp"

namespace sisrfp::nn {

// Small CNN standing in for a large pretrained backbone:
// [conv3x3 -> relu -> maxpool] per block (no pool after the last), global
// average pool, a feature layer, and a linear head.
struct ClassifierConfig {
  int input_size = 64;
  int channels = 3;
  std::vector<int> conv_widths = {8, 16, 32, 32};
  int feature_width = 256;
  bool normalize = false;  // batchless-norm after each conv
  // When > 0 the network sees crop - gaussian_blur(crop, sigma) instead of the crop.
  double highpass_sigma = 0.0;

  std::string feature_tap() const { return "features.relu"; }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ClassifierConfig, input_size, channels, conv_widths, feature_width,
                                                normalize, highpass_sigma)

inline std::vector<LayerSpec> classifier_specs(const ClassifierConfig& cfg, int classes) {
  std::vector<LayerSpec> s;
  int in = cfg.channels;
  for (std::size_t i = 0; i < cfg.conv_widths.size(); ++i) {
    const std::string b = "block" + std::to_string(i + 1);
    s.push_back({LayerKind::conv2d, b + ".conv", in, cfg.conv_widths[i], 3, 1, 1});
    if (cfg.normalize) s.push_back({LayerKind::batchless_norm, b + ".norm"});
    s.push_back({LayerKind::relu, b + ".relu"});
    if (i + 1 < cfg.conv_widths.size()) s.push_back({LayerKind::maxpool, b + ".pool", 0, 0, 2});
    in = cfg.conv_widths[i];
  }
  s.push_back({LayerKind::global_avg_pool, "gap"});
  s.push_back({LayerKind::linear, "features", in, cfg.feature_width});
  s.push_back({LayerKind::relu, "features.relu"});
  s.push_back({LayerKind::linear, "head", cfg.feature_width, classes});
  s.push_back({LayerKind::softmax_xent, "loss"});
  return s;
}

// Three conv layers at low resolution, pixel replication, one conv at high
// resolution. Callers add the nearest-upsampled input as a global skip.
struct SrNetConfig {
  int scale = 2;
  int width = 16;
};

inline std::vector<LayerSpec> sr_specs(const SrNetConfig& cfg) {
  return {
      {LayerKind::conv2d, "sr.conv1", 3, cfg.width, 3, 1, 1},
      {LayerKind::relu, "sr.relu1"},
      {LayerKind::conv2d, "sr.conv2", cfg.width, cfg.width, 3, 1, 1},
      {LayerKind::relu, "sr.relu2"},
      {LayerKind::conv2d, "sr.conv3", cfg.width, cfg.width, 3, 1, 1},
      {LayerKind::relu, "sr.relu3"},
      {LayerKind::upsample, "sr.up", 0, 0, 3, 1, 1, cfg.scale},
      {LayerKind::conv2d, "sr.out", cfg.width, 3, 3, 1, 1},
  };
}

// Three-conv discriminator ending in a probability.
inline std::vector<LayerSpec> discriminator_specs(int width = 8) {
  return {
      {LayerKind::conv2d, "d.conv1", 3, width, 3, 1, 1},
      {LayerKind::relu, "d.relu1"},
      {LayerKind::maxpool, "d.pool1", 0, 0, 2},
      {LayerKind::conv2d, "d.conv2", width, 2 * width, 3, 1, 1},
      {LayerKind::relu, "d.relu2"},
      {LayerKind::maxpool, "d.pool2", 0, 0, 2},
      {LayerKind::conv2d, "d.conv3", 2 * width, 2 * width, 3, 1, 1},
      {LayerKind::relu, "d.relu3"},
      {LayerKind::global_avg_pool, "d.gap"},
      {LayerKind::linear, "d.fc", 2 * width, 1},
      {LayerKind::sigmoid, "d.prob"},
  };
}

}  // namespace sisrfp::nn
