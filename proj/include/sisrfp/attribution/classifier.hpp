#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "sisrfp/image.hpp"
#include "sisrfp/nn/architectures.hpp"
#include "sisrfp/nn/checkpoint.hpp"
#include "sisrfp/nn/image_tensor.hpp"
#include "sisrfp/nn/train.hpp"
#include "sisrfp/resample.hpp"

namespace sisrfp::attribution {

// One generated image with its provenance.
struct LabeledImage {
  std::string image_id;
  std::string model_id;
  Image image;
};

using ImageSet = std::vector<LabeledImage>;

// Everything needed to train one family of classifiers (attributors or parsers).
// Defaults are the desk settings for 64x64 crops of synthetic-zoo output:
// high-pass input (sigma 1) and Adamax at step 0.01.
struct ClassifierSetup {
  nn::ClassifierConfig arch = [] {
    nn::ClassifierConfig a;
    a.highpass_sigma = 1.0;
    return a;
  }();
  nn::OptimizerConfig optimizer = [] {
    nn::OptimizerConfig o;
    o.learning_rate = 0.01;
    return o;
  }();
  nn::TrainSchedule schedule;  // rng_seed is replaced per classifier seed
  int n_seeds = 3;
  std::uint64_t master_seed = 1;
  int eval_batch = 32;

  int crop() const { return arch.input_size; }
  std::uint64_t seed_for(int k) const { return hash_combine(master_seed, std::uint64_t(k) + 1); }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ClassifierSetup, arch, optimizer, schedule, n_seeds, master_seed,
                                                eval_batch)

// What the network is fed for one crop: the crop itself, or its high-pass
// residual when sigma > 0.
inline Image network_input(Image crop, double highpass_sigma) {
  if (highpass_sigma <= 0.0) return crop;
  const Image low = gaussian_blur(crop, highpass_sigma);
  for (std::size_t i = 0; i < crop.data().size(); ++i) crop.data()[i] -= low.data()[i];
  return crop;
}

// Random crops for training; labels index into a class list.
class CropSource final : public nn::SampleSource<float> {
 public:
  CropSource(std::vector<const Image*> images, std::vector<int> labels, int crop, double highpass_sigma = 0.0)
      : images_(std::move(images)), labels_(std::move(labels)), crop_(crop), highpass_(highpass_sigma) {}
  std::size_t size() const override { return images_.size(); }
  int label(std::size_t i) const override { return labels_[i]; }
  nn::Shape sample_shape() const override {
    return {std::size_t(images_.front()->channels()), std::size_t(crop_), std::size_t(crop_)};
  }
  void load(std::size_t i, std::uint64_t seed, std::span<float> out) const override {
    const CropPolicy policy{CropPolicy::Mode::random, crop_};
    nn::image_to_chw<float>(network_input(crop(*images_[i], policy, seed), highpass_), out);
  }

 private:
  std::vector<const Image*> images_;
  std::vector<int> labels_;
  int crop_;
  double highpass_;
};

struct Classifier {
  std::vector<std::string> classes;
  nn::Network<float> net;
  std::uint64_t seed = 0;
  int crop = 64;
  double highpass_sigma = 0.0;
  nn::TrainResult curve;

  int class_index(const std::string& name) const {
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (classes[i] == name) return int(i);
    }
    return -1;
  }
};

inline Image center_crop_image(const Image& img, int size) { return crop(img, {CropPolicy::Mode::center, size}, 0); }

// Applies `fn` to batches of network inputs built from center crops, in order.
inline void for_each_batch(const ImageSet& images, int crop_size, double highpass_sigma, int batch,
                           const std::function<void(std::size_t first, const nn::Tensor<float>&)>& fn) {
  for (std::size_t start = 0; start < images.size(); start += std::size_t(batch)) {
    const std::size_t end = std::min(images.size(), start + std::size_t(batch));
    std::vector<Image> crops;
    crops.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) crops.push_back(network_input(center_crop_image(images[i].image, crop_size), highpass_sigma));
    fn(start, nn::images_to_batch<float>(crops));
  }
}

// Logits for every image (center crops), one row per image.
inline std::vector<std::vector<double>> logits(const Classifier& clf, const ImageSet& images, int batch = 32) {
  std::vector<std::vector<double>> out(images.size());
  for_each_batch(images, clf.crop, clf.highpass_sigma, batch, [&](std::size_t first, const nn::Tensor<float>& x) {
    const auto y = clf.net.forward(x);
    for (std::size_t b = 0; b < y.dim(0); ++b) {
      const auto row = y.sample(b);
      out[first + b].assign(row.begin(), row.end());
    }
  });
  return out;
}

// Trains one classifier over `images` labelled by `label_of` (an index into
// `classes`, or -1 to skip the image). A warm start copies the backbone of an
// earlier classifier and gives it a fresh head.
inline Classifier train_classifier(const ImageSet& images, const std::function<int(const LabeledImage&)>& label_of,
                                   std::vector<std::string> classes, const ClassifierSetup& setup, int seed_index,
                                   const Classifier* warm_start = nullptr,
                                   const std::function<void(const nn::EpochRecord&)>& on_epoch = {}) {
  std::vector<const Image*> ptrs;
  std::vector<int> labels;
  std::vector<std::size_t> per_class(classes.size(), 0);
  for (const auto& li : images) {
    const int l = label_of(li);
    if (l < 0) continue;
    ptrs.push_back(&li.image);
    labels.push_back(l);
    ++per_class[std::size_t(l)];
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (per_class[c] == 0) fail("empty-class", "class '" + classes[c] + "' has no training images");
  }
  Classifier clf;
  clf.classes = std::move(classes);
  clf.seed = setup.seed_for(seed_index);
  clf.crop = setup.crop();
  clf.highpass_sigma = setup.arch.highpass_sigma;
  const std::size_t channels = std::size_t(setup.arch.channels);
  if (warm_start) {
    clf.net = warm_start->net;
    clf.net.replace_head(clf.classes.size(), clf.seed);
  } else {
    clf.net = nn::Network<float>(nn::classifier_specs(setup.arch, int(clf.classes.size())),
                                 {channels, std::size_t(clf.crop), std::size_t(clf.crop)}, clf.seed);
  }
  clf.net.set_feature_tap(setup.arch.feature_tap());
  nn::TrainSchedule sched = setup.schedule;
  sched.rng_seed = clf.seed;
  CropSource src(std::move(ptrs), std::move(labels), clf.crop, clf.highpass_sigma);
  clf.curve = nn::train(clf.net, src, setup.optimizer, sched, on_epoch);
  return clf;
}

inline void save_classifier(const std::filesystem::path& path, const Classifier& clf,
                            const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json meta = {{"classes", clf.classes}, {"seed", clf.seed}, {"crop", clf.crop},
                         {"highpass_sigma", clf.highpass_sigma}, {"extra", extra}};
  nn::save_checkpoint(path, clf.net, meta);
}

inline Classifier load_classifier(const std::filesystem::path& path) {
  auto ck = nn::load_checkpoint(path);
  Classifier clf;
  try {
    clf.classes = ck.metadata.at("classes").get<std::vector<std::string>>();
    clf.seed = ck.metadata.at("seed").get<std::uint64_t>();
    clf.crop = ck.metadata.at("crop").get<int>();
    clf.highpass_sigma = ck.metadata.value("highpass_sigma", 0.0);
  } catch (const nlohmann::json::exception& e) {
    fail("corrupt-file", path.string() + ": not a classifier checkpoint (" + e.what() + ")");
  }
  clf.net = std::move(ck.net);
  return clf;
}

}  // namespace sisrfp::attribution
