#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sisrfp/nn/architectures.hpp"
#include "sisrfp/nn/checkpoint.hpp"
#include "sisrfp/nn/image_tensor.hpp"
#include "sisrfp/nn/loss.hpp"
#include "sisrfp/nn/optim.hpp"
#include "sisrfp/nn/train.hpp"
#include "sisrfp/resample.hpp"
#include "sisrfp/zoo/zoo.hpp"

namespace sisrfp::zoo {

// A frozen feature network phi, read at one layer (or its final output).
template <typename T>
struct FeatureExtractor {
  std::shared_ptr<const nn::Network<T>> net;
  std::size_t upto = nn::Network<T>::npos;

  FeatureExtractor() = default;
  FeatureExtractor(std::shared_ptr<const nn::Network<T>> n, std::optional<std::string> tap = std::nullopt)
      : net(std::move(n)) {
    if (tap) upto = net->layer_index(*tap);
  }

  nn::Tensor<T> operator()(const nn::Tensor<T>& x) const { return net->forward(x, upto); }
};

// Perceptual extractor reading a mid-depth activation (default "block2.relu").
template <typename T>
FeatureExtractor<T> resnet_style_perceptual(std::shared_ptr<const nn::Network<T>> classifier,
                                            const std::string& tap = "block2.relu") {
  return FeatureExtractor<T>(std::move(classifier), tap);
}

// Perceptual extractor reading the last convolutional activation.
template <typename T>
FeatureExtractor<T> vgg_style_perceptual(std::shared_ptr<const nn::Network<T>> classifier) {
  std::optional<std::string> tap;
  for (std::size_t i = 0; i < classifier->size(); ++i) {
    const auto& s = classifier->specs()[i];
    if (s.kind == nn::LayerKind::relu && s.name.rfind("block", 0) == 0) tap = s.name;
  }
  if (!tap) fail("no-such-layer", "classifier has no block activations");
  return FeatureExtractor<T>(std::move(classifier), tap);
}

// Mean squared distance between phi(a) and phi(b).
template <typename T>
double perceptual_distance(const FeatureExtractor<T>& phi, const nn::Tensor<T>& a, const nn::Tensor<T>& b) {
  return nn::mse_loss(phi(a), phi(b)).loss;
}

template <typename T>
struct LossSpec {
  enum class Kind { l1, composite };
  Kind kind = Kind::l1;
  double adv_weight = 1e-3;
  FeatureExtractor<T> perceptual;                        // phi
  std::shared_ptr<const nn::Network<T>> discriminator;  // D, ends in a probability

  void validate() const {
    if (!(adv_weight >= 0.0)) fail("bad-config", "adv_weight must be >= 0", ErrorKind::usage);
    if (kind == Kind::composite && (!perceptual.net || !discriminator)) {
      fail("bad-config", "composite loss needs both a perceptual network and a discriminator", ErrorKind::usage);
    }
  }
};

template <typename T>
struct CompositeLossResult {
  double loss = 0.0;
  double perceptual = 0.0;   // MSE(phi(hr), phi(sr)); for l1 kind, mean |sr - hr|
  double adversarial = 0.0;  // -log D(sr), batch mean
  nn::Tensor<T> grad;        // dL/d sr
};

// l1: mean |sr - hr|. composite: MSE(phi(hr), phi(sr)) + adv_weight * -log D(sr).
// phi and D are treated as frozen; only the gradient w.r.t. sr is returned.
template <typename T>
CompositeLossResult<T> composite_loss(const LossSpec<T>& spec, const nn::Tensor<T>& sr, const nn::Tensor<T>& hr) {
  spec.validate();
  if (sr.shape() != hr.shape()) {
    fail("shape-error", "sr " + nn::shape_str(sr.shape()) + " vs hr " + nn::shape_str(hr.shape()));
  }
  CompositeLossResult<T> r;
  if (spec.kind == LossSpec<T>::Kind::l1) {
    auto l = nn::l1_loss(sr, hr);
    r.loss = r.perceptual = l.loss;
    r.grad = std::move(l.grad);
    return r;
  }

  const auto& phi = *spec.perceptual.net;
  const auto tape = phi.forward_tape(sr, spec.perceptual.upto);
  const nn::Tensor<T> target = phi.forward(hr, spec.perceptual.upto);
  auto mse = nn::mse_loss(tape.output(), target);
  auto scratch = phi.zero_grads();
  r.grad = phi.size() == 0 ? mse.grad : phi.backward(tape, std::move(mse.grad), scratch, 0, true);
  r.perceptual = mse.loss;

  const auto& D = *spec.discriminator;
  const auto dtape = D.forward_tape(sr);
  const nn::Tensor<T>& prob = dtape.output();
  nn::Tensor<T> dprob(prob.shape());
  const double inv = 1.0 / double(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double p = double(prob[i]);
    if (!(p > 0.0 && p < 1.0)) {
      fail("invalid-discriminator-output", "D(sr) = " + std::to_string(p) + " is outside (0, 1)");
    }
    r.adversarial -= std::log(p) * inv;
    dprob[i] = static_cast<T>(-inv / p);
  }
  if (spec.adv_weight > 0.0) {
    auto dscratch = D.zero_grads();
    const nn::Tensor<T> gadv = D.backward(dtape, std::move(dprob), dscratch, 0, true);
    for (std::size_t i = 0; i < r.grad.size(); ++i) r.grad[i] += static_cast<T>(spec.adv_weight * gadv[i]);
  }
  r.loss = r.perceptual + spec.adv_weight * r.adversarial;
  return r;
}

struct SrTrainConfig {
  int epochs = 10;
  int patches_per_image = 8;  // fixed training pool, drawn once; each epoch visits all of it
  int batch_size = 4;
  int patch = 32;  // HR patch side; must be a multiple of the scale
  int width = 16;
  nn::OptimizerConfig optimizer{nn::OptimizerConfig::Algorithm::adamax, 1e-3, 4, 0.9, 0.999, 1e-8};
  double adv_weight = 1e-3;
  std::uint64_t master_seed = 1;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SrTrainConfig, epochs, patches_per_image, batch_size, patch, width,
                                                optimizer, adv_weight, master_seed)

struct SrTrainResult {
  std::vector<double> epoch_loss;  // mean generator loss per epoch
  std::vector<double> step_loss;
};

namespace detail {

inline std::vector<Image> patch_pool(const std::vector<Image>& imgs, int patch, int per_image, Rng& rng) {
  std::vector<Image> pool;
  pool.reserve(imgs.size() * per_image);
  for (const auto& img : imgs) {
    for (int i = 0; i < per_image; ++i) pool.push_back(crop(img, {CropPolicy::Mode::random, patch}, rng.next_u64()));
  }
  return pool;
}

}  // namespace detail

// Trains the small SR CNN for a trained-sr spec on HR images (LR produced by
// degrade). Composite losses alternate one discriminator step with one
// generator step. Deterministic per (spec, config).
inline std::pair<ZooModel, SrTrainResult> train_sr_model(
    const ModelSpec& spec, const std::vector<Image>& hr_images, const SrTrainConfig& cfg,
    const std::shared_ptr<const nn::Network<float>>& perceptual_classifier = nullptr,
    const std::filesystem::path& checkpoint = {}, const std::function<void(int, double)>& on_epoch = {}) {
  spec.validate();
  if (spec.kind != ModelKind::trained_sr) fail("bad-config", spec.id() + " is not a trained-sr spec", ErrorKind::usage);
  if (hr_images.empty()) fail("empty-dataset", "no SR training images");
  if (cfg.patches_per_image < 1 || cfg.batch_size < 1 || cfg.epochs < 0) fail("bad-config", "SR schedule", ErrorKind::usage);
  if (cfg.patch % spec.scale != 0 || cfg.patch < 2 * spec.scale) {
    fail("bad-config", "patch must be a multiple of the scale", ErrorKind::usage);
  }
  for (const auto& img : hr_images) {
    if (img.channels() != 3) fail("bad-channels", "SR training needs RGB images");
    if (img.height() < cfg.patch || img.width() < cfg.patch) fail("crop-too-large", "training image smaller than patch");
  }

  const std::uint64_t seed = spec.hash(cfg.master_seed);
  const int lr_patch = cfg.patch / spec.scale;
  auto gen = std::make_shared<nn::Network<float>>(nn::sr_specs({spec.scale, cfg.width}),
                                                  nn::Shape{3, std::size_t(lr_patch), std::size_t(lr_patch)}, seed);
  // start close to the skip path
  for (auto& p : gen->layer(gen->layer_index("sr.out")).params()) {
    for (float& v : p.data()) v *= 0.1f;
  }

  LossSpec<float> loss;
  std::shared_ptr<nn::Network<float>> disc;
  if (is_adversarial(spec.loss)) {
    loss.kind = LossSpec<float>::Kind::composite;
    loss.adv_weight = cfg.adv_weight;
    auto phi = perceptual_classifier;
    if (!phi) {
      nn::ClassifierConfig cc;
      cc.input_size = cfg.patch;
      phi = std::make_shared<nn::Network<float>>(nn::classifier_specs(cc, 2),
                                                 nn::Shape{3, std::size_t(cfg.patch), std::size_t(cfg.patch)},
                                                 hash_combine(cfg.master_seed, 0x9e41ULL));
    }
    loss.perceptual = spec.loss == Loss::resnet_adv ? resnet_style_perceptual(phi) : vgg_style_perceptual(phi);
    disc = std::make_shared<nn::Network<float>>(nn::discriminator_specs(),
                                                nn::Shape{3, std::size_t(cfg.patch), std::size_t(cfg.patch)},
                                                hash_combine(seed, 0xd15cULL));
    loss.discriminator = disc;
  }

  nn::OptimizerConfig opt = cfg.optimizer;
  opt.batch_size = cfg.batch_size;
  nn::Optimizer<float> gopt(opt, *gen);
  std::optional<nn::Optimizer<float>> dopt;
  if (disc) dopt.emplace(opt, *disc);

  Rng rng(hash_combine(seed, 0x7a11ULL));
  const std::vector<Image> pool = detail::patch_pool(hr_images, cfg.patch, cfg.patches_per_image, rng);
  std::vector<Image> pool_lr;
  for (const auto& p : pool) pool_lr.push_back(degrade(p, spec.scale));
  std::vector<std::size_t> order(pool.size());
  SrTrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order.begin(), order.end());
    double sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<Image> hb, lb;
      for (std::size_t k = start; k < std::min(order.size(), start + std::size_t(cfg.batch_size)); ++k) {
        hb.push_back(pool[order[k]]);
        lb.push_back(pool_lr[order[k]]);
      }
      const nn::Tensor<float> hr = nn::images_to_batch<float>(hb);
      const nn::Tensor<float> lr = nn::images_to_batch<float>(lb);
      const auto tape = gen->forward_tape(lr);
      nn::Tensor<float> sr = tape.output();
      const nn::Tensor<float> skip = nearest_upsample(lr, spec.scale);
      for (std::size_t i = 0; i < sr.size(); ++i) sr[i] += skip[i];

      if (disc) {
        auto dg = disc->zero_grads();
        const auto real_tape = disc->forward_tape(hr);
        auto real = nn::bce_loss(real_tape.output(), 1.0);
        disc->backward(real_tape, std::move(real.grad), dg);
        const auto fake_tape = disc->forward_tape(sr);
        auto fake = nn::bce_loss(fake_tape.output(), 0.0);
        disc->backward(fake_tape, std::move(fake.grad), dg);
        dopt->step(*disc, dg);
      }

      auto l = composite_loss(loss, sr, hr);
      if (!std::isfinite(l.loss)) {
        fail("diverged", spec.id() + ": non-finite SR loss in epoch " + std::to_string(epoch), ErrorKind::diverged);
      }
      auto gg = gen->zero_grads();
      gen->backward(tape, std::move(l.grad), gg);
      gopt.step(*gen, gg);
      sum += l.loss;
      ++steps;
      result.step_loss.push_back(l.loss);
    }
    result.epoch_loss.push_back(sum / double(steps));
    if (on_epoch) on_epoch(epoch, result.epoch_loss.back());
  }

  if (!checkpoint.empty()) {
    nn::save_checkpoint(checkpoint, *gen, {{"model", spec}, {"scale", spec.scale}, {"kind", "sr-generator"}});
  }
  return {ZooModel(spec, TrainedProvenance{gen, checkpoint.string()}), std::move(result)};
}

}  // namespace sisrfp::zoo
