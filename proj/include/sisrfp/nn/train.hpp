#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sisrfp/nn/loss.hpp"
#include "sisrfp/nn/network.hpp"
#include "sisrfp/nn/optim.hpp"

namespace sisrfp::nn {

struct TrainSchedule {
  int frozen_epochs = 3;     // only the head is trainable
  int finetune_epochs = 15;  // every weight is trainable
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (frozen_epochs < 0 || finetune_epochs < 0) fail("bad-config", "epoch counts must be >= 0", ErrorKind::usage);
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainSchedule, frozen_epochs, finetune_epochs, rng_seed)

// Labelled samples for classifier training. `load` writes one sample of
// sample_shape() into `out`; `seed` drives any per-draw randomness (crops).
template <typename T>
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual int label(std::size_t i) const = 0;
  virtual Shape sample_shape() const = 0;
  virtual void load(std::size_t i, std::uint64_t seed, std::span<T> out) const = 0;
};

// Fixed in-memory samples.
template <typename T>
class TensorSource final : public SampleSource<T> {
 public:
  TensorSource(Shape sample_shape, std::vector<std::vector<T>> samples, std::vector<int> labels)
      : shape_(std::move(sample_shape)), samples_(std::move(samples)), labels_(std::move(labels)) {}
  std::size_t size() const override { return samples_.size(); }
  int label(std::size_t i) const override { return labels_[i]; }
  Shape sample_shape() const override { return shape_; }
  void load(std::size_t i, std::uint64_t, std::span<T> out) const override {
    std::copy(samples_[i].begin(), samples_[i].end(), out.begin());
  }

 private:
  Shape shape_;
  std::vector<std::vector<T>> samples_;
  std::vector<int> labels_;
};

struct EpochRecord {
  int epoch = 0;  // 1-based across both phases
  std::string phase;
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> curve;
};

inline void write_loss_curve_csv(const std::string& path, const TrainResult& r) {
  std::ofstream out(path);
  if (!out) fail("io-error", "cannot write " + path);
  out << "epoch,phase,mean_loss,train_accuracy\n";
  out.precision(9);
  for (const auto& e : r.curve) out << e.epoch << ',' << e.phase << ',' << e.mean_loss << ',' << e.accuracy << '\n';
}

template <typename T>
Tensor<T> gather_batch(const SampleSource<T>& data, std::span<const std::size_t> idx,
                       const std::function<std::uint64_t(std::size_t)>& seed_of) {
  Shape s{idx.size()};
  const Shape ss = data.sample_shape();
  s.insert(s.end(), ss.begin(), ss.end());
  Tensor<T> batch(s);
  for (std::size_t b = 0; b < idx.size(); ++b) data.load(idx[b], seed_of(idx[b]), batch.sample(b));
  return batch;
}

// Classifier training: `frozen_epochs` updating only the head, then
// `finetune_epochs` updating everything. Sample order, crops and init are all
// derived from sched.rng_seed, so equal inputs give bitwise-equal weights.
template <typename T>
TrainResult train(Network<T>& net, const SampleSource<T>& data, const OptimizerConfig& opt,
                  const TrainSchedule& sched, const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  opt.validate();
  sched.validate();
  if (data.size() == 0) fail("empty-dataset", "no training samples");
  if (!net.has_xent_head()) fail("no-loss-head", "classifier needs a softmax-xent head", ErrorKind::usage);
  const std::size_t classes = net.output_classes();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.label(i) < 0 || std::size_t(data.label(i)) >= classes) {
      fail("bad-label", "label " + std::to_string(data.label(i)) + " outside [0," + std::to_string(classes) + ")");
    }
  }

  Optimizer<T> optimizer(opt, net);
  TrainResult result;
  std::vector<std::size_t> order(data.size());
  const int total = sched.frozen_epochs + sched.finetune_epochs;
  for (int epoch = 1; epoch <= total; ++epoch) {
    const bool frozen = epoch <= sched.frozen_epochs;
    const std::size_t first = frozen ? net.head_index() : 0;
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(hash_combine(sched.rng_seed, 0x5eedULL + epoch));
    shuffle_rng.shuffle(order.begin(), order.end());

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(order.size(), start + std::size_t(opt.batch_size));
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const Tensor<T> batch = gather_batch<T>(data, idx, [&](std::size_t i) {
        return hash_combine(hash_combine(sched.rng_seed, std::uint64_t(epoch)), i);
      });
      std::vector<int> labels(idx.size());
      for (std::size_t b = 0; b < idx.size(); ++b) labels[b] = data.label(idx[b]);

      const Tape<T> tape = net.forward_tape(batch);
      auto lr = softmax_xent(tape.output(), labels);
      if (!std::isfinite(lr.loss)) {
        fail("diverged", "non-finite loss in epoch " + std::to_string(epoch), ErrorKind::diverged);
      }
      loss_sum += lr.loss * double(idx.size());
      const Tensor<T>& logits = tape.output();
      for (std::size_t b = 0; b < idx.size(); ++b) {
        const auto row = logits.sample(b);
        const auto arg = std::size_t(std::max_element(row.begin(), row.end()) - row.begin());
        if (arg == std::size_t(labels[b])) ++correct;
      }
      auto grads = net.zero_grads();
      net.backward(tape, std::move(lr.grad), grads, first);
      optimizer.step(net, grads, first);
    }
    EpochRecord rec{epoch, frozen ? "frozen" : "finetune", loss_sum / double(data.size()),
                    double(correct) / double(data.size())};
    result.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

template <typename T>
std::vector<int> predict(const Network<T>& net, const Tensor<T>& batch) {
  const Tensor<T> logits = net.forward(batch);
  std::vector<int> out(logits.dim(0));
  for (std::size_t b = 0; b < out.size(); ++b) {
    const auto row = logits.sample(b);
    out[b] = int(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

// Penultimate activations (or whichever layer is configured as the tap).
template <typename T>
Tensor<T> extract_features(const Network<T>& net, const Tensor<T>& batch) {
  if (!net.feature_tap()) fail("no-feature-tap", "network has no feature tap configured");
  Tensor<T> f = net.forward_until(batch, *net.feature_tap());
  if (f.rank() != 2) f.reshape({f.dim(0), f.size() / f.dim(0)});
  return f;
}

}  // namespace sisrfp::nn
