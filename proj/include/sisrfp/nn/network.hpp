#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sisrfp/nn/layers.hpp"

namespace sisrfp::nn {

template <typename T>
using Gradients = std::vector<std::vector<Tensor<T>>>;

// Activations recorded by a forward pass: acts[0] is the input, acts[i + 1]
// the output of layer i.
template <typename T>
struct Tape {
  std::vector<Tensor<T>> acts;
  const Tensor<T>& output() const { return acts.back(); }
};

// Sequential network built from LayerSpecs. A trailing softmax-xent spec marks
// a classification head; it is not a layer and forward() returns logits.
template <typename T>
class Network {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  Network() = default;

  // `input_shape` excludes the batch dimension.
  Network(std::vector<LayerSpec> specs, Shape input_shape, std::uint64_t seed)
      : specs_(std::move(specs)), input_shape_(std::move(input_shape)) {
    if (!specs_.empty() && specs_.back().kind == LayerKind::softmax_xent) {
      xent_head_ = true;
      specs_.pop_back();
    }
    for (const auto& s : specs_) {
      if (s.kind == LayerKind::softmax_xent) fail("bad-layer", "softmax-xent must be last", ErrorKind::usage);
      layers_.push_back(make_layer<T>(s));
    }
    // shape composition is checked once, up front
    Shape shape = batched(1);
    for (const auto& l : layers_) shape = l->output_shape(shape);
    init(seed);
  }

  Network(const Network& o)
      : specs_(o.specs_), input_shape_(o.input_shape_), xent_head_(o.xent_head_), feature_tap_(o.feature_tap_) {
    for (const auto& l : o.layers_) layers_.push_back(l->clone());
  }
  Network& operator=(const Network& o) {
    if (this != &o) {
      Network tmp(o);
      *this = std::move(tmp);
    }
    return *this;
  }
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  void init(std::uint64_t seed) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Rng rng(hash_combine(seed, i));
      layers_[i]->init(rng);
    }
  }

  std::size_t size() const noexcept { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_[i]; }
  const Layer<T>& layer(std::size_t i) const { return *layers_[i]; }
  const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
  std::vector<LayerSpec> specs_with_head() const {
    auto s = specs_;
    if (xent_head_) s.push_back({LayerKind::softmax_xent, "loss"});
    return s;
  }
  const Shape& input_shape() const noexcept { return input_shape_; }
  bool has_xent_head() const noexcept { return xent_head_; }

  void set_feature_tap(std::optional<std::string> name) {
    if (name) layer_index(*name);
    feature_tap_ = std::move(name);
  }
  const std::optional<std::string>& feature_tap() const noexcept { return feature_tap_; }

  std::size_t layer_index(const std::string& name) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i]->name() == name) return i;
    }
    fail("no-such-layer", "'" + name + "'");
  }

  // Index of the last layer that owns parameters (the classification head).
  std::size_t head_index() const {
    for (std::size_t i = layers_.size(); i-- > 0;) {
      if (!layers_[i]->params().empty()) return i;
    }
    fail("no-head", "network has no trainable layer");
  }

  std::size_t output_classes() const {
    const Shape s = output_shape(1);
    return s.size() == 2 ? s[1] : 0;
  }

  Shape batched(std::size_t n) const {
    Shape s{n};
    s.insert(s.end(), input_shape_.begin(), input_shape_.end());
    return s;
  }

  Shape output_shape(std::size_t n) const {
    Shape s = batched(n);
    for (const auto& l : layers_) s = l->output_shape(s);
    return s;
  }

  Tensor<T> forward(const Tensor<T>& x, std::size_t upto = npos) const {
    check_input(x);
    Tensor<T> cur = x;
    const std::size_t end = upto == npos ? layers_.size() : upto + 1;
    for (std::size_t i = 0; i < end; ++i) cur = layers_[i]->forward(cur);
    return cur;
  }

  // Activations after the named layer.
  Tensor<T> forward_until(const Tensor<T>& x, const std::string& layer_name) const {
    return forward(x, layer_index(layer_name));
  }

  Tape<T> forward_tape(const Tensor<T>& x, std::size_t upto = npos) const {
    check_input(x);
    Tape<T> tape;
    const std::size_t end = upto == npos ? layers_.size() : upto + 1;
    tape.acts.reserve(end + 1);
    tape.acts.push_back(x);
    for (std::size_t i = 0; i < end; ++i) tape.acts.push_back(layers_[i]->forward(tape.acts.back()));
    return tape;
  }

  Gradients<T> zero_grads() const {
    Gradients<T> g(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      for (const auto& p : layers_[i]->params()) g[i].emplace_back(p.shape());
    }
    return g;
  }

  // Backpropagates grad_out (dL/d tape.output()) through layers
  // [stop_at, tape_end). Returns dL/d(input of layer stop_at) when requested.
  Tensor<T> backward(const Tape<T>& tape, Tensor<T> grad_out, Gradients<T>& grads, std::size_t stop_at = 0,
                     bool need_input_grad = false) const {
    const std::size_t end = tape.acts.size() - 1;
    for (std::size_t i = end; i-- > stop_at;) {
      const bool need = need_input_grad || i > stop_at;
      grad_out = layers_[i]->backward(tape.acts[i], tape.acts[i + 1], grad_out, grads[i], need);
    }
    return grad_out;
  }

  // Swaps the classification head for a freshly initialized one with
  // `classes` outputs.
  void replace_head(std::size_t classes, std::uint64_t seed) {
    const std::size_t h = head_index();
    if (specs_[h].kind != LayerKind::linear) fail("no-head", "head layer is not linear");
    specs_[h].out = static_cast<int>(classes);
    layers_[h] = make_layer<T>(specs_[h]);
    Rng rng(hash_combine(seed, h));
    layers_[h]->init(rng);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) {
      for (const auto& p : l->params()) n += p.size();
    }
    return n;
  }

  template <typename U>
  Network<U> cast() const {
    Network<U> out(specs_with_head(), input_shape_, 0);
    out.set_feature_tap(feature_tap_);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      auto src = layers_[i]->params();
      auto dst = out.layer(i).params();
      for (std::size_t p = 0; p < src.size(); ++p) dst[p] = src[p].template cast<U>();
    }
    return out;
  }

 private:
  // Image inputs may differ in height and width from the declared shape
  // (convolutional stacks accept any size); layers reject what they cannot take.
  void check_input(const Tensor<T>& x) const {
    const Shape want = x.rank() ? batched(x.dim(0)) : Shape{};
    const bool ok = x.rank() == want.size() && x.rank() > 0 &&
                    (x.rank() == 4 ? x.dim(1) == want[1] : x.shape() == want);
    if (!ok) {
      const std::string first = layers_.empty() ? std::string("<input>") : layers_.front()->name();
      fail("shape-error", "layer '" + first + "' expects input " + shape_str(batched(x.rank() ? x.dim(0) : 1)) +
                              ", got " + shape_str(x.shape()));
    }
  }

  std::vector<LayerSpec> specs_;
  Shape input_shape_;
  bool xent_head_ = false;
  std::optional<std::string> feature_tap_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace sisrfp::nn
