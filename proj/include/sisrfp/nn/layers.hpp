#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sisrfp/error.hpp"
#include "sisrfp/nn/gemm.hpp"
#include "sisrfp/nn/tensor.hpp"
#include "sisrfp/rng.hpp"

namespace sisrfp::nn {

enum class LayerKind {
  conv2d,
  relu,
  maxpool,
  global_avg_pool,
  linear,
  softmax_xent,
  batchless_norm,
  sigmoid,
  upsample,
};

NLOHMANN_JSON_SERIALIZE_ENUM(LayerKind, {
                                            {LayerKind::conv2d, "conv2d"},
                                            {LayerKind::relu, "relu"},
                                            {LayerKind::maxpool, "maxpool"},
                                            {LayerKind::global_avg_pool, "global-avg-pool"},
                                            {LayerKind::linear, "linear"},
                                            {LayerKind::softmax_xent, "softmax-xent"},
                                            {LayerKind::batchless_norm, "batchless-norm"},
                                            {LayerKind::sigmoid, "sigmoid"},
                                            {LayerKind::upsample, "upsample"},
                                        })

// One layer of a sequential network. Unused fields are ignored by the kind.
// `in`/`out` are channels (conv2d) or features (linear); `kernel` doubles as
// the pooling window; `factor` is the nearest-neighbour upsampling factor.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::string name;
  int in = 0;
  int out = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  int factor = 2;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

inline void to_json(nlohmann::json& j, const LayerSpec& s) {
  j = nlohmann::json{{"kind", s.kind}, {"name", s.name}};
  switch (s.kind) {
    case LayerKind::conv2d:
      j.update({{"in", s.in}, {"out", s.out}, {"kernel", s.kernel}, {"stride", s.stride}, {"pad", s.pad}});
      break;
    case LayerKind::linear:
      j.update({{"in", s.in}, {"out", s.out}});
      break;
    case LayerKind::maxpool:
      j["kernel"] = s.kernel;
      break;
    case LayerKind::upsample:
      j["factor"] = s.factor;
      break;
    default:
      break;
  }
}

inline void from_json(const nlohmann::json& j, LayerSpec& s) {
  s = LayerSpec{};
  j.at("kind").get_to(s.kind);
  j.at("name").get_to(s.name);
  s.in = j.value("in", 0);
  s.out = j.value("out", 0);
  s.kernel = j.value("kernel", s.kind == LayerKind::maxpool ? 2 : 3);
  s.stride = j.value("stride", 1);
  s.pad = j.value("pad", 1);
  s.factor = j.value("factor", 2);
}

template <typename T>
class Layer {
 public:
  explicit Layer(LayerSpec spec) : spec_(std::move(spec)) {}
  virtual ~Layer() = default;

  virtual std::unique_ptr<Layer> clone() const = 0;

  // Validates the batched input shape and returns the output shape.
  virtual Shape output_shape(const Shape& in) const = 0;

  virtual Tensor<T> forward(const Tensor<T>& in) const = 0;

  // Accumulates (+=) parameter gradients into `grad_params` (one per param)
  // and returns dL/d(in) when `need_input_grad` is set.
  virtual Tensor<T> backward(const Tensor<T>& in, const Tensor<T>& out, const Tensor<T>& grad_out,
                             std::span<Tensor<T>> grad_params, bool need_input_grad) const = 0;

  virtual void init(Rng&) {}

  std::span<Tensor<T>> params() noexcept { return params_; }
  std::span<const Tensor<T>> params() const noexcept { return params_; }
  virtual std::vector<std::string> param_names() const { return {}; }

  const LayerSpec& spec() const noexcept { return spec_; }
  const std::string& name() const noexcept { return spec_.name; }

 protected:
  [[noreturn]] void shape_error(const Shape& got, const std::string& expected) const {
    nlohmann::json kind = spec_.kind;
    fail("shape-error", "layer '" + spec_.name + "' (" + kind.get<std::string>() + ") expects " + expected +
                            ", got " + shape_str(got));
  }

  LayerSpec spec_;
  std::vector<Tensor<T>> params_;
};

template <typename T>
class Conv2d final : public Layer<T> {
 public:
  explicit Conv2d(LayerSpec s) : Layer<T>(std::move(s)) {
    const auto& sp = this->spec_;
    if (sp.in < 1 || sp.out < 1 || sp.kernel < 1 || sp.stride < 1 || sp.pad < 0) {
      fail("bad-layer", "conv2d '" + sp.name + "' has invalid geometry", ErrorKind::usage);
    }
    this->params_.emplace_back(Shape{std::size_t(sp.out), std::size_t(sp.in * sp.kernel * sp.kernel)});
    this->params_.emplace_back(Shape{std::size_t(sp.out)});
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }
  std::vector<std::string> param_names() const override { return {"weight", "bias"}; }

  void init(Rng& rng) override {
    const auto& sp = this->spec_;
    const double limit = std::sqrt(6.0 / (sp.in * sp.kernel * sp.kernel));
    for (T& w : this->params_[0].data()) w = static_cast<T>(rng.uniform(-limit, limit));
    this->params_[1].fill(T(0));
  }

  Shape output_shape(const Shape& in) const override {
    const auto& sp = this->spec_;
    if (in.size() != 4 || in[1] != std::size_t(sp.in) || in[2] + 2 * sp.pad < std::size_t(sp.kernel) ||
        in[3] + 2 * sp.pad < std::size_t(sp.kernel)) {
      this->shape_error(in, "[N," + std::to_string(sp.in) + ",H,W] with H,W >= kernel");
    }
    return {in[0], std::size_t(sp.out), out_dim(in[2]), out_dim(in[3])};
  }

  Tensor<T> forward(const Tensor<T>& in) const override {
    const Shape os = output_shape(in.shape());
    Tensor<T> out(os);
    const std::size_t ohw = os[2] * os[3];
    const std::size_t ckk = cols_rows();
    std::vector<T> cols(ckk * ohw);
    const T* w = this->params_[0].data().data();
    const T* b = this->params_[1].data().data();
    for (std::size_t n = 0; n < in.dim(0); ++n) {
      im2col(in.sample(n), in.dim(2), in.dim(3), os[2], os[3], cols);
      T* o = out.sample(n).data();
      for (std::size_t c = 0; c < os[1]; ++c) std::fill(o + c * ohw, o + (c + 1) * ohw, b[c]);
      blas::gemm_nn(os[1], ohw, ckk, w, cols.data(), o);
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& in, const Tensor<T>& out, const Tensor<T>& grad_out,
                     std::span<Tensor<T>> grads, bool need_input_grad) const override {
    const Shape& os = out.shape();
    const std::size_t ohw = os[2] * os[3];
    const std::size_t ckk = cols_rows();
    std::vector<T> cols(ckk * ohw);
    std::vector<T> dcols(need_input_grad ? ckk * ohw : 0);
    Tensor<T> grad_in(need_input_grad ? in.shape() : Shape{});
    T* dw = grads[0].data().data();
    T* db = grads[1].data().data();
    const T* w = this->params_[0].data().data();
    for (std::size_t n = 0; n < in.dim(0); ++n) {
      const T* go = grad_out.sample(n).data();
      im2col(in.sample(n), in.dim(2), in.dim(3), os[2], os[3], cols);
      blas::gemm_nt(os[1], ckk, ohw, go, cols.data(), dw);
      for (std::size_t c = 0; c < os[1]; ++c) {
        T s = 0;
        for (std::size_t j = 0; j < ohw; ++j) s += go[c * ohw + j];
        db[c] += s;
      }
      if (need_input_grad) {
        std::fill(dcols.begin(), dcols.end(), T(0));
        blas::gemm_tn(os[1], ckk, ohw, w, go, dcols.data());
        col2im(dcols, in.dim(2), in.dim(3), os[2], os[3], grad_in.sample(n));
      }
    }
    return grad_in;
  }

 private:
  std::size_t out_dim(std::size_t d) const {
    const auto& sp = this->spec_;
    return (d + 2 * sp.pad - sp.kernel) / sp.stride + 1;
  }
  std::size_t cols_rows() const {
    const auto& sp = this->spec_;
    return std::size_t(sp.in) * sp.kernel * sp.kernel;
  }

  void im2col(std::span<const T> x, std::size_t h, std::size_t w, std::size_t oh, std::size_t ow,
              std::vector<T>& cols) const {
    const auto& sp = this->spec_;
    const int k = sp.kernel;
    std::size_t row = 0;
    for (int c = 0; c < sp.in; ++c) {
      const T* plane = x.data() + std::size_t(c) * h * w;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx, ++row) {
          T* dst = cols.data() + row * oh * ow;
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const long iy = long(oy) * sp.stride - sp.pad + ky;
            T* drow = dst + oy * ow;
            if (iy < 0 || iy >= long(h)) {
              std::fill(drow, drow + ow, T(0));
              continue;
            }
            const T* src = plane + std::size_t(iy) * w;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              const long ix = long(ox) * sp.stride - sp.pad + kx;
              drow[ox] = (ix < 0 || ix >= long(w)) ? T(0) : src[ix];
            }
          }
        }
      }
    }
  }

  void col2im(const std::vector<T>& dcols, std::size_t h, std::size_t w, std::size_t oh, std::size_t ow,
              std::span<T> dx) const {
    const auto& sp = this->spec_;
    const int k = sp.kernel;
    std::size_t row = 0;
    for (int c = 0; c < sp.in; ++c) {
      T* plane = dx.data() + std::size_t(c) * h * w;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx, ++row) {
          const T* src = dcols.data() + row * oh * ow;
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const long iy = long(oy) * sp.stride - sp.pad + ky;
            if (iy < 0 || iy >= long(h)) continue;
            T* drow = plane + std::size_t(iy) * w;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              const long ix = long(ox) * sp.stride - sp.pad + kx;
              if (ix >= 0 && ix < long(w)) drow[ix] += src[oy * ow + ox];
            }
          }
        }
      }
    }
  }
};

template <typename T>
class Linear final : public Layer<T> {
 public:
  explicit Linear(LayerSpec s) : Layer<T>(std::move(s)) {
    const auto& sp = this->spec_;
    if (sp.in < 1 || sp.out < 1) fail("bad-layer", "linear '" + sp.name + "' needs in/out", ErrorKind::usage);
    this->params_.emplace_back(Shape{std::size_t(sp.out), std::size_t(sp.in)});
    this->params_.emplace_back(Shape{std::size_t(sp.out)});
  }

  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Linear>(*this); }
  std::vector<std::string> param_names() const override { return {"weight", "bias"}; }

  void init(Rng& rng) override {
    const double limit = std::sqrt(6.0 / this->spec_.in);
    for (T& w : this->params_[0].data()) w = static_cast<T>(rng.uniform(-limit, limit));
    this->params_[1].fill(T(0));
  }

  Shape output_shape(const Shape& in) const override {
    if (in.size() < 2 || shape_size(in) / in[0] != std::size_t(this->spec_.in)) {
      this->shape_error(in, "[N," + std::to_string(this->spec_.in) + "]");
    }
    return {in[0], std::size_t(this->spec_.out)};
  }

  Tensor<T> forward(const Tensor<T>& in) const override {
    Tensor<T> out(output_shape(in.shape()));
    const std::size_t n = in.dim(0), fi = this->spec_.in, fo = this->spec_.out;
    const T* b = this->params_[1].data().data();
    for (std::size_t i = 0; i < n; ++i) std::copy(b, b + fo, out.data().data() + i * fo);
    blas::gemm_nt(n, fo, fi, in.data().data(), this->params_[0].data().data(), out.data().data());
    return out;
  }

  Tensor<T> backward(const Tensor<T>& in, const Tensor<T>&, const Tensor<T>& grad_out,
                     std::span<Tensor<T>> grads, bool need_input_grad) const override {
    const std::size_t n = in.dim(0), fi = this->spec_.in, fo = this->spec_.out;
    blas::gemm_tn(n, fo, fi, grad_out.data().data(), in.data().data(), grads[0].data().data());
    T* db = grads[1].data().data();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < fo; ++o) db[o] += grad_out[i * fo + o];
    }
    Tensor<T> grad_in;
    if (need_input_grad) {
      grad_in = Tensor<T>(in.shape());
      blas::gemm_nn(n, fi, fo, grad_out.data().data(), this->params_[0].data().data(), grad_in.data().data());
    }
    return grad_in;
  }
};

template <typename T>
class Relu final : public Layer<T> {
 public:
  using Layer<T>::Layer;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Relu>(*this); }
  Shape output_shape(const Shape& in) const override { return in; }

  Tensor<T> forward(const Tensor<T>& in) const override {
    Tensor<T> out = in;
    for (T& v : out.data()) v = v < T(0) ? T(0) : v;  // NaN passes through
    return out;
  }

  Tensor<T> backward(const Tensor<T>& in, const Tensor<T>&, const Tensor<T>& grad_out, std::span<Tensor<T>>,
                     bool need_input_grad) const override {
    if (!need_input_grad) return {};
    Tensor<T> g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(in[i] > T(0))) g[i] = T(0);
    }
    return g;
  }
};

template <typename T>
class Sigmoid final : public Layer<T> {
 public:
  using Layer<T>::Layer;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Sigmoid>(*this); }
  Shape output_shape(const Shape& in) const override { return in; }

  Tensor<T> forward(const Tensor<T>& in) const override {
    Tensor<T> out = in;
    for (T& v : out.data()) v = T(1) / (T(1) + std::exp(-v));
    return out;
  }

  Tensor<T> backward(const Tensor<T>&, const Tensor<T>& out, const Tensor<T>& grad_out, std::span<Tensor<T>>,
                     bool need_input_grad) const override {
    if (!need_input_grad) return {};
    Tensor<T> g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= out[i] * (T(1) - out[i]);
    return g;
  }
};

template <typename T>
class MaxPool final : public Layer<T> {
 public:
  explicit MaxPool(LayerSpec s) : Layer<T>(std::move(s)) {
    if (this->spec_.kernel < 1) fail("bad-layer", "maxpool window must be >= 1", ErrorKind::usage);
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool>(*this); }

  Shape output_shape(const Shape& in) const override {
    const std::size_t k = this->spec_.kernel;
    if (in.size() != 4 || in[2] < k || in[3] < k) this->shape_error(in, "[N,C,H,W] with H,W >= window");
    return {in[0], in[1], in[2] / k, in[3] / k};
  }

  Tensor<T> forward(const Tensor<T>& in) const override {
    const Shape os = output_shape(in.shape());
    Tensor<T> out(os);
    visit(in, os, [&](std::size_t o, std::size_t best) { out[o] = in[best]; });
    return out;
  }

  Tensor<T> backward(const Tensor<T>& in, const Tensor<T>& out, const Tensor<T>& grad_out, std::span<Tensor<T>>,
                     bool need_input_grad) const override {
    if (!need_input_grad) return {};
    Tensor<T> g(in.shape());
    visit(in, out.shape(), [&](std::size_t o, std::size_t best) { g[best] += grad_out[o]; });
    return g;
  }

 private:
  // Calls f(output index, input index of the window maximum); first maximum wins ties.
  template <typename F>
  void visit(const Tensor<T>& in, const Shape& os, F&& f) const {
    const std::size_t k = this->spec_.kernel, h = in.dim(2), w = in.dim(3);
    std::size_t o = 0;
    for (std::size_t nc = 0; nc < os[0] * os[1]; ++nc) {
      const std::size_t base = nc * h * w;
      for (std::size_t oy = 0; oy < os[2]; ++oy) {
        for (std::size_t ox = 0; ox < os[3]; ++ox, ++o) {
          std::size_t best = base + oy * k * w + ox * k;
          for (std::size_t dy = 0; dy < k; ++dy) {
            for (std::size_t dx = 0; dx < k; ++dx) {
              const std::size_t idx = base + (oy * k + dy) * w + ox * k + dx;
              if (in[idx] > in[best]) best = idx;
            }
          }
          f(o, best);
        }
      }
    }
  }
};

template <typename T>
class GlobalAvgPool final : public Layer<T> {
 public:
  using Layer<T>::Layer;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<GlobalAvgPool>(*this); }

  Shape output_shape(const Shape& in) const override {
    if (in.size() != 4) this->shape_error(in, "[N,C,H,W]");
    return {in[0], in[1]};
  }

  Tensor<T> forward(const Tensor<T>& in) const override {
    Tensor<T> out(output_shape(in.shape()));
    const std::size_t hw = in.dim(2) * in.dim(3);
    for (std::size_t i = 0; i < out.size(); ++i) {
      T s = 0;
      for (std::size_t j = 0; j < hw; ++j) s += in[i * hw + j];
      out[i] = s / T(hw);
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& in, const Tensor<T>&, const Tensor<T>& grad_out, std::span<Tensor<T>>,
                     bool need_input_grad) const override {
    if (!need_input_grad) return {};
    Tensor<T> g(in.shape());
    const std::size_t hw = in.dim(2) * in.dim(3);
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
      const T v = grad_out[i] / T(hw);
      std::fill(g.data().begin() + i * hw, g.data().begin() + (i + 1) * hw, v);
    }
    return g;
  }
};

// Per-sample normalization without batch statistics: each channel of a
// [N,C,H,W] tensor (or each row of a [N,F] tensor) is standardized on its own.
template <typename T>
class BatchlessNorm final : public Layer<T> {
 public:
  static constexpr double eps = 1e-5;
  using Layer<T>::Layer;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<BatchlessNorm>(*this); }

  Shape output_shape(const Shape& in) const override {
    if (in.size() != 2 && in.size() != 4) this->shape_error(in, "[N,F] or [N,C,H,W]");
    return in;
  }

  Tensor<T> forward(const Tensor<T>& in) const override {
    output_shape(in.shape());
    Tensor<T> out(in.shape());
    const auto [groups, len] = layout(in.shape());
    for (std::size_t g = 0; g < groups; ++g) {
      const T* x = in.data().data() + g * len;
      T* y = out.data().data() + g * len;
      const auto [mean, inv_std] = moments(x, len);
      for (std::size_t i = 0; i < len; ++i) y[i] = static_cast<T>((x[i] - mean) * inv_std);
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& in, const Tensor<T>& out, const Tensor<T>& grad_out, std::span<Tensor<T>>,
                     bool need_input_grad) const override {
    if (!need_input_grad) return {};
    Tensor<T> g(in.shape());
    const auto [groups, len] = layout(in.shape());
    for (std::size_t gi = 0; gi < groups; ++gi) {
      const T* y = out.data().data() + gi * len;
      const T* dy = grad_out.data().data() + gi * len;
      T* dx = g.data().data() + gi * len;
      const auto [mean, inv_std] = moments(in.data().data() + gi * len, len);
      (void)mean;
      double mdy = 0.0, mdyy = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        mdy += dy[i];
        mdyy += double(dy[i]) * y[i];
      }
      mdy /= double(len);
      mdyy /= double(len);
      for (std::size_t i = 0; i < len; ++i) dx[i] = static_cast<T>(inv_std * (dy[i] - mdy - y[i] * mdyy));
    }
    return g;
  }

 private:
  static std::pair<std::size_t, std::size_t> layout(const Shape& s) {
    if (s.size() == 2) return {s[0], s[1]};
    return {s[0] * s[1], s[2] * s[3]};
  }
  static std::pair<double, double> moments(const T* x, std::size_t len) {
    double m = 0.0;
    for (std::size_t i = 0; i < len; ++i) m += x[i];
    m /= double(len);
    double v = 0.0;
    for (std::size_t i = 0; i < len; ++i) v += (x[i] - m) * (x[i] - m);
    v /= double(len);
    return {m, 1.0 / std::sqrt(v + eps)};
  }
};

// Nearest-neighbour (pixel replication) upsampling by an integer factor.
template <typename T>
class Upsample final : public Layer<T> {
 public:
  explicit Upsample(LayerSpec s) : Layer<T>(std::move(s)) {
    if (this->spec_.factor < 1) fail("bad-layer", "upsample factor must be >= 1", ErrorKind::usage);
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Upsample>(*this); }

  Shape output_shape(const Shape& in) const override {
    if (in.size() != 4) this->shape_error(in, "[N,C,H,W]");
    const std::size_t f = this->spec_.factor;
    return {in[0], in[1], in[2] * f, in[3] * f};
  }

  Tensor<T> forward(const Tensor<T>& in) const override {
    const Shape os = output_shape(in.shape());
    Tensor<T> out(os);
    const std::size_t f = this->spec_.factor, h = in.dim(2), w = in.dim(3);
    for (std::size_t nc = 0; nc < os[0] * os[1]; ++nc) {
      for (std::size_t y = 0; y < os[2]; ++y) {
        for (std::size_t x = 0; x < os[3]; ++x) {
          out[(nc * os[2] + y) * os[3] + x] = in[(nc * h + y / f) * w + x / f];
        }
      }
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& in, const Tensor<T>& out, const Tensor<T>& grad_out, std::span<Tensor<T>>,
                     bool need_input_grad) const override {
    if (!need_input_grad) return {};
    Tensor<T> g(in.shape());
    const Shape& os = out.shape();
    const std::size_t f = this->spec_.factor, h = in.dim(2), w = in.dim(3);
    for (std::size_t nc = 0; nc < os[0] * os[1]; ++nc) {
      for (std::size_t y = 0; y < os[2]; ++y) {
        for (std::size_t x = 0; x < os[3]; ++x) {
          g[(nc * h + y / f) * w + x / f] += grad_out[(nc * os[2] + y) * os[3] + x];
        }
      }
    }
    return g;
  }
};

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::conv2d:
      return std::make_unique<Conv2d<T>>(spec);
    case LayerKind::linear:
      return std::make_unique<Linear<T>>(spec);
    case LayerKind::relu:
      return std::make_unique<Relu<T>>(spec);
    case LayerKind::sigmoid:
      return std::make_unique<Sigmoid<T>>(spec);
    case LayerKind::maxpool:
      return std::make_unique<MaxPool<T>>(spec);
    case LayerKind::global_avg_pool:
      return std::make_unique<GlobalAvgPool<T>>(spec);
    case LayerKind::batchless_norm:
      return std::make_unique<BatchlessNorm<T>>(spec);
    case LayerKind::upsample:
      return std::make_unique<Upsample<T>>(spec);
    case LayerKind::softmax_xent:
      break;
  }
  fail("bad-layer", "softmax-xent is a loss head, not a layer", ErrorKind::usage);
}

}  // namespace sisrfp::nn
