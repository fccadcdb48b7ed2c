#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "sisrfp/nn/network.hpp"

namespace sisrfp::nn {

struct OptimizerConfig {
  enum class Algorithm { adamax, sgd };
  Algorithm algorithm = Algorithm::adamax;
  double learning_rate = 0.0005;
  int batch_size = 16;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0)) fail("bad-config", "learning_rate must be > 0", ErrorKind::usage);
    if (batch_size < 1) fail("bad-config", "batch_size must be >= 1", ErrorKind::usage);
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
      fail("bad-config", "betas must lie in [0, 1)", ErrorKind::usage);
    }
  }
};

NLOHMANN_JSON_SERIALIZE_ENUM(OptimizerConfig::Algorithm, {{OptimizerConfig::Algorithm::adamax, "adamax"},
                                                          {OptimizerConfig::Algorithm::sgd, "sgd"}})
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(OptimizerConfig, algorithm, learning_rate, batch_size, beta1, beta2,
                                                epsilon)

// Adamax (infinity-norm Adam) or plain SGD. Step counts are kept per layer so
// layers that join training late (after unfreezing) get their own bias correction.
template <typename T>
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, const Network<T>& net) : cfg_(cfg), m_(net.zero_grads()), u_(net.zero_grads()) {
    cfg_.validate();
    steps_.assign(net.size(), 0);
  }

  const OptimizerConfig& config() const noexcept { return cfg_; }

  // Applies grads to layers [first_layer, net.size()).
  void step(Network<T>& net, const Gradients<T>& grads, std::size_t first_layer = 0) {
    for (std::size_t li = first_layer; li < net.size(); ++li) {
      auto params = net.layer(li).params();
      if (params.empty()) continue;
      const long t = ++steps_[li];
      const double lr_t = cfg_.learning_rate / (1.0 - std::pow(cfg_.beta1, double(t)));
      for (std::size_t p = 0; p < params.size(); ++p) {
        auto w = params[p].data();
        auto g = grads[li][p].data();
        if (cfg_.algorithm == OptimizerConfig::Algorithm::sgd) {
          for (std::size_t i = 0; i < w.size(); ++i) w[i] -= static_cast<T>(cfg_.learning_rate * g[i]);
          continue;
        }
        auto m = m_[li][p].data();
        auto u = u_[li][p].data();
        const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
        for (std::size_t i = 0; i < w.size(); ++i) {
          m[i] = b1 * m[i] + (T(1) - b1) * g[i];
          u[i] = std::max(b2 * u[i], std::abs(g[i]));
          w[i] -= static_cast<T>(lr_t * m[i] / (u[i] + cfg_.epsilon));
        }
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  Gradients<T> m_;
  Gradients<T> u_;
  std::vector<long> steps_;
};

}  // namespace sisrfp::nn
