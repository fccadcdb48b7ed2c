#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sisrfp/attribution/ratio.hpp"
#include "sisrfp/rng.hpp"

namespace sisrfp::attribution {

struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  std::uint64_t seed = 1;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t max_points = 5000;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TsneConfig, perplexity, iterations, seed, learning_rate,
                                                early_exaggeration, exaggeration_iterations, initial_momentum,
                                                final_momentum, max_points)

// Row-major n x n joint affinities, n x 2 coordinates.
using Matrix = std::vector<double>;

// Symmetrized affinities P_ij = (p_j|i + p_i|j) / 2n, where each conditional
// row is a Gaussian whose precision is bisected to hit the perplexity.
inline Matrix tsne_affinities(const std::vector<Point>& x, double perplexity) {
  const std::size_t n = x.size();
  if (!(perplexity > 0.0) || perplexity >= double(n - 1) / 3.0 || n < 2) {
    fail("bad-perplexity", "perplexity " + std::to_string(perplexity) + " needs 0 < p < (n-1)/3 with n = " +
                               std::to_string(n), ErrorKind::usage);
  }
  Matrix d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) s += (x[i][k] - x[j][k]) * (x[i][k] - x[j][k]);
      d[i * n + j] = d[j * n + i] = s;
    }
  }
  const double target = std::log(perplexity);
  Matrix cond(n * n, 0.0);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = HUGE_VAL;
    double dmin = HUGE_VAL;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dmin = std::min(dmin, d[i * n + j]);
    }
    for (int it = 0; it < 200; ++it) {
      double sum = 0.0, dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        // shifting by dmin keeps exp() away from underflow; it cancels in the normalization
        row[j] = j == i ? 0.0 : std::exp(-(d[i * n + j] - dmin) * beta);
        sum += row[j];
        dot += row[j] * (d[i * n + j] - dmin);
      }
      const double h = std::log(sum) + beta * dot / sum;
      for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
      if (std::fabs(h - target) < 1e-5) break;
      if (h > target) {
        lo = beta;
        beta = hi == HUGE_VAL ? beta * 2.0 : (beta + hi) / 2.0;
      } else {
        hi = beta;
        beta = (beta + lo) / 2.0;
      }
    }
    for (std::size_t j = 0; j < n; ++j) cond[i * n + j] = row[j];
  }
  Matrix p(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] = std::max((cond[i * n + j] + cond[j * n + i]) / (2.0 * n), 1e-12);
  }
  for (std::size_t i = 0; i < n; ++i) p[i * n + i] = 0.0;
  return p;
}

// KL(P || Q) with the Student-t kernel Q_ij ~ 1 / (1 + |y_i - y_j|^2).
inline double tsne_kl(const Matrix& p, const Matrix& y) {
  const std::size_t n = y.size() / 2;
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = y[2 * i] - y[2 * j], dy = y[2 * i + 1] - y[2 * j + 1];
      z += 1.0 / (1.0 + dx * dx + dy * dy);
    }
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double pij = p[i * n + j];
      if (i == j || pij <= 0.0) continue;
      const double dx = y[2 * i] - y[2 * j], dy = y[2 * i + 1] - y[2 * j + 1];
      const double q = 1.0 / (1.0 + dx * dx + dy * dy) / z;
      kl += pij * std::log(pij / q);
    }
  }
  return kl;
}

// dKL/dy_i = 4 sum_j (e P_ij - Q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2), e the exaggeration.
inline Matrix tsne_gradient(const Matrix& p, const Matrix& y, double exaggeration = 1.0) {
  const std::size_t n = y.size() / 2;
  Matrix num(n * n, 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = y[2 * i] - y[2 * j], dy = y[2 * i + 1] - y[2 * j + 1];
      num[i * n + j] = num[j * n + i] = 1.0 / (1.0 + dx * dx + dy * dy);
      z += 2.0 * num[i * n + j];
    }
  }
  Matrix g(2 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double m = 4.0 * (exaggeration * p[i * n + j] - num[i * n + j] / z) * num[i * n + j];
      g[2 * i] += m * (y[2 * i] - y[2 * j]);
      g[2 * i + 1] += m * (y[2 * i + 1] - y[2 * j + 1]);
    }
  }
  return g;
}

struct TsneResult {
  Matrix y;  // n x 2
  double kl_initial = 0.0;
  double kl_final = 0.0;
};

inline Matrix tsne_initial(std::size_t n, std::uint64_t seed) {
  Rng rng(hash_combine(seed, 0x75e7));
  Matrix y(2 * n);
  for (double& v : y) v = 1e-4 * rng.normal();
  return y;
}

// Exact O(n^2) t-SNE: gradient descent with momentum, per-coordinate gains
// and early exaggeration. Deterministic for equal (points, config).
inline TsneResult tsne(const std::vector<Point>& x, const TsneConfig& cfg) {
  if (x.size() > cfg.max_points) {
    fail("too-many-points", std::to_string(x.size()) + " points exceed the exact t-SNE bound of " +
                                std::to_string(cfg.max_points), ErrorKind::usage);
  }
  const Matrix p = tsne_affinities(x, cfg.perplexity);
  const std::size_t n = x.size();
  TsneResult res;
  res.y = tsne_initial(n, cfg.seed);
  res.kl_initial = tsne_kl(p, res.y);
  Matrix step(2 * n, 0.0), gains(2 * n, 1.0);
  for (int it = 0; it < cfg.iterations; ++it) {
    const bool early = it < cfg.exaggeration_iterations;
    const Matrix g = tsne_gradient(p, res.y, early ? cfg.early_exaggeration : 1.0);
    const double momentum = early ? cfg.initial_momentum : cfg.final_momentum;
    for (std::size_t k = 0; k < 2 * n; ++k) {
      gains[k] = (g[k] > 0.0) != (step[k] > 0.0) ? gains[k] + 0.2 : gains[k] * 0.8;
      gains[k] = std::max(gains[k], 0.01);
      step[k] = momentum * step[k] - cfg.learning_rate * gains[k] * g[k];
      res.y[k] += step[k];
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += res.y[2 * i];
      my += res.y[2 * i + 1];
    }
    for (std::size_t i = 0; i < n; ++i) {
      res.y[2 * i] -= mx / double(n);
      res.y[2 * i + 1] -= my / double(n);
    }
  }
  res.kl_final = tsne_kl(p, res.y);
  return res;
}

inline TsneResult tsne_export(const EmbeddingSet& emb, const TsneConfig& cfg) { return tsne(emb.points, cfg); }

inline std::string tsne_csv(const EmbeddingSet& emb, const TsneResult& r) {
  std::ostringstream s;
  s.precision(9);
  s << "x,y,model_id,image_id\n";
  for (std::size_t i = 0; i < emb.size(); ++i) {
    s << r.y[2 * i] << ',' << r.y[2 * i + 1] << ',' << emb.model_ids[i] << ',' << emb.image_ids[i] << '\n';
  }
  return s.str();
}

}  // namespace sisrfp::attribution
