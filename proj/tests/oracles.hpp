#pragma once

// Independent reference computations used by the test suites. Nothing here
// calls into the code paths it is used to check.

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sisrfp/image.hpp"
#include "sisrfp/rng.hpp"

namespace oracle {

// Keys cubic, a = -0.5, written from the textbook piecewise form.
inline double catmull_rom(double x) {
  x = std::fabs(x);
  if (x <= 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
  if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
  return 0.0;
}

// Brute-force 2-D kernel sum over every source pixel, clamped borders.
inline double resample_pixel(const sisrfp::Image& img, int oy, int ox, int out_h, int out_w, int ch) {
  const double sy = (oy + 0.5) * img.height() / out_h - 0.5;
  const double sx = (ox + 0.5) * img.width() / out_w - 0.5;
  double acc = 0.0;
  for (int m = -4; m < img.height() + 4; ++m) {
    for (int n = -4; n < img.width() + 4; ++n) {
      const double w = catmull_rom(sy - m) * catmull_rom(sx - n);
      if (w == 0.0) continue;
      const int cm = std::min(std::max(m, 0), img.height() - 1);
      const int cn = std::min(std::max(n, 0), img.width() - 1);
      acc += w * img.at(cm, cn, ch);
    }
  }
  return acc;
}

// Minimal PNG writer: filter type 0 on every row, zlib level 6.
inline std::vector<std::uint8_t> reference_png(const sisrfp::Image& img) {
  auto be32 = [](std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto chunk = [&](std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& body) {
    be32(out, static_cast<std::uint32_t>(body.size()));
    std::vector<std::uint8_t> tb(type, type + 4);
    tb.insert(tb.end(), body.begin(), body.end());
    out.insert(out.end(), tb.begin(), tb.end());
    be32(out, static_cast<std::uint32_t>(crc32(0L, tb.data(), static_cast<uInt>(tb.size()))));
  };
  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  be32(ihdr, static_cast<std::uint32_t>(img.width()));
  be32(ihdr, static_cast<std::uint32_t>(img.height()));
  ihdr.push_back(8);
  ihdr.push_back(img.channels() == 3 ? 2 : 0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  chunk(out, "IHDR", ihdr);
  std::vector<std::uint8_t> raw;
  for (int y = 0; y < img.height(); ++y) {
    raw.push_back(0);
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        raw.push_back(static_cast<std::uint8_t>(std::lround(img.at(y, x, c) * 255.0f)));
      }
    }
  }
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> z(len);
  compress2(z.data(), &len, raw.data(), static_cast<uLong>(raw.size()), 6);
  z.resize(len);
  chunk(out, "IDAT", z);
  chunk(out, "IEND", {});
  return out;
}

// Mean silhouette coefficient with Euclidean distance.
inline double silhouette(const std::vector<std::vector<double>>& pts, const std::vector<int>& labels) {
  const std::size_t n = pts.size();
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t d = 0; d < pts[i].size(); ++d) s += (pts[i][d] - pts[j][d]) * (pts[i][d] - pts[j][d]);
    return std::sqrt(s);
  };
  int max_label = 0;
  for (int l : labels) max_label = std::max(max_label, l);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sum(max_label + 1, 0.0);
    std::vector<int> cnt(max_label + 1, 0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[labels[j]] += dist(i, j);
      ++cnt[labels[j]];
    }
    const double a = cnt[labels[i]] ? sum[labels[i]] / cnt[labels[i]] : 0.0;
    double b = 1e300;
    for (int l = 0; l <= max_label; ++l) {
      if (l != labels[i] && cnt[l]) b = std::min(b, sum[l] / cnt[l]);
    }
    total += (b - a) / std::max(a, b);
  }
  return total / double(n);
}

// Central difference of f along coordinate i of x.
inline double central_diff(const std::function<double()>& f, double& xi, double h) {
  const double orig = xi;
  xi = orig + h;
  const double fp = f();
  xi = orig - h;
  const double fm = f();
  xi = orig;
  return (fp - fm) / (2.0 * h);
}

inline double rel_err(double a, double b) {
  const double denom = std::max(std::fabs(a) + std::fabs(b), 1e-8);
  return std::fabs(a - b) / denom;
}

// Smooth structured test image: gradients plus a few sinusoids and discs.
inline sisrfp::Image natural_probe(std::uint64_t seed, int h, int w, int c = 3) {
  sisrfp::Rng rng(seed);
  sisrfp::Image img(h, w, c);
  const double fx = rng.uniform(0.02, 0.15), fy = rng.uniform(0.02, 0.15), ph = rng.uniform(0, 6.28);
  const double cx = rng.uniform(0, w), cy = rng.uniform(0, h), r = rng.uniform(4, std::min(h, w) / 2.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double v = 0.35 + 0.2 * std::sin(fx * x + fy * y + ph + ch) + 0.15 * double(y) / h;
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) < r * r) v += 0.2;
        img.at(y, x, ch) = static_cast<float>(v);
      }
    }
  }
  img.clamp01();
  return img;
}

// Independent R(A,B): ordered pairs i != j within classes, every cross pair.
inline double brute_ratio(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  auto d = [](const std::vector<double>& p, const std::vector<double>& q) {
    long double s = 0;
    for (std::size_t k = 0; k < p.size(); ++k) s += (long double)(p[k] - q[k]) * (p[k] - q[k]);
    return std::sqrt(s);
  };
  auto intra = [&](const std::vector<std::vector<double>>& x) {
    long double s = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (i != j) {
          s += d(x[i], x[j]);
          ++n;
        }
      }
    }
    return s / n;
  };
  long double cross = 0;
  for (const auto& p : a) {
    for (const auto& q : b) cross += d(p, q);
  }
  cross /= (long double)(a.size() * b.size());
  return double((intra(a) + intra(b)) / (2 * cross));
}

inline std::vector<std::vector<double>> random_points(sisrfp::Rng& rng, std::size_t n, std::size_t dim, double offset) {
  std::vector<std::vector<double>> out(n, std::vector<double>(dim));
  for (auto& p : out) {
    for (double& v : p) v = rng.normal() + offset;
  }
  return out;
}

// Random orthogonal matrix by Gram-Schmidt on Gaussian columns.
inline std::vector<std::vector<double>> random_rotation(sisrfp::Rng& rng, std::size_t dim) {
  std::vector<std::vector<double>> q;
  while (q.size() < dim) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    for (const auto& u : q) {
      double dot = 0;
      for (std::size_t k = 0; k < dim; ++k) dot += v[k] * u[k];
      for (std::size_t k = 0; k < dim; ++k) v[k] -= dot * u[k];
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    q.push_back(v);
  }
  return q;
}

inline std::vector<std::vector<double>> transform(const std::vector<std::vector<double>>& pts, const std::vector<std::vector<double>>& rot, const std::vector<double>& shift,
                             double scale) {
  std::vector<std::vector<double>> out;
  for (const auto& p : pts) {
    std::vector<double> r(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t k = 0; k < p.size(); ++k) r[i] += rot[i][k] * p[k];
      r[i] = scale * r[i] + shift[i];
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace oracle
