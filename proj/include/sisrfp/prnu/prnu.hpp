#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "sisrfp/error.hpp"
#include "sisrfp/image.hpp"
#include "sisrfp/nn/checkpoint.hpp"
#include "sisrfp/png_io.hpp"
#include "sisrfp/resample.hpp"

namespace sisrfp::prnu {

// Residual = gray - denoise(gray). The default denoiser soft-thresholds the
// detail bands of a single-level Haar transform; "gaussian" subtracts a
// Gaussian low-pass instead.
struct DenoiserConfig {
  enum class Kind { wavelet, gaussian };
  Kind kind = Kind::wavelet;
  double threshold = 0.02;  // wavelet detail soft threshold
  double sigma = 1.0;       // gaussian low-pass

  std::string version() const {
    return kind == Kind::wavelet ? "haar1-soft-v1(t=" + std::to_string(threshold) + ")"
                                 : "gauss-hp-v1(s=" + std::to_string(sigma) + ")";
  }
};

NLOHMANN_JSON_SERIALIZE_ENUM(DenoiserConfig::Kind,
                             {{DenoiserConfig::Kind::wavelet, "wavelet"}, {DenoiserConfig::Kind::gaussian, "gaussian"}})
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DenoiserConfig, kind, threshold, sigma)

struct PrnuConfig {
  DenoiserConfig denoiser;
  int crop = 256;  // canonical centre crop shared by a whole fingerprint database
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PrnuConfig, denoiser, crop)

using NoiseResidual = Plane;

namespace detail {

inline double soft(double v, double t) { return v > t ? v - t : (v < -t ? v + t : 0.0); }

// Single-level orthonormal-free Haar (averages and half-differences) with
// edge replication for odd sizes.
inline Plane haar_soft_denoise(const Plane& in, double t) {
  const int h = in.height, w = in.width;
  const int hh = (h + 1) / 2, hw = (w + 1) / 2;
  auto at = [&](int y, int x) { return double(in.at(std::min(y, h - 1), std::min(x, w - 1))); };
  Plane out(h, w);
  for (int by = 0; by < hh; ++by) {
    for (int bx = 0; bx < hw; ++bx) {
      const double a = at(2 * by, 2 * bx), b = at(2 * by, 2 * bx + 1);
      const double c = at(2 * by + 1, 2 * bx), d = at(2 * by + 1, 2 * bx + 1);
      const double ll = (a + b + c + d) / 4.0;
      const double lh = soft((a - b + c - d) / 4.0, t);
      const double hl = soft((a + b - c - d) / 4.0, t);
      const double hh4 = soft((a - b - c + d) / 4.0, t);
      const double r[2][2] = {{ll + lh + hl + hh4, ll - lh + hl - hh4}, {ll + lh - hl - hh4, ll - lh - hl + hh4}};
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int y = 2 * by + dy, x = 2 * bx + dx;
          if (y < h && x < w) out.at(y, x) = static_cast<float>(r[dy][dx]);
        }
      }
    }
  }
  return out;
}

}  // namespace detail

inline Plane denoise(const Plane& p, const DenoiserConfig& cfg) {
  if (cfg.kind == DenoiserConfig::Kind::gaussian) return gaussian_blur(p, cfg.sigma);
  return detail::haar_soft_denoise(p, cfg.threshold);
}

inline Plane center_crop(const Plane& p, int size) {
  if (p.height < size || p.width < size) {
    fail("canonical-size-mismatch", std::to_string(p.height) + "x" + std::to_string(p.width) +
                                        " is smaller than the canonical crop " + std::to_string(size));
  }
  const int oy = (p.height - size) / 2, ox = (p.width - size) / 2;
  Plane out(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) out.at(y, x) = p.at(oy + y, ox + x);
  }
  return out;
}

// Noise residual of the canonical centre crop, grayscale.
inline NoiseResidual residual(const Image& img, const PrnuConfig& cfg) {
  const Plane g = center_crop(to_plane(img), cfg.crop);
  const Plane d = denoise(g, cfg.denoiser);
  Plane r(g.height, g.width);
  for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] = g.data[i] - d.data[i];
  return r;
}

struct Fingerprint {
  std::string model_id;
  Plane data;
  std::size_t sample_count = 0;
};

// Running sum; merging two accumulators equals accumulating both sets.
class FingerprintAccumulator {
 public:
  void add(const NoiseResidual& r) {
    if (count_ == 0) {
      h_ = r.height;
      w_ = r.width;
      sum_.assign(r.data.size(), 0.0);
    } else if (r.height != h_ || r.width != w_) {
      fail("canonical-size-mismatch", "residual " + std::to_string(r.height) + "x" + std::to_string(r.width) +
                                          " vs " + std::to_string(h_) + "x" + std::to_string(w_));
    }
    for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] += r.data[i];
    ++count_;
  }

  void merge(const FingerprintAccumulator& o) {
    if (o.count_ == 0) return;
    if (count_ == 0) {
      *this = o;
      return;
    }
    if (o.h_ != h_ || o.w_ != w_) fail("canonical-size-mismatch", "accumulators differ in size");
    for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] += o.sum_[i];
    count_ += o.count_;
  }

  Fingerprint finish(std::string model_id) const {
    if (count_ == 0) fail("no-residuals", "fingerprint for '" + model_id + "' has no residuals");
    Fingerprint f{std::move(model_id), Plane(h_, w_), count_};
    for (std::size_t i = 0; i < sum_.size(); ++i) f.data.data[i] = static_cast<float>(sum_[i] / double(count_));
    return f;
  }

  std::size_t count() const noexcept { return count_; }

 private:
  int h_ = 0, w_ = 0;
  std::size_t count_ = 0;
  std::vector<double> sum_;
};

inline Fingerprint build_fingerprint(const std::vector<NoiseResidual>& residuals, std::string model_id) {
  FingerprintAccumulator acc;
  for (const auto& r : residuals) acc.add(r);
  return acc.finish(std::move(model_id));
}

struct Match {
  std::string model_id;
  double distance = 0.0;
};

inline double euclidean(const Plane& a, const Plane& b) {
  if (a.height != b.height || a.width != b.width) {
    fail("canonical-size-mismatch", std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
                                        std::to_string(b.height) + "x" + std::to_string(b.width));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = double(a.data[i]) - double(b.data[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

// All fingerprints ranked by ascending Euclidean distance to the residual;
// equal distances keep database order.
inline std::vector<Match> rank_residual(const NoiseResidual& r, const std::vector<Fingerprint>& db) {
  if (db.empty()) fail("empty-database", "no fingerprints to match against");
  std::vector<Match> out;
  out.reserve(db.size());
  for (const auto& f : db) out.push_back({f.model_id, euclidean(r, f.data)});
  std::stable_sort(out.begin(), out.end(), [](const Match& a, const Match& b) { return a.distance < b.distance; });
  return out;
}

inline std::vector<Match> attribute_nearest(const Image& img, const std::vector<Fingerprint>& db,
                                            const PrnuConfig& cfg) {
  return rank_residual(residual(img, cfg), db);
}

// ---- database file --------------------------------------------------------
//   magic "SFPFPDB1" | u32 version | u32 header length | header JSON
//   per fingerprint (header order): crop*crop float32 little-endian

inline constexpr std::array<char, 8> db_magic = {'S', 'F', 'P', 'F', 'P', 'D', 'B', '1'};
inline constexpr std::uint32_t db_version = 1;

struct FingerprintDb {
  PrnuConfig config;
  std::vector<Fingerprint> entries;
  nlohmann::json metadata = nlohmann::json::object();  // e.g. model specs
};

inline void save_fingerprint_db(const std::filesystem::path& path, const FingerprintDb& db) {
  nlohmann::json header = {{"config", db.config},
                           {"denoiser_version", db.config.denoiser.version()},
                           {"metadata", db.metadata},
                           {"models", nlohmann::json::array()}};
  for (const auto& f : db.entries) {
    if (f.data.height != db.config.crop || f.data.width != db.config.crop) {
      fail("canonical-size-mismatch", f.model_id + " fingerprint does not match the database crop");
    }
    header["models"].push_back({{"id", f.model_id}, {"samples", f.sample_count}});
  }
  nn::detail::ByteWriter w;
  w.raw(db_magic.data(), db_magic.size());
  w.u32(db_version);
  w.str(header.dump());
  for (const auto& f : db.entries) {
    for (float v : f.data.data) w.f32(v);
  }
  write_file_atomic(path, w.bytes().data(), w.bytes().size());
}

inline FingerprintDb load_fingerprint_db(const std::filesystem::path& path) {
  nn::detail::ByteReader r(read_file_bytes(path), path.string());
  r.expect_magic(db_magic);
  const std::uint32_t version = r.u32();
  if (version != db_version) fail("unsupported-version", path.string() + ": fingerprint db v" + std::to_string(version));
  FingerprintDb db;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.str());
    db.config = header.at("config").get<PrnuConfig>();
  } catch (const nlohmann::json::exception& e) {
    fail("corrupt-file", path.string() + ": " + e.what());
  }
  db.metadata = header.value("metadata", nlohmann::json::object());
  for (const auto& m : header.at("models")) {
    Fingerprint f{m.at("id").get<std::string>(), Plane(db.config.crop, db.config.crop),
                  m.at("samples").get<std::size_t>()};
    for (float& v : f.data.data) v = r.f32();
    db.entries.push_back(std::move(f));
  }
  if (!r.done()) fail("corrupt-file", path.string() + ": trailing bytes");
  return db;
}

}  // namespace sisrfp::prnu
