#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sisrfp/image.hpp"
#include "sisrfp/nn/architectures.hpp"
#include "sisrfp/nn/checkpoint.hpp"
#include "sisrfp/nn/image_tensor.hpp"
#include "sisrfp/png_io.hpp"
#include "sisrfp/zoo/model_spec.hpp"
#include "sisrfp/zoo/synthetic.hpp"

namespace sisrfp::zoo {

// Output samples allowed for one generate() call (HR height * width * channels).
inline constexpr std::size_t kMaxOutputSamples = std::size_t{1} << 26;

// SR network forward pass with the global skip: net(lr) + nearest(lr).
template <typename T>
nn::Tensor<T> nearest_upsample(const nn::Tensor<T>& x, int scale) {
  return nn::Upsample<T>(nn::LayerSpec{nn::LayerKind::upsample, "skip", 0, 0, 3, 1, 1, scale}).forward(x);
}

template <typename T>
nn::Tensor<T> sr_forward(const nn::Network<T>& net, int scale, const nn::Tensor<T>& lr) {
  nn::Tensor<T> out = net.forward(lr);
  const nn::Tensor<T> skip = nearest_upsample(lr, scale);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += skip[i];
  return out;
}

struct TrainedProvenance {
  std::shared_ptr<const nn::Network<float>> net;
  std::string checkpoint;  // path the weights were saved to / loaded from
};

// One member of the zoo: a spec plus whatever realizes it.
class ZooModel {
 public:
  ZooModel(ModelSpec spec, SyntheticParams params) : spec_(spec), impl_(std::move(params)) {}
  ZooModel(ModelSpec spec, TrainedProvenance trained) : spec_(spec), impl_(std::move(trained)) {}

  const ModelSpec& spec() const noexcept { return spec_; }
  std::string id() const { return spec_.id(); }
  bool is_synthetic() const noexcept { return std::holds_alternative<SyntheticParams>(impl_); }
  const SyntheticParams& params() const { return std::get<SyntheticParams>(impl_); }
  const TrainedProvenance& trained() const { return std::get<TrainedProvenance>(impl_); }

  // LR -> HR with output dims exactly lr dims * scale, values in [0, 1].
  Image generate(const Image& lr) const {
    const std::size_t samples = std::size_t(lr.height()) * spec_.scale * lr.width() * spec_.scale * lr.channels();
    if (samples > kMaxOutputSamples) {
      fail("too-large", std::to_string(lr.height()) + "x" + std::to_string(lr.width()) + " at x" +
                            std::to_string(spec_.scale) + " exceeds the output budget");
    }
    Image out;
    if (is_synthetic()) {
      out = synthesize(params(), lr);
    } else {
      Image rgb = lr;
      if (lr.channels() == 1) {
        rgb = Image(lr.height(), lr.width(), 3);
        for (int y = 0; y < lr.height(); ++y) {
          for (int x = 0; x < lr.width(); ++x) {
            for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = lr.at(y, x);
          }
        }
      }
      out = nn::tensor_to_image(sr_forward(*trained().net, spec_.scale, nn::image_to_tensor<float>(rgb)));
    }
    if (out.height() != lr.height() * spec_.scale || out.width() != lr.width() * spec_.scale) {
      fail("shape-error", id() + " produced " + std::to_string(out.height()) + "x" + std::to_string(out.width()));
    }
    return out;
  }

  nlohmann::json describe() const {
    nlohmann::json j = {{"spec", spec_}};
    if (is_synthetic()) {
      j["provenance"] = {{"type", "procedural"}, {"parameters", params()}};
    } else {
      j["provenance"] = {{"type", "checkpoint"}, {"path", trained().checkpoint}};
    }
    return j;
  }

 private:
  ModelSpec spec_;
  std::variant<SyntheticParams, TrainedProvenance> impl_;
};

using Zoo = std::vector<ZooModel>;

inline void check_unique(const std::vector<ModelSpec>& specs) {
  std::set<ModelSpec> seen;
  for (const auto& s : specs) {
    if (!seen.insert(s).second) fail("duplicate-model", s.id());
  }
}

// Synthetic models for an explicit spec list.
inline Zoo build_zoo(const std::vector<ModelSpec>& specs, std::uint64_t master_seed, const SyntheticTuning& tune = {}) {
  if (specs.empty()) fail("empty-grid", "zoo grid has no models", ErrorKind::usage);
  check_unique(specs);
  Zoo zoo;
  zoo.reserve(specs.size());
  for (const auto& s : specs) {
    if (s.kind != ModelKind::synthetic) {
      fail("needs-training", s.id() + " is a trained-sr spec; use train_sr_model", ErrorKind::usage);
    }
    zoo.emplace_back(s, derive_params(s, master_seed, tune));
  }
  return zoo;
}

inline Zoo build_zoo(const GridConfig& grid, std::uint64_t master_seed, const SyntheticTuning& tune = {}) {
  return build_zoo(grid.enumerate(), master_seed, tune);
}

inline Image generate(const ZooModel& model, const Image& lr) { return model.generate(lr); }

inline const ZooModel& find_model(const Zoo& zoo, const std::string& id) {
  for (const auto& m : zoo) {
    if (m.id() == id) return m;
  }
  fail("unknown-model", id);
}

inline constexpr int kZooFileVersion = 1;

// Human-readable JSON listing every model and how it is realized.
inline void write_zoo_description(const std::filesystem::path& path, const Zoo& zoo, std::uint64_t master_seed,
                                  const SyntheticTuning& tune = {}) {
  nlohmann::json j = {{"format", "sisrfp-zoo"}, {"version", kZooFileVersion}, {"master_seed", master_seed},
                      {"tuning", tune},       {"models", nlohmann::json::array()}};
  for (const auto& m : zoo) j["models"].push_back(m.describe());
  const std::string text = j.dump(2) + "\n";
  write_file_atomic(path, text.data(), text.size());
}

// Rebuilds a zoo from its description. Synthetic models are re-derived from
// (spec, master seed, tuning); trained ones are loaded from their checkpoints.
inline Zoo read_zoo_description(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    fail("corrupt-file", path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "sisrfp-zoo") fail("corrupt-file", path.string() + ": not a zoo description");
  if (j.value("version", 0) != kZooFileVersion) {
    fail("unsupported-version", path.string() + ": zoo version " + std::to_string(j.value("version", 0)));
  }
  const auto master = j.at("master_seed").get<std::uint64_t>();
  const auto tune = j.value("tuning", SyntheticTuning{});
  std::vector<ModelSpec> specs;
  Zoo zoo;
  for (const auto& m : j.at("models")) {
    const auto spec = m.at("spec").get<ModelSpec>();
    specs.push_back(spec);
    if (spec.kind == ModelKind::synthetic) {
      zoo.emplace_back(spec, derive_params(spec, master, tune));
    } else {
      std::filesystem::path ck = m.at("provenance").at("path").get<std::string>();
      if (ck.is_relative()) ck = path.parent_path() / ck;
      auto loaded = nn::load_checkpoint(ck);
      zoo.emplace_back(spec, TrainedProvenance{std::make_shared<const nn::Network<float>>(std::move(loaded.net)),
                                               m.at("provenance").at("path").get<std::string>()});
    }
  }
  check_unique(specs);
  return zoo;
}

}  // namespace sisrfp::zoo
