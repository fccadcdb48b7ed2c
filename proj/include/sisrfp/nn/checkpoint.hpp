#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sisrfp/error.hpp"
#include "sisrfp/nn/network.hpp"
#include "sisrfp/png_io.hpp"

namespace sisrfp::nn {

// Weight checkpoint layout (all integers u32 little-endian):
//   magic "SFPCKPT1" | version | header length | header JSON
//   tensor count | per tensor: name length, name ("layer.param"), rank,
//   dims..., float32 little-endian data
inline constexpr std::array<char, 8> checkpoint_magic = {'S', 'F', 'P', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t checkpoint_version = 1;

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> b, std::string what) : bytes_(std::move(b)), what_(std::move(what)) {}
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail("corrupt-file", what_ + ": truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void expect_magic(const std::array<char, 8>& magic) {
    need(8);
    if (std::memcmp(bytes_.data() + pos_, magic.data(), 8) != 0) fail("corrupt-file", what_ + ": bad magic");
    pos_ += 8;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace detail

struct Checkpoint {
  Network<float> net;
  nlohmann::json metadata;
};

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Network<T>& net, const nlohmann::json& metadata = {}) {
  nlohmann::json header;
  header["layers"] = net.specs_with_head();
  header["input_shape"] = net.input_shape();
  if (net.feature_tap()) header["feature_tap"] = *net.feature_tap();
  header["metadata"] = metadata;

  detail::ByteWriter w;
  w.raw(checkpoint_magic.data(), checkpoint_magic.size());
  w.u32(checkpoint_version);
  w.str(header.dump());
  std::uint32_t count = 0;
  for (std::size_t i = 0; i < net.size(); ++i) count += static_cast<std::uint32_t>(net.layer(i).params().size());
  w.u32(count);
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& l = net.layer(i);
    const auto names = l.param_names();
    for (std::size_t p = 0; p < l.params().size(); ++p) {
      const auto& t = l.params()[p];
      w.str(l.name() + "." + names[p]);
      w.u32(static_cast<std::uint32_t>(t.rank()));
      for (auto d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
      for (T v : t.data()) w.f32(static_cast<float>(v));
    }
  }
  write_file_atomic(path, w.bytes().data(), w.bytes().size());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  detail::ByteReader r(read_file_bytes(path), path.string());
  r.expect_magic(checkpoint_magic);
  const std::uint32_t version = r.u32();
  if (version != checkpoint_version) fail("unsupported-version", path.string() + ": v" + std::to_string(version));
  const nlohmann::json header = nlohmann::json::parse(r.str());
  Network<float> net(header.at("layers").get<std::vector<LayerSpec>>(), header.at("input_shape").get<Shape>(), 0);
  if (header.contains("feature_tap")) net.set_feature_tap(header["feature_tap"].get<std::string>());

  const std::uint32_t count = r.u32();
  for (std::uint32_t c = 0; c < count; ++c) {
    const std::string key = r.str();
    const auto dot = key.rfind('.');
    if (dot == std::string::npos) fail("corrupt-file", "bad tensor key '" + key + "'");
    auto& layer = net.layer(net.layer_index(key.substr(0, dot)));
    const auto names = layer.param_names();
    const auto it = std::find(names.begin(), names.end(), key.substr(dot + 1));
    if (it == names.end()) fail("corrupt-file", "unknown parameter '" + key + "'");
    auto& tensor = layer.params()[std::size_t(it - names.begin())];
    Shape shape(r.u32());
    for (auto& d : shape) d = r.u32();
    if (shape != tensor.shape()) fail("corrupt-file", "shape mismatch for '" + key + "'");
    for (float& v : tensor.data()) v = r.f32();
  }
  if (!r.done()) fail("corrupt-file", path.string() + ": trailing bytes");
  return {std::move(net), header.value("metadata", nlohmann::json::object())};
}

}  // namespace sisrfp::nn
