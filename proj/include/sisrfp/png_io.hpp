#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "sisrfp/error.hpp"
#include "sisrfp/image.hpp"

namespace sisrfp {

namespace detail {

inline std::vector<std::uint8_t> to_bytes(const Image& img) {
  std::vector<std::uint8_t> bytes(img.data().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.data()[i], 0.0f, 1.0f) * 255.0f));
  }
  return bytes;
}

inline Image from_png_image(png_image& pi, const std::vector<std::uint8_t>& buf) {
  const int channels = PNG_IMAGE_SAMPLE_CHANNELS(pi.format);
  std::vector<float> data(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) data[i] = buf[i] / 255.0f;
  return Image(static_cast<int>(pi.height), static_cast<int>(pi.width), channels, std::move(data));
}

inline png_uint_32 format_for(int channels) {
  return channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
}

}  // namespace detail

// 8-bit PNG encode with libpng defaults.
inline std::vector<std::uint8_t> encode_png(const Image& img) {
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width());
  pi.height = static_cast<png_uint_32>(img.height());
  pi.format = detail::format_for(img.channels());
  const auto bytes = detail::to_bytes(img);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&pi, nullptr, &size, 0, bytes.data(), 0, nullptr)) {
    fail("png-encode", pi.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&pi, out.data(), &size, 0, bytes.data(), 0, nullptr)) {
    fail("png-encode", pi.message);
  }
  out.resize(size);
  return out;
}

// Decodes to 8-bit gray or RGB; alpha is composited away, palettes expanded.
inline Image decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&pi, bytes.data(), bytes.size())) {
    fail("png-decode", pi.message);
  }
  pi.format = (pi.format & PNG_FORMAT_FLAG_COLOR) ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&pi);
    fail("png-decode", pi.message);
  }
  return detail::from_png_image(pi, buf);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("io-error", "cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline Image read_png(const std::filesystem::path& path) {
  try {
    return decode_png(read_file_bytes(path));
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

// Writes through a temporary sibling and renames, so readers never observe a torn file.
inline void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t size) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail("io-error", "cannot write " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) fail("io-error", "short write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_png(const std::filesystem::path& path, const Image& img) {
  const auto bytes = encode_png(img);
  write_file_atomic(path, bytes.data(), bytes.size());
}

}  // namespace sisrfp
