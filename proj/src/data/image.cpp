// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/data/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "seqattr/errors.hpp"

namespace seqattr::data {
namespace {

constexpr char kMagic[5] = {'S', 'I', 'M', 'G', '1'};
constexpr std::size_t kHeader = 5 + 2 + 2 + 1;

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode_simg(const Image& img) {
  if (img.height == 0 || img.width == 0 || img.channels == 0 || img.height > 0xFFFF ||
      img.width > 0xFFFF || img.channels > 0xFF ||
      img.pixels.size() != img.height * img.width * img.channels) {
    throw DataError("image cannot be stored as SIMG1");
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 5);
  out.push_back(static_cast<std::uint8_t>(img.height & 0xFF));
  out.push_back(static_cast<std::uint8_t>(img.height >> 8));
  out.push_back(static_cast<std::uint8_t>(img.width & 0xFF));
  out.push_back(static_cast<std::uint8_t>(img.width >> 8));
  out.push_back(static_cast<std::uint8_t>(img.channels));
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

Image decode_simg(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeader || !std::equal(kMagic, kMagic + 5, bytes.begin())) {
    throw DataError("not a SIMG1 image");
  }
  Image img;
  img.height = bytes[5] | (static_cast<std::size_t>(bytes[6]) << 8);
  img.width = bytes[7] | (static_cast<std::size_t>(bytes[8]) << 8);
  img.channels = bytes[9];
  const std::size_t n = img.height * img.width * img.channels;
  if (n == 0 || bytes.size() != kHeader + n) {
    throw DataError("SIMG1 payload size does not match its header");
  }
  img.pixels.assign(bytes.begin() + kHeader, bytes.end());
  return img;
}

void write_simg(const std::filesystem::path& path, const Image& img) {
  write_bytes(path, encode_simg(img));
}

Image read_simg(const std::filesystem::path& path) {
  try {
    return decode_simg(read_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_netpbm(const std::filesystem::path& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw DataError("netpbm output needs 1 or 3 channels, image has " +
                    std::to_string(img.channels));
  }
  std::ostringstream header;
  header << (img.channels == 3 ? "P6" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> bytes(h.begin(), h.end());
  bytes.insert(bytes.end(), img.pixels.begin(), img.pixels.end());
  write_bytes(path, bytes);
}

Image read_netpbm(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_bytes(path);
  std::size_t pos = 0;
  // Whitespace-separated header tokens; '#' starts a comment line.
  const auto token = [&]() {
    std::string t;
    while (pos < bytes.size()) {
      const char c = static_cast<char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  const std::string magic = token();
  if (magic != "P6" && magic != "P5") throw DataError(path.string() + ": not a binary PPM/PGM");
  Image img;
  try {
    img.width = std::stoul(token());
    img.height = std::stoul(token());
    if (std::stoul(token()) != 255) throw DataError(path.string() + ": only 8-bit netpbm is supported");
  } catch (const std::logic_error&) {
    throw DataError(path.string() + ": malformed netpbm header");
  }
  ++pos;  // single whitespace before the raster
  img.channels = magic == "P6" ? 3 : 1;
  const std::size_t n = img.width * img.height * img.channels;
  if (n == 0 || bytes.size() < pos + n) throw DataError(path.string() + ": truncated raster");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

Image flip_augment(const Image& img) {
  Image out(img.height, img.width, img.channels);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) out.at(y, img.width - 1 - x, c) = img.at(y, x, c);
    }
  }
  return out;
}

ChannelStats compute_channel_stats(std::span<const Image> images) {
  std::array<double, 3> sum{}, sum_sq{};
  double count = 0.0;
  for (const Image& img : images) {
    if (img.channels != 3) throw DataError("channel statistics need 3-channel images");
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = img.pixels[i + c] / 255.0;
        sum[c] += v;
        sum_sq[c] += v * v;
      }
    }
    count += static_cast<double>(img.height * img.width);
  }
  if (count == 0.0) throw DataError("channel statistics over an empty image set");
  ChannelStats stats;
  for (std::size_t c = 0; c < 3; ++c) {
    stats.mean[c] = sum[c] / count;
    const double var = sum_sq[c] / count - stats.mean[c] * stats.mean[c];
    stats.stddev[c] = std::sqrt(std::max(var, 1e-12));
  }
  return stats;
}

nk::Tensor to_tensor(const Image& img, const ChannelStats& stats) {
  if (img.channels != 3) {
    throw DimensionError("model input needs 3 channels, image has " + std::to_string(img.channels));
  }
  std::vector<double> v(img.pixels.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t c = i % 3;
    v[i] = (img.pixels[i] / 255.0 - stats.mean[c]) / stats.stddev[c];
  }
  return nk::Tensor::from({img.height, img.width, 3}, std::move(v));
}

}  // namespace seqattr::data
