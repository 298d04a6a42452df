// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "seqattr/numkit/tensor.hpp"

namespace seqattr::data {

// 8-bit interleaved image, row-major [height][width][channels].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c) : height(h), width(w), channels(c), pixels(h * w * c) {}

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
  bool operator==(const Image&) const = default;
};

// SIMG1 container: magic "SIMG1", u16 height, u16 width (little endian),
// u8 channels, then raw pixel bytes.
std::vector<std::uint8_t> encode_simg(const Image& img);
// DataError on bad magic, zero sizes or a size mismatch.
Image decode_simg(std::span<const std::uint8_t> bytes);
void write_simg(const std::filesystem::path& path, const Image& img);
Image read_simg(const std::filesystem::path& path);

// Binary PPM (3 channels) or PGM (1 channel), for viewing in common tools.
void write_netpbm(const std::filesystem::path& path, const Image& img);
Image read_netpbm(const std::filesystem::path& path);

// Horizontal mirror. Involution.
Image flip_augment(const Image& img);

struct ChannelStats {
  std::array<double, 3> mean{0.5, 0.5, 0.5};
  std::array<double, 3> stddev{0.25, 0.25, 0.25};
};

// Per-channel mean and population stddev of pixel/255 over all images.
ChannelStats compute_channel_stats(std::span<const Image> images);

// [H x W x C] tensor of (pixel/255 - mean) / stddev. Three channels only.
nk::Tensor to_tensor(const Image& img, const ChannelStats& stats);

}  // namespace seqattr::data
