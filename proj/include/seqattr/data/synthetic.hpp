// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "seqattr/codec/mapping_table.hpp"
#include "seqattr/data/image.hpp"
#include "seqattr/data/manifest.hpp"

namespace seqattr::data {

// Per-image disturbances. All zero renders the canonical figure.
struct Nuisance {
  double brightness = 0.15;  // gain drawn from [1 - b, 1 + b]
  int shift = 2;             // translation in layout pixels, each axis in [-s, s]
  double noise = 8.0;        // Gaussian pixel noise stddev, intensity units
};

// Identity appearance beyond attributes. Each field indexes a small palette.
struct Texture {
  int skin = 0;     // [0, 4)
  int stripes = 0;  // [0, 4): none, horizontal, vertical, diagonal
  int period = 0;   // [0, 4): stripe period 3..6
  int shoes = 0;    // [0, 4)
};

inline constexpr std::size_t kTextureCapacity = 4 * 4 * 4 * 4;
Texture texture_from_index(std::size_t index);

struct SyntheticSpec {
  std::size_t train_identities = 200;
  std::size_t test_identities = 200;
  std::size_t images_per_identity = 20;
  std::size_t height = 56;
  std::size_t width = 28;
  Nuisance nuisance;
  std::uint64_t seed = 7;
  std::string prefix;  // file name prefix, lets two regimes share a directory

  // ConfigError for zero counts, tiny images, negative nuisance, or more
  // identities than attribute combinations times texture variants.
  void validate() const;
};

// Renders one person. `attributes` must assign every group of
// MappingTable::pedestrian_default(). camera is 1 or 2; rng drives nuisance.
Image render_person(const std::map<std::string, std::string>& attributes, const Texture& texture,
                    int camera, const Nuisance& nuisance, std::size_t height, std::size_t width,
                    std::uint64_t seed);

// Inverse of render_person on images rendered with zero nuisance: reads every
// attribute back from fixed probe pixels.
std::map<std::string, std::string> read_attributes(const Image& clean);

struct GeneratedDataset {
  DatasetManifest train;
  DatasetManifest test;
  codec::MappingTable table;
};

// Writes <out>/train.csv, <out>/test.csv, <out>/mapping.txt and the images
// under <out>/images/. Byte-identical output for equal specs. Train and test
// identities are disjoint; pids are 1..N within each split and images
// alternate between cameras 1 and 2.
GeneratedDataset generate_dataset(const SyntheticSpec& spec, const std::filesystem::path& out);

}  // namespace seqattr::data
