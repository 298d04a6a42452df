// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

#include "seqattr/errors.hpp"
#include "seqattr/numkit/random.hpp"

namespace seqattr::data {
namespace {

using Rgb = std::array<double, 3>;

// The figure is laid out on a 56 x 28 grid and resampled to the target size.
constexpr double kLayoutH = 56.0;
constexpr double kLayoutW = 28.0;

constexpr Rgb kHair{60, 40, 25};
constexpr Rgb kHat{230, 160, 20};
constexpr Rgb kBackpack{110, 70, 30};
constexpr std::array<Rgb, 4> kSkin{{{230, 190, 160}, {200, 150, 110}, {150, 100, 70}, {100, 70, 50}}};
constexpr std::array<Rgb, 4> kShoes{{{20, 20, 20}, {240, 240, 240}, {140, 30, 30}, {90, 60, 120}}};
constexpr std::array<Rgb, 2> kCameraTint{{{1.0, 1.0, 1.0}, {0.92, 0.97, 1.08}}};

const std::map<std::string, Rgb>& up_palette() {
  static const std::map<std::string, Rgb> p{{"black", {30, 30, 30}},
                                            {"red", {200, 40, 40}},
                                            {"white", {225, 225, 225}},
                                            {"blue", {40, 60, 200}},
                                            {"green", {40, 170, 60}}};
  return p;
}

const std::map<std::string, Rgb>& low_palette() {
  static const std::map<std::string, Rgb> p{{"black", {35, 35, 35}},
                                            {"blue", {50, 70, 170}},
                                            {"gray", {128, 128, 128}},
                                            {"white", {220, 220, 220}}};
  return p;
}

const std::string& need(const std::map<std::string, std::string>& attrs, const std::string& g) {
  const auto it = attrs.find(g);
  if (it == attrs.end()) throw DataError("render_person: attribute group " + g + " is unset");
  return it->second;
}

const Rgb& palette_color(const std::map<std::string, Rgb>& palette, const std::string& group,
                         const std::string& value) {
  const auto it = palette.find(value);
  if (it == palette.end()) throw DataError("render_person: no colour for " + group + "=" + value);
  return it->second;
}

bool in(double v, double lo, double hi) { return v >= lo && v < hi; }

double distance(const Rgb& a, const Rgb& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

template <typename Palette>
std::string nearest(const Palette& palette, const Rgb& c) {
  std::string best;
  double best_d = 1e300;
  for (const auto& [name, rgb] : palette) {
    const double d = distance(rgb, c);
    if (d < best_d) {
      best_d = d;
      best = name;
    }
  }
  return best;
}

Rgb probe(const Image& img, double yb, double xb) {
  const auto y = static_cast<std::size_t>(yb / kLayoutH * static_cast<double>(img.height));
  const auto x = static_cast<std::size_t>(xb / kLayoutW * static_cast<double>(img.width));
  return {double(img.at(y, x, 0)), double(img.at(y, x, 1)), double(img.at(y, x, 2))};
}

std::size_t combination_count(const codec::MappingTable& table) {
  std::size_t n = 1;
  for (const codec::AttributeGroup& g : table.groups()) n *= g.values.size();
  return n;
}

std::map<std::string, std::string> combination(const codec::MappingTable& table, std::size_t index) {
  std::map<std::string, std::string> out;
  for (const codec::AttributeGroup& g : table.groups()) {
    out.emplace(g.name, g.values[index % g.values.size()]);
    index /= g.values.size();
  }
  return out;
}

}  // namespace

Texture texture_from_index(std::size_t index) {
  if (index >= kTextureCapacity) throw IndexError("texture index out of range");
  Texture t;
  t.skin = static_cast<int>(index % 4);
  t.stripes = static_cast<int>(index / 4 % 4);
  t.period = static_cast<int>(index / 16 % 4);
  t.shoes = static_cast<int>(index / 64 % 4);
  return t;
}

void SyntheticSpec::validate() const {
  if (train_identities == 0 || test_identities == 0 || images_per_identity == 0) {
    throw ConfigError("synthetic spec needs at least one identity and image per split");
  }
  if (height < 28 || width < 14 || height > 4096 || width > 4096) {
    throw ConfigError("synthetic image size must be between 28x14 and 4096x4096");
  }
  if (nuisance.brightness < 0.0 || nuisance.brightness >= 1.0 || nuisance.shift < 0 ||
      nuisance.shift > 6 || nuisance.noise < 0.0) {
    throw ConfigError("nuisance parameters out of range");
  }
  const std::size_t capacity =
      combination_count(codec::MappingTable::pedestrian_default()) * kTextureCapacity;
  if (train_identities + test_identities > capacity) {
    throw ConfigError("synthetic spec asks for " +
                      std::to_string(train_identities + test_identities) +
                      " identities but only " + std::to_string(capacity) +
                      " distinct appearances exist");
  }
}

Image render_person(const std::map<std::string, std::string>& attributes, const Texture& texture,
                    int camera, const Nuisance& nuisance, std::size_t height, std::size_t width,
                    std::uint64_t seed) {
  if (camera != 1 && camera != 2) throw DataError("camera must be 1 or 2");
  const bool female = need(attributes, "gender") == "female";
  const bool long_sleeve = need(attributes, "sleeve") == "long";
  const bool hat = need(attributes, "hat") == "yes";
  const bool backpack = need(attributes, "backpack") == "yes";
  const Rgb up = palette_color(up_palette(), "up_color", need(attributes, "up_color"));
  const Rgb low = palette_color(low_palette(), "low_color", need(attributes, "low_color"));
  const Rgb skin = kSkin.at(static_cast<std::size_t>(texture.skin));
  const Rgb shoes = kShoes.at(static_cast<std::size_t>(texture.shoes));
  const double period = 3.0 + texture.period;

  nk::Rng rng(seed);
  const double gray = rng.uniform(80.0, 170.0);
  const double gain = 1.0 + rng.uniform(-nuisance.brightness, nuisance.brightness);
  const auto jitter = [&]() -> double {
    if (nuisance.shift == 0) return 0.0;
    return static_cast<double>(rng.below(2 * static_cast<std::uint64_t>(nuisance.shift) + 1)) -
           nuisance.shift;
  };
  const double dy = jitter();
  const double dx = jitter();
  const Rgb& tint = kCameraTint[static_cast<std::size_t>(camera - 1)];

  Image img(height, width, 3);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double yb = (static_cast<double>(y) + 0.5) * kLayoutH / static_cast<double>(height) - dy;
      const double xb = (static_cast<double>(x) + 0.5) * kLayoutW / static_cast<double>(width) - dx;
      Rgb c{gray, gray, gray};
      if (female && in(yb, 3, 13) && in(xb, 8, 20)) c = kHair;
      if (!female && in(yb, 3, 6) && in(xb, 10, 18)) c = kHair;
      if (in(yb, 5.5, 12) && in(xb, 11, 17)) c = skin;
      if (hat && in(yb, 1, 4.5) && in(xb, 9, 19)) c = kHat;
      if (in(yb, 13, 31) && (in(xb, 5, 8) || in(xb, 20, 23))) {
        c = (long_sleeve || yb < 18) ? up : skin;
      }
      if (in(yb, 13, 31) && in(xb, 8, 20)) {
        c = up;
        double phase = 0.0;
        switch (texture.stripes) {
          case 1: phase = std::floor(yb); break;
          case 2: phase = std::floor(xb); break;
          case 3: phase = std::floor(xb + yb); break;
          default: break;
        }
        if (texture.stripes != 0) {
          const bool dark = std::fmod(std::floor(phase / period * 2.0), 2.0) != 0.0;
          for (double& v : c) v *= dark ? 0.8 : 1.2;
        }
      }
      if (backpack && in(yb, 14, 28) && in(xb, 23, 27)) c = kBackpack;
      if (in(yb, 31, 51) && in(xb, 9, 19)) c = low;
      if (in(yb, 51, 54) && (in(xb, 9, 13.5) || in(xb, 14.5, 19))) c = shoes;
      for (std::size_t k = 0; k < 3; ++k) {
        double v = c[k] * gain * tint[k];
        if (nuisance.noise > 0.0) v += nuisance.noise * rng.normal();
        img.at(y, x, k) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return img;
}

std::map<std::string, std::string> read_attributes(const Image& clean) {
  if (clean.channels != 3) throw DataError("read_attributes needs a 3-channel image");
  std::map<std::string, std::string> out;
  out["gender"] = distance(probe(clean, 9, 9), kHair) < 40 ? "female" : "male";
  out["hat"] = distance(probe(clean, 2.5, 14), kHat) < 40 ? "yes" : "no";
  const Rgb shoulder = probe(clean, 14.5, 6.5);
  out["up_color"] = nearest(up_palette(), shoulder);
  out["sleeve"] = distance(probe(clean, 25, 6.5), shoulder) < 20 ? "long" : "short";
  out["low_color"] = nearest(low_palette(), probe(clean, 40, 11));
  out["backpack"] = distance(probe(clean, 20, 25), kBackpack) < 40 ? "yes" : "no";
  return out;
}

GeneratedDataset generate_dataset(const SyntheticSpec& spec, const std::filesystem::path& out) {
  spec.validate();
  const codec::MappingTable table = codec::MappingTable::pedestrian_default();
  const std::size_t combos = combination_count(table);
  const std::size_t total = spec.train_identities + spec.test_identities;

  // Identity appearance = (attribute combination, texture), all distinct.
  nk::Rng rng(spec.seed);
  std::set<std::pair<std::size_t, std::size_t>> used;
  std::vector<std::pair<std::size_t, std::size_t>> identities;
  while (identities.size() < total) {
    const std::pair<std::size_t, std::size_t> id{rng.below(combos), rng.below(kTextureCapacity)};
    if (used.insert(id).second) identities.push_back(id);
  }

  std::filesystem::create_directories(out);
  GeneratedDataset result{{}, {}, table};
  std::uint64_t image_counter = 0;
  for (int s = 0; s < 2; ++s) {
    const std::string split = s == 0 ? "train" : "test";
    DatasetManifest& m = s == 0 ? result.train : result.test;
    m.root = out;
    m.split = spec.prefix + split;
    for (const codec::AttributeGroup& g : table.groups()) m.groups.push_back(g.name);
    const std::filesystem::path dir = out / "images" / split;
    std::filesystem::create_directories(dir);
    const std::size_t first = s == 0 ? 0 : spec.train_identities;
    const std::size_t count = s == 0 ? spec.train_identities : spec.test_identities;
    for (std::size_t i = 0; i < count; ++i) {
      const auto& [combo, tex] = identities[first + i];
      const auto attributes = combination(table, combo);
      const Texture texture = texture_from_index(tex);
      const int pid = static_cast<int>(i + 1);
      for (std::size_t j = 0; j < spec.images_per_identity; ++j) {
        const int camera = static_cast<int>(1 + j % 2);
        const std::uint64_t seed = nk::Rng::derive(spec.seed, ++image_counter);
        char name[96];
        std::snprintf(name, sizeof name, "%sp%04d_c%d_%03zu.simg", spec.prefix.c_str(), pid,
                      camera, j);
        write_simg(dir / name, render_person(attributes, texture, camera, spec.nuisance,
                                             spec.height, spec.width, seed));
        m.rows.push_back({"images/" + split + "/" + name, pid, camera, attributes});
      }
    }
    write_manifest(out / (m.split + ".csv"), m);
  }
  table.save(out / (spec.prefix + "mapping.txt"));
  return result;
}

}  // namespace seqattr::data
