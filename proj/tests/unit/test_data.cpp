// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include "seqattr/data/image.hpp"
#include "seqattr/data/manifest.hpp"
#include "seqattr/data/synthetic.hpp"
#include "seqattr/errors.hpp"
#include "seqattr/numkit/random.hpp"

namespace seqattr::data {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("seqattr_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.train_identities = 6;
  s.test_identities = 4;
  s.images_per_identity = 3;
  return s;
}

Image random_image(nk::Rng& rng, std::size_t h, std::size_t w, std::size_t c) {
  Image img(h, w, c);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

TEST(Simg, RoundTripAndRejection) {
  nk::Rng rng(1);
  const Image img = random_image(rng, 5, 7, 3);
  EXPECT_EQ(decode_simg(encode_simg(img)), img);
  std::vector<std::uint8_t> bytes = encode_simg(img);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 5), "SIMG1");
  bytes.pop_back();
  EXPECT_THROW(decode_simg(bytes), DataError);
  bytes[0] = 'X';
  EXPECT_THROW(decode_simg(bytes), DataError);
  const fs::path dir = scratch("simg");
  write_simg(dir / "a.simg", img);
  EXPECT_EQ(read_simg(dir / "a.simg"), img);
  EXPECT_THROW(read_simg(dir / "missing.simg"), DataError);
}

TEST(Netpbm, RoundTrip) {
  nk::Rng rng(2);
  const fs::path dir = scratch("pnm");
  for (std::size_t c : {1u, 3u}) {
    const Image img = random_image(rng, 4, 6, c);
    write_netpbm(dir / "x.pnm", img);
    EXPECT_EQ(read_netpbm(dir / "x.pnm"), img);
  }
}

TEST(Flip, InvolutionAndMirror) {
  nk::Rng rng(3);
  const Image img = random_image(rng, 4, 5, 3);
  const Image f = flip_augment(img);
  EXPECT_EQ(flip_augment(f), img);
  EXPECT_EQ(f.at(1, 0, 2), img.at(1, 4, 2));
  EXPECT_NE(f, img);
}

TEST(ChannelStatsTest, NormalisedTensorHasZeroMeanUnitVariance) {
  nk::Rng rng(4);
  std::vector<Image> imgs{random_image(rng, 6, 4, 3), random_image(rng, 6, 4, 3)};
  const ChannelStats s = compute_channel_stats(imgs);
  double mean = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const Image& img : imgs) {
    const nk::Tensor t = to_tensor(img, s);
    for (std::size_t i = 1; i < t.size(); i += 3) {
      mean += t[i];
      sq += t[i] * t[i];
      ++n;
    }
  }
  EXPECT_NEAR(mean / n, 0.0, 1e-12);
  EXPECT_NEAR(sq / n, 1.0, 1e-9);
  EXPECT_THROW(to_tensor(random_image(rng, 2, 2, 1), s), DimensionError);
}

TEST(Renderer, CleanRenderIsDecodableForEveryCombination) {
  const codec::MappingTable table = codec::MappingTable::pedestrian_default();
  const Nuisance clean{0.0, 0, 0.0};
  std::size_t index = 0;
  std::map<std::string, std::string> attrs;
  // Enumerate all 320 combinations by mixed radix.
  for (std::size_t combo = 0; combo < 320; ++combo) {
    std::size_t rest = combo;
    for (const auto& g : table.groups()) {
      attrs[g.name] = g.values[rest % g.values.size()];
      rest /= g.values.size();
    }
    const Texture tex = texture_from_index((combo * 37) % kTextureCapacity);
    for (int camera : {1, 2}) {
      const Image img = render_person(attrs, tex, camera, clean, 56, 28, ++index);
      EXPECT_EQ(read_attributes(img), attrs) << "combination " << combo << " camera " << camera;
    }
  }
  const Image big = render_person(attrs, texture_from_index(5), 1, clean, 112, 56, 9);
  EXPECT_EQ(read_attributes(big), attrs);
}

TEST(Renderer, HatStripPresentExactlyWithHat) {
  std::map<std::string, std::string> attrs{{"gender", "male"}, {"sleeve", "short"},
                                           {"hat", "yes"},     {"up_color", "red"},
                                           {"low_color", "blue"}, {"backpack", "no"}};
  const Nuisance clean{0.0, 0, 0.0};
  const auto hat_pixels = [&](const Image& img) {
    int n = 0;
    for (std::size_t y = 1; y < 4; ++y)
      for (std::size_t x = 9; x < 19; ++x) n += img.at(y, x, 0) == 230 && img.at(y, x, 2) == 20;
    return n;
  };
  EXPECT_EQ(hat_pixels(render_person(attrs, {}, 1, clean, 56, 28, 1)), 30);
  attrs["hat"] = "no";
  EXPECT_EQ(hat_pixels(render_person(attrs, {}, 1, clean, 56, 28, 1)), 0);
  attrs.erase("hat");
  EXPECT_THROW(render_person(attrs, {}, 1, clean, 56, 28, 1), DataError);
}

TEST(Generator, DeterministicCountsAndDisjointSplits) {
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  const GeneratedDataset da = generate_dataset(small_spec(), a);
  generate_dataset(small_spec(), b);
  EXPECT_EQ(slurp(a / "train.csv"), slurp(b / "train.csv"));
  EXPECT_EQ(slurp(a / "test.csv"), slurp(b / "test.csv"));
  for (const auto& row : da.train.rows) EXPECT_EQ(slurp(a / row.image), slurp(b / row.image));
  EXPECT_EQ(da.train.rows.size(), 18u);
  EXPECT_EQ(da.test.rows.size(), 12u);
  EXPECT_EQ(da.train.identities(), (std::vector<int>{1, 2, 3, 4, 5, 6}));
  EXPECT_TRUE(da.test.has_cameras());

  // Attributes are constant per identity; appearance keys are distinct across splits.
  std::map<int, std::map<std::string, std::string>> seen;
  for (const auto& row : da.train.rows) {
    const auto [it, fresh] = seen.emplace(row.pid, row.attributes);
    if (!fresh) EXPECT_EQ(it->second, row.attributes);
  }
  EXPECT_EQ(codec::MappingTable::load(a / "mapping.txt"), da.table);

  SyntheticSpec other = small_spec();
  other.seed = 8;
  const GeneratedDataset dc = generate_dataset(other, scratch("gen_c"));
  EXPECT_NE(dc.train.rows, da.train.rows);
}

TEST(Generator, FullSizeSpecCounts) {
  SyntheticSpec s;
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.train_identities * s.images_per_identity, 4000u);
  s.train_identities = 320 * kTextureCapacity;
  EXPECT_THROW(s.validate(), ConfigError);
  s = SyntheticSpec{};
  s.nuisance.noise = -1.0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Manifest, RoundTripAndValidation) {
  const fs::path dir = scratch("manifest");
  const GeneratedDataset d = generate_dataset(small_spec(), dir);
  const DatasetManifest loaded = load_manifest(dir / "train.csv", d.table);
  EXPECT_EQ(loaded.rows, d.train.rows);
  EXPECT_EQ(loaded.groups, d.train.groups);
  EXPECT_EQ(loaded.split, "train");
  EXPECT_EQ(loaded.record(0, d.table).values.size(), 6u);

  std::string text = format_manifest(d.train);
  const std::size_t pos = text.find(",red,");
  std::string bad = text;
  if (pos != std::string::npos) {
    bad.replace(pos, 5, ",purpple,");
  } else {
    const std::size_t p2 = bad.find(",black,");
    bad.replace(p2, 7, ",purpple,");
  }
  {
    std::ofstream(dir / "bad.csv") << bad;
  }
  try {
    load_manifest(dir / "bad.csv", d.table);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row "), std::string::npos) << msg;
    EXPECT_NE(msg.find("color"), std::string::npos) << msg;
    EXPECT_NE(msg.find("purpple"), std::string::npos) << msg;
  }
  fs::remove(dir / d.train.rows[2].image);
  try {
    load_manifest(dir / "train.csv", d.table);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(load_manifest(dir / "train.csv", d.table, false));
  {
    std::ofstream(dir / "hdr.csv") << "img,pid,camera,gender\n";
  }
  EXPECT_THROW(load_manifest(dir / "hdr.csv", d.table), DataError);
}

TEST(Manifest, SubsetTablesAndSelection) {
  const fs::path dir = scratch("subset");
  const GeneratedDataset d = generate_dataset(small_spec(), dir);
  const codec::MappingTable reduced = d.table.without_group("hat");
  const DatasetManifest m = load_manifest(dir / "test.csv", reduced);
  EXPECT_EQ(m.record(0, reduced).values.count("hat"), 0u);
  const DatasetManifest two = select_identities(m, {2, 4});
  EXPECT_EQ(two.rows.size(), 6u);
  EXPECT_EQ(two.identities(), (std::vector<int>{2, 4}));
  const DatasetManifest both = concat_manifests(two, two);
  EXPECT_EQ(both.identities(), (std::vector<int>{2, 4, 6, 8}));
}

}  // namespace
}  // namespace seqattr::data
