// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "seqattr/errors.hpp"
#include "seqattr/numkit/checkpoint.hpp"

namespace seqattr::nk {
namespace {

TEST(Checkpoint, HeaderBytesFollowTheFileLayout) {
  Checkpoint ckpt;
  ckpt.put("w", {2}, {1.0, -2.0});
  std::ostringstream out;
  ckpt.write(out);
  const std::string bytes = out.str();
  ASSERT_EQ(bytes.size(), 8u + 4 + 4 + 2 + 1 + 1 + 1 + 4 + 16);
  EXPECT_EQ(bytes.substr(0, 8), "SEQATTR1");
  EXPECT_EQ(bytes.substr(8, 4), std::string("\x01\x00\x00\x00", 4));   // version
  EXPECT_EQ(bytes.substr(12, 4), std::string("\x01\x00\x00\x00", 4));  // count
  EXPECT_EQ(bytes.substr(16, 2), std::string("\x01\x00", 2));           // name length
  EXPECT_EQ(bytes[18], 'w');
  EXPECT_EQ(bytes[19], '\0');  // float64 tag
  EXPECT_EQ(bytes[20], '\x01');  // rank
  EXPECT_EQ(bytes.substr(21, 4), std::string("\x02\x00\x00\x00", 4));
  // 1.0 little-endian
  EXPECT_EQ(bytes.substr(25, 8), std::string("\x00\x00\x00\x00\x00\x00\xf0\x3f", 8));
}

TEST(Checkpoint, ParametersAndOptimizerRoundTrip) {
  ParameterStore params;
  Rng rng(5);
  params.add("encoder/conv1/w", {3, 2}, Init::kHe, rng, 3);
  params.add("decoder/out/b", {4}, Init::kUniformFanIn, rng, 4);
  params.zero_grad();
  for (auto& e : params.entries())
    for (double& g : e.tensor.mutable_grad()) g = 0.5;
  AdamState state;
  adam_step(params, state);

  Checkpoint ckpt;
  store_parameters(ckpt, params);
  store_optimizer(ckpt, params, state);
  std::stringstream buf;
  ckpt.write(buf);
  const Checkpoint loaded = Checkpoint::read(buf);

  ParameterStore fresh;
  Rng other(77);
  fresh.add("encoder/conv1/w", {3, 2}, Init::kZeros, other);
  fresh.add("decoder/out/b", {4}, Init::kZeros, other);
  restore_parameters(loaded, fresh);
  for (std::size_t p = 0; p < 2; ++p) {
    const auto a = params.entries()[p].tensor.values();
    const auto b = fresh.entries()[p].tensor.values();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
  const auto restored = restore_optimizer(loaded, fresh);
  ASSERT_TRUE(restored.has_value());
  EXPECT_EQ(restored->step, 1u);
  EXPECT_EQ(restored->first_moment, state.first_moment);
  EXPECT_EQ(restored->second_moment, state.second_moment);
  EXPECT_NE(loaded.find("adam/m/encoder/conv1/w"), nullptr);
}

TEST(Checkpoint, ShapeMismatchIsAVersionError) {
  Checkpoint ckpt;
  ckpt.put("w", {2, 2}, {1, 2, 3, 4});
  ParameterStore params;
  Rng rng(0);
  params.add("w", {4}, Init::kZeros, rng);
  EXPECT_THROW(restore_parameters(ckpt, params), VersionError);
  ParameterStore missing;
  missing.add("v", {4}, Init::kZeros, rng);
  EXPECT_THROW(restore_parameters(ckpt, missing), VersionError);
}

TEST(Checkpoint, RejectsForeignBytes) {
  std::istringstream in("NOTACKPT........");
  EXPECT_THROW(Checkpoint::read(in), VersionError);
  std::istringstream truncated(std::string("SEQATTR1\x01\x00\x00\x00\x05", 13));
  EXPECT_THROW(Checkpoint::read(truncated), DataError);
}

}  // namespace
}  // namespace seqattr::nk
