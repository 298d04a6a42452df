// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "seqattr/data/synthetic.hpp"
#include "seqattr/decoder/decoder.hpp"
#include "seqattr/encoder/encoder.hpp"

namespace seqattr::trainer {

enum class DecayUnit { kEpoch, kStep };

// Which losses drive the update.
enum class TrainingArm {
  kJoint,         // lambda * L_id + L_ctc + L_at
  kNoReid,        // lambda forced to 0
  kNoAttributes,  // L_id only
};

DecayUnit parse_decay_unit(std::string_view text);
TrainingArm parse_training_arm(std::string_view text);
std::string training_arm_name(TrainingArm arm);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double decay_rate = 0.9;
  DecayUnit decay_unit = DecayUnit::kEpoch;
  double lambda = 4.0;
  std::uint64_t seed = 7;
  TrainingArm arm = TrainingArm::kJoint;
  bool flip = true;
  double validation_fraction = 0.1;  // share of train identities held out for lambda selection
  std::string checkpoint = "model.ckpt";
  std::string warm_start;  // optional checkpoint whose parameters seed training

  // Learning rate after `epochs_done` epochs and `steps_done` updates.
  double learning_rate_at(std::size_t epochs_done, std::size_t steps_done) const;
};

struct EvalConfig {
  encoder::FeatureLayer feature_layer = encoder::FeatureLayer::kConv;
  bool exclude_same_camera = true;
  std::size_t max_rank = 10;
};

// Every tunable of one experiment. Serialises to flat INI sections
// [encoder], [decoder], [train], [data], [eval].
struct ExperimentConfig {
  encoder::EncoderConfig encoder = encoder::EncoderConfig::desk();
  decoder::TransformerConfig decoder;
  TrainConfig train;
  data::SyntheticSpec data;
  EvalConfig eval;

  // ConfigError on any out-of-range value or when the image size disagrees
  // with the encoder input.
  void validate() const;

  // `section.key` = `value`. ConfigError names unknown keys and bad values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static std::vector<std::string> keys();

  // Applies `section.key=value`. UsageError when malformed or unknown.
  void apply_override(std::string_view assignment);

  std::string format() const;
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

}  // namespace seqattr::trainer
