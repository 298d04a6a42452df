// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <vector>

#include "seqattr/codec/codec.hpp"
#include "seqattr/data/image.hpp"
#include "seqattr/decoder/decoder.hpp"
#include "seqattr/encoder/encoder.hpp"
#include "seqattr/numkit/adam.hpp"
#include "seqattr/numkit/checkpoint.hpp"
#include "seqattr/trainer/config.hpp"

namespace seqattr::trainer {

struct Prediction {
  decoder::Hypothesis hypothesis;
  codec::AttributeRecord record;
};

// Encoder, decoder and everything needed to rebuild them from a checkpoint:
// configuration, mapping table, identity count and input normalisation.
class JointModel {
 public:
  JointModel(const ExperimentConfig& cfg, const codec::MappingTable& table,
             std::size_t identities, const data::ChannelStats& stats);

  JointModel(const JointModel&) = delete;
  JointModel& operator=(const JointModel&) = delete;

  const ExperimentConfig& config() const { return cfg_; }
  const codec::MappingTable& table() const { return table_; }
  std::size_t identities() const { return identities_; }
  const data::ChannelStats& stats() const { return stats_; }
  nk::ParameterStore& params() { return params_; }
  const nk::ParameterStore& params() const { return params_; }
  const encoder::Encoder& encoder() const { return *encoder_; }
  const decoder::Decoder& decoder() const { return *decoder_; }

  nk::Tensor input(const data::Image& img) const { return data::to_tensor(img, stats_); }
  Prediction predict(const data::Image& img, std::size_t beam_width) const;
  std::vector<double> reid_features(const data::Image& img, encoder::FeatureLayer layer) const;

  // Parameters, optional optimizer state and the metadata above.
  nk::Checkpoint to_checkpoint(const nk::AdamState* optimizer) const;
  void save(const std::filesystem::path& path, const nk::AdamState* optimizer) const;
  // VersionError when metadata is absent or parameters do not fit.
  static std::unique_ptr<JointModel> from_checkpoint(const nk::Checkpoint& ckpt);
  static std::unique_ptr<JointModel> load(const std::filesystem::path& path);

 private:
  ExperimentConfig cfg_;
  codec::MappingTable table_;
  std::size_t identities_;
  data::ChannelStats stats_;
  nk::ParameterStore params_;
  std::unique_ptr<encoder::Encoder> encoder_;
  std::unique_ptr<decoder::Decoder> decoder_;
};

}  // namespace seqattr::trainer
