// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/trainer/model.hpp"

#include "seqattr/errors.hpp"

namespace seqattr::trainer {
namespace {

constexpr const char* kMetaConfig = "meta/config";
constexpr const char* kMetaTable = "meta/table";
constexpr const char* kMetaIdentities = "meta/identities";
constexpr const char* kMetaStats = "meta/channel_stats";

// Text is stored one byte per element so checkpoints stay a single file.
void put_text(nk::Checkpoint& ckpt, const std::string& name, const std::string& text) {
  std::vector<double> v(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) v[i] = static_cast<unsigned char>(text[i]);
  const std::size_t n = v.size();  // read before v is moved from
  ckpt.put(name, {n}, std::move(v));
}

std::string get_text(const nk::Checkpoint& ckpt, const std::string& name) {
  const nk::StoredTensor* t = ckpt.find(name);
  if (t == nullptr) throw VersionError("checkpoint lacks " + name + "; not written by this tool");
  std::string text;
  text.reserve(t->values.size());
  for (double v : t->values) {
    if (v < 0 || v > 255) throw VersionError("checkpoint entry " + name + " is corrupt");
    text.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  return text;
}

}  // namespace

JointModel::JointModel(const ExperimentConfig& cfg, const codec::MappingTable& table,
                       std::size_t identities, const data::ChannelStats& stats)
    : cfg_(cfg), table_(table), identities_(identities), stats_(stats) {
  cfg_.encoder.validate();
  cfg_.decoder.validate();
  if (identities_ == 0) throw ConfigError("model needs at least one training identity");
  nk::Rng rng(nk::Rng::derive(cfg_.train.seed, 1));
  encoder_ = std::make_unique<encoder::Encoder>(cfg_.encoder, identities_,
                                                table_.label_count() + 1, params_, rng);
  decoder_ = std::make_unique<decoder::Decoder>(cfg_.decoder, cfg_.encoder.feature_dim(), table_,
                                                params_, rng);
}

Prediction JointModel::predict(const data::Image& img, std::size_t beam_width) const {
  const encoder::Encoded e = encoder_->encode(input(img));
  Prediction p;
  p.hypothesis = decoder_->beam_search(decoder_->encode_memory(e.x), beam_width);
  p.record = codec::decode_sequence(p.hypothesis.labels, table_);
  return p;
}

std::vector<double> JointModel::reid_features(const data::Image& img,
                                              encoder::FeatureLayer layer) const {
  return encoder_->reid_features(encoder_->encode(input(img)), layer);
}

nk::Checkpoint JointModel::to_checkpoint(const nk::AdamState* optimizer) const {
  nk::Checkpoint ckpt;
  put_text(ckpt, kMetaConfig, cfg_.format());
  put_text(ckpt, kMetaTable, table_.format());
  ckpt.put_scalar(kMetaIdentities, static_cast<double>(identities_));
  ckpt.put(kMetaStats, {6},
           {stats_.mean[0], stats_.mean[1], stats_.mean[2], stats_.stddev[0], stats_.stddev[1],
            stats_.stddev[2]});
  nk::store_parameters(ckpt, params_);
  if (optimizer != nullptr) nk::store_optimizer(ckpt, params_, *optimizer);
  return ckpt;
}

void JointModel::save(const std::filesystem::path& path, const nk::AdamState* optimizer) const {
  to_checkpoint(optimizer).save(path);
}

std::unique_ptr<JointModel> JointModel::from_checkpoint(const nk::Checkpoint& ckpt) {
  ExperimentConfig cfg;
  codec::MappingTable table;
  try {
    cfg = ExperimentConfig::parse(get_text(ckpt, kMetaConfig));
    table = codec::MappingTable::parse(get_text(ckpt, kMetaTable));
  } catch (const ConfigError& e) {
    throw VersionError(std::string("checkpoint metadata unreadable: ") + e.what());
  } catch (const CodecError& e) {
    throw VersionError(std::string("checkpoint mapping table unreadable: ") + e.what());
  }
  const nk::StoredTensor* ids = ckpt.find(kMetaIdentities);
  const nk::StoredTensor* st = ckpt.find(kMetaStats);
  if (ids == nullptr || st == nullptr || st->values.size() != 6) {
    throw VersionError("checkpoint lacks identity count or channel statistics");
  }
  data::ChannelStats stats;
  for (std::size_t c = 0; c < 3; ++c) {
    stats.mean[c] = st->values[c];
    stats.stddev[c] = st->values[3 + c];
  }
  auto model = std::make_unique<JointModel>(cfg, table,
                                            static_cast<std::size_t>(ids->values.at(0)), stats);
  nk::restore_parameters(ckpt, model->params_);
  return model;
}

std::unique_ptr<JointModel> JointModel::load(const std::filesystem::path& path) {
  return from_checkpoint(nk::Checkpoint::load(path));
}

}  // namespace seqattr::trainer
