// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "seqattr/numkit/layers.hpp"
#include "seqattr/numkit/parameters.hpp"

namespace seqattr::encoder {

enum class RnnCell { kGru, kTanh };
std::string_view rnn_cell_name(RnnCell cell);
RnnCell parse_rnn_cell(std::string_view name);

enum class FeatureLayer { kConv, kFc0 };
FeatureLayer parse_feature_layer(std::string_view name);
std::string_view feature_layer_name(FeatureLayer layer);

// Residual trunk with the stage layout of a ResNet-50 (four bottleneck
// stages, expansion 4) whose channel counts are multiplied by `scale`, then
// two bidirectional recurrent layers over the width axis.
struct EncoderConfig {
  std::size_t input_h = 56;
  std::size_t input_w = 28;
  double scale = 0.125;
  std::vector<std::size_t> blocks_per_stage{1, 1, 1, 1};
  std::size_t rnn_hidden_1 = 64;  // per direction
  std::size_t rnn_hidden_2 = 32;  // per direction
  RnnCell rnn_cell = RnnCell::kGru;
  std::size_t fc0_dim = 128;

  static EncoderConfig full_scale();
  static EncoderConfig desk();

  // ConfigError unless the trunk maps input_h to height 1 and input_w to
  // input_w / 4 timesteps.
  void validate() const;

  std::size_t stem_channels() const;
  std::size_t stage_width(std::size_t stage) const;     // bottleneck inner width
  std::size_t stage_channels(std::size_t stage) const;  // block output
  std::size_t conv_channels() const { return stage_channels(3); }
  std::size_t sequence_length() const { return input_w / 4; }   // T
  std::size_t feature_dim() const { return 2 * rnn_hidden_2; }  // D
  std::size_t conv_feature_dim() const { return sequence_length() * conv_channels(); }

  bool operator==(const EncoderConfig&) const = default;
};

struct LayerShape {
  std::string name;
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t c = 0;
};

// Output shape after every layer, computed from the config alone.
std::vector<LayerShape> trace_shapes(const EncoderConfig& cfg);

struct Encoded {
  nk::Tensor conv_seq;  // [T x C] trunk output, one row per width column
  nk::Tensor x;         // [T x D] recurrent output
};

class Encoder {
 public:
  // Registers every parameter under "encoder/", "id/" and "ctc/".
  Encoder(const EncoderConfig& cfg, std::size_t identities, std::size_t ctc_classes,
          nk::ParameterStore& params, nk::Rng& rng);

  const EncoderConfig& config() const { return cfg_; }
  std::size_t identities() const { return fc1_.out_features(); }
  std::size_t ctc_classes() const { return ctc_.out_features(); }

  // `image` is a standardised H x W x 3 tensor. ConfigError on shape mismatch.
  Encoded encode(const nk::Tensor& image) const;
  nk::Tensor trunk(const nk::Tensor& image) const;

  nk::Tensor fc0(const nk::Tensor& conv_seq) const;        // [1 x fc0_dim], the c vector
  nk::Tensor id_logits(const nk::Tensor& conv_seq) const;  // [N]
  nk::Tensor ctc_logits(const nk::Tensor& x) const;        // [T x (K+1)]

  // L2-normalised re-identification embedding.
  std::vector<double> reid_features(const Encoded& enc, FeatureLayer layer) const;

 private:
  struct Conv {
    nk::Tensor weight;
    nk::Tensor bias;
    nk::Conv2dGeometry geometry;
  };
  struct Bottleneck {
    Conv reduce;
    Conv spatial;
    Conv expand;
    bool has_projection = false;
    Conv projection;
  };
  struct Direction {
    nk::Linear input;   // in -> gates * H
    nk::Tensor hidden;  // [H x gates * H]
  };
  struct RecurrentLayer {
    Direction forward;
    Direction backward;
  };

  static Conv make_conv(nk::ParameterStore& params, const std::string& name, std::size_t in,
                        std::size_t out, nk::Conv2dGeometry g, nk::Rng& rng);
  static nk::Tensor apply(const Conv& conv, const nk::Tensor& x);
  RecurrentLayer make_recurrent(nk::ParameterStore& params, const std::string& name,
                                std::size_t in, std::size_t hidden, nk::Rng& rng) const;
  nk::Tensor run_direction(const Direction& dir, const nk::Tensor& seq, bool reverse) const;
  nk::Tensor run_layer(const RecurrentLayer& layer, const nk::Tensor& seq) const;

  EncoderConfig cfg_;
  Conv stem_;
  std::vector<Bottleneck> blocks_;
  nk::Conv2dGeometry final_pool_;
  std::vector<RecurrentLayer> rnn_;
  nk::Linear fc0_;
  nk::Linear fc1_;
  nk::Linear ctc_;
};

// Cross-entropy of identity logits against identity index g in [0, N).
nk::Tensor id_loss(const nk::Tensor& logits, std::size_t identity);

// Scales `v` to unit L2 norm; zero vectors are returned unchanged.
std::vector<double> l2_normalize(std::vector<double> v);

}  // namespace seqattr::encoder
