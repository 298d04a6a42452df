// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/encoder/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "seqattr/errors.hpp"

namespace seqattr::encoder {
namespace {

constexpr std::size_t kStemChannels = 64;
constexpr std::size_t kStageWidths[4] = {64, 128, 256, 512};
constexpr std::size_t kExpansion = 4;

const nk::Conv2dGeometry kStem{7, 7, 2, 2, 3, 3};
const nk::Conv2dGeometry kStemPool{3, 3, 2, 2, 1, 1};
const nk::Conv2dGeometry kReduceStrided{1, 1, 2, 1, 0, 0};
const nk::Conv2dGeometry kPointwise{1, 1, 1, 1, 0, 0};
const nk::Conv2dGeometry kSpatial{3, 3, 1, 1, 1, 1};

// Kernel height shrinks to the feature height when fewer than 3 rows remain.
nk::Conv2dGeometry final_pool_for(std::size_t h) { return {std::min<std::size_t>(3, h), 1, 3, 1, 0, 0}; }

std::size_t scaled(std::size_t channels, double scale) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(channels * scale)));
}

std::string stage_name(std::size_t s) { return "conv" + std::to_string(s + 2) + "_x"; }

}  // namespace

std::string_view rnn_cell_name(RnnCell cell) { return cell == RnnCell::kGru ? "gru" : "tanh"; }

RnnCell parse_rnn_cell(std::string_view name) {
  if (name == "gru") return RnnCell::kGru;
  if (name == "tanh" || name == "rnn") return RnnCell::kTanh;
  throw ConfigError("unknown rnn_cell '" + std::string(name) + "' (expected gru or tanh)");
}

FeatureLayer parse_feature_layer(std::string_view name) {
  if (name == "conv") return FeatureLayer::kConv;
  if (name == "fc0") return FeatureLayer::kFc0;
  throw ConfigError("unknown feature layer '" + std::string(name) + "' (expected conv or fc0)");
}

std::string_view feature_layer_name(FeatureLayer layer) {
  return layer == FeatureLayer::kConv ? "conv" : "fc0";
}

EncoderConfig EncoderConfig::full_scale() {
  EncoderConfig c;
  c.input_h = 224;
  c.input_w = 112;
  c.scale = 1.0;
  c.blocks_per_stage = {3, 4, 6, 3};
  c.rnn_hidden_1 = 1024;
  c.rnn_hidden_2 = 512;
  c.fc0_dim = 1024;
  return c;
}

EncoderConfig EncoderConfig::desk() { return EncoderConfig{}; }

std::size_t EncoderConfig::stem_channels() const { return scaled(kStemChannels, scale); }
std::size_t EncoderConfig::stage_width(std::size_t stage) const {
  return scaled(kStageWidths[stage], scale);
}
std::size_t EncoderConfig::stage_channels(std::size_t stage) const {
  return kExpansion * stage_width(stage);
}

void EncoderConfig::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("encoder.scale must be > 0");
  if (blocks_per_stage.size() != 4) {
    throw ConfigError("encoder.blocks_per_stage needs 4 entries, got " +
                      std::to_string(blocks_per_stage.size()));
  }
  for (std::size_t b : blocks_per_stage) {
    if (b == 0) throw ConfigError("encoder.blocks_per_stage entries must be >= 1");
  }
  if (rnn_hidden_1 == 0 || rnn_hidden_2 == 0 || fc0_dim == 0) {
    throw ConfigError("encoder recurrent and fc0 sizes must be >= 1");
  }
  if (input_w < 4 || input_w % 4 != 0) {
    throw ConfigError("encoder.input_w must be a positive multiple of 4, got " +
                      std::to_string(input_w));
  }
  if (input_h == 0) throw ConfigError("encoder.input_h must be >= 1");
  std::size_t h = kStemPool.out_h(kStem.out_h(input_h));
  for (int s = 0; s < 4; ++s) h = kReduceStrided.out_h(h);
  if (final_pool_for(h).out_h(h) != 1) {
    throw ConfigError("encoder.input_h " + std::to_string(input_h) + " leaves height " +
                      std::to_string(h) + " before the final pool; it must collapse to 1");
  }
}

std::vector<LayerShape> trace_shapes(const EncoderConfig& cfg) {
  cfg.validate();
  std::vector<LayerShape> out;
  std::size_t h = kStem.out_h(cfg.input_h), w = kStem.out_w(cfg.input_w);
  out.push_back({"conv_1", h, w, cfg.stem_channels()});
  h = kStemPool.out_h(h);
  w = kStemPool.out_w(w);
  out.push_back({"maxpool_1", h, w, cfg.stem_channels()});
  for (std::size_t s = 0; s < 4; ++s) {
    h = kReduceStrided.out_h(h);
    w = kReduceStrided.out_w(w);
    out.push_back({stage_name(s), h, w, cfg.stage_channels(s)});
  }
  const nk::Conv2dGeometry pool = final_pool_for(h);
  out.push_back({"maxpool_2", pool.out_h(h), pool.out_w(w), cfg.conv_channels()});
  out.push_back({"rnn_1", 1, w, 2 * cfg.rnn_hidden_1});
  out.push_back({"rnn_2", 1, w, 2 * cfg.rnn_hidden_2});
  return out;
}

Encoder::Conv Encoder::make_conv(nk::ParameterStore& params, const std::string& name,
                                 std::size_t in, std::size_t out, nk::Conv2dGeometry g,
                                 nk::Rng& rng) {
  const std::size_t fan_in = g.kernel_h * g.kernel_w * in;
  Conv c;
  c.weight = params.add(name + "/w", {fan_in, out}, nk::Init::kHe, rng, fan_in);
  c.bias = params.add(name + "/b", {out}, nk::Init::kZeros, rng);
  c.geometry = g;
  return c;
}

nk::Tensor Encoder::apply(const Conv& conv, const nk::Tensor& x) {
  return nk::conv2d(x, conv.weight, conv.bias, conv.geometry);
}

Encoder::RecurrentLayer Encoder::make_recurrent(nk::ParameterStore& params,
                                                const std::string& name, std::size_t in,
                                                std::size_t hidden, nk::Rng& rng) const {
  const std::size_t gates = cfg_.rnn_cell == RnnCell::kGru ? 3 : 1;
  auto direction = [&](const std::string& dir) {
    Direction d;
    d.input = nk::Linear::create(params, name + "/" + dir + "/input", in, gates * hidden,
                                 nk::Init::kXavier, rng);
    d.hidden = params.add(name + "/" + dir + "/hidden", {hidden, gates * hidden},
                          nk::Init::kXavier, rng, hidden, gates * hidden);
    return d;
  };
  RecurrentLayer layer;
  layer.forward = direction("fwd");
  layer.backward = direction("bwd");
  return layer;
}

Encoder::Encoder(const EncoderConfig& cfg, std::size_t identities, std::size_t ctc_classes,
                 nk::ParameterStore& params, nk::Rng& rng)
    : cfg_(cfg) {
  cfg_.validate();
  if (identities == 0) throw ConfigError("identity head needs at least one identity");
  if (ctc_classes < 2) throw ConfigError("ctc projection needs at least blank + one label");

  stem_ = make_conv(params, "encoder/conv_1", 3, cfg_.stem_channels(), kStem, rng);
  std::size_t in = cfg_.stem_channels();
  for (std::size_t s = 0; s < 4; ++s) {
    const std::size_t width = cfg_.stage_width(s), out = cfg_.stage_channels(s);
    for (std::size_t b = 0; b < cfg_.blocks_per_stage[s]; ++b) {
      const std::string name = "encoder/" + stage_name(s) + "/block" + std::to_string(b);
      const bool first = b == 0;
      Bottleneck blk;
      blk.reduce = make_conv(params, name + "/reduce", in, width,
                             first ? kReduceStrided : kPointwise, rng);
      blk.spatial = make_conv(params, name + "/spatial", width, width, kSpatial, rng);
      blk.expand = make_conv(params, name + "/expand", width, out, kPointwise, rng);
      blk.has_projection = first;
      if (first) {
        blk.projection = make_conv(params, name + "/projection", in, out, kReduceStrided, rng);
      }
      blocks_.push_back(std::move(blk));
      in = out;
    }
  }
  std::size_t h = kStemPool.out_h(kStem.out_h(cfg_.input_h));
  for (int s = 0; s < 4; ++s) h = kReduceStrided.out_h(h);
  final_pool_ = final_pool_for(h);

  rnn_.push_back(make_recurrent(params, "encoder/rnn_1", in, cfg_.rnn_hidden_1, rng));
  rnn_.push_back(
      make_recurrent(params, "encoder/rnn_2", 2 * cfg_.rnn_hidden_1, cfg_.rnn_hidden_2, rng));

  fc0_ = nk::Linear::create(params, "id/fc0", cfg_.conv_feature_dim(), cfg_.fc0_dim,
                            nk::Init::kHe, rng);
  fc1_ = nk::Linear::create(params, "id/fc1", cfg_.fc0_dim, identities, nk::Init::kXavier, rng);
  ctc_ = nk::Linear::create(params, "ctc/proj", cfg_.feature_dim(), ctc_classes,
                            nk::Init::kXavier, rng);
}

nk::Tensor Encoder::trunk(const nk::Tensor& image) const {
  const nk::Shape want{cfg_.input_h, cfg_.input_w, 3};
  if (image.shape() != want) {
    throw ConfigError("encoder expects an image of shape " + nk::shape_string(want) + ", got " +
                      nk::shape_string(image.shape()));
  }
  nk::Tensor x = nk::max_pool2d(nk::relu(apply(stem_, image)), kStemPool);
  for (const Bottleneck& blk : blocks_) {
    nk::Tensor branch = nk::relu(apply(blk.reduce, x));
    branch = nk::relu(apply(blk.spatial, branch));
    branch = apply(blk.expand, branch);
    const nk::Tensor shortcut = blk.has_projection ? apply(blk.projection, x) : x;
    x = nk::relu(nk::add(branch, shortcut));
  }
  x = nk::max_pool2d(x, final_pool_);
  // [1 x T x C] -> [T x C]: channels-last rows are already width-major.
  return nk::reshape(x, {x.dim(1), x.dim(2)});
}

nk::Tensor Encoder::run_direction(const Direction& dir, const nk::Tensor& seq,
                                  bool reverse) const {
  const std::size_t steps = seq.dim(0);
  const std::size_t hsize = dir.hidden.dim(0);
  const nk::Tensor projected = dir.input(seq);  // [T x gates*H]
  nk::Tensor h = nk::Tensor::zeros({1, hsize});
  std::vector<nk::Tensor> outputs(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const std::size_t t = reverse ? steps - 1 - i : i;
    const nk::Tensor xg = nk::slice(projected, 0, t, t + 1);
    const nk::Tensor hg = nk::matmul(h, dir.hidden);
    if (cfg_.rnn_cell == RnnCell::kTanh) {
      h = nk::tanh(nk::add(xg, hg));
    } else {
      auto gate = [&](const nk::Tensor& g, std::size_t k) {
        return nk::slice(g, 1, k * hsize, (k + 1) * hsize);
      };
      const nk::Tensor update = nk::sigmoid(nk::add(gate(xg, 0), gate(hg, 0)));
      const nk::Tensor reset = nk::sigmoid(nk::add(gate(xg, 1), gate(hg, 1)));
      const nk::Tensor cand = nk::tanh(nk::add(gate(xg, 2), nk::mul(reset, gate(hg, 2))));
      // h' = (1 - z) n + z h
      h = nk::add(cand, nk::mul(update, nk::sub(h, cand)));
    }
    outputs[t] = h;
  }
  return nk::concat(outputs, 0);
}

nk::Tensor Encoder::run_layer(const RecurrentLayer& layer, const nk::Tensor& seq) const {
  return nk::concat({run_direction(layer.forward, seq, false),
                     run_direction(layer.backward, seq, true)},
                    1);
}

Encoded Encoder::encode(const nk::Tensor& image) const {
  Encoded out;
  out.conv_seq = trunk(image);
  nk::Tensor x = out.conv_seq;
  for (const RecurrentLayer& layer : rnn_) x = run_layer(layer, x);
  out.x = x;
  return out;
}

nk::Tensor Encoder::fc0(const nk::Tensor& conv_seq) const {
  if (conv_seq.size() != cfg_.conv_feature_dim()) {
    throw ConfigError("identity head expects " + std::to_string(cfg_.conv_feature_dim()) +
                      " conv features, got " + std::to_string(conv_seq.size()));
  }
  return fc0_(nk::reshape(conv_seq, {1, conv_seq.size()}));
}

nk::Tensor Encoder::id_logits(const nk::Tensor& conv_seq) const {
  const nk::Tensor z = fc1_(nk::relu(fc0(conv_seq)));
  return nk::reshape(z, {z.size()});
}

nk::Tensor Encoder::ctc_logits(const nk::Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != ctc_.in_features()) {
    throw ConfigError("ctc projection expects [T x " + std::to_string(ctc_.in_features()) +
                      "], got " + nk::shape_string(x.shape()));
  }
  return ctc_(x);
}

std::vector<double> Encoder::reid_features(const Encoded& enc, FeatureLayer layer) const {
  const nk::Tensor f = layer == FeatureLayer::kConv ? enc.conv_seq : fc0(enc.conv_seq);
  return l2_normalize({f.values().begin(), f.values().end()});
}

nk::Tensor id_loss(const nk::Tensor& logits, std::size_t identity) {
  return nk::cross_entropy(logits, identity);
}

std::vector<double> l2_normalize(std::vector<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) return v;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace seqattr::encoder
