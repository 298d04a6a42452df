// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "seqattr/codec/mapping_table.hpp"
#include "seqattr/numkit/layers.hpp"

namespace seqattr::decoder {

// Additive score for disallowed attention or output positions. Finite so the
// tape invariant holds; exp(kMasked - x) is exactly 0 for realistic x.
inline constexpr double kMasked = -1e30;

struct TransformerConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t d_model = 64;
  std::size_t ffn_dim = 128;
  std::size_t max_len = 8;
  std::size_t beam_width = 3;

  static TransformerConfig full_scale();
  // ConfigError when d_model % heads != 0 or any size is zero.
  void validate() const;
  bool operator==(const TransformerConfig&) const = default;
};

struct AttentionResult {
  nk::Tensor output;   // [n x d_v]
  nk::Tensor weights;  // [n x m], rows sum to 1
};

// softmax(q k^T / sqrt(d_k) + mask) v. `mask` is [n x m] of 0 / kMasked or
// undefined for no mask.
AttentionResult scaled_dot_attention(const nk::Tensor& q, const nk::Tensor& k,
                                     const nk::Tensor& v, const nk::Tensor& mask = {});
// [n x n], kMasked strictly above the diagonal.
nk::Tensor causal_mask(std::size_t n);
// Sinusoidal table [n x d].
nk::Tensor positional_encoding(std::size_t n, std::size_t d);

struct Hypothesis {
  std::vector<int> labels;  // emitted symbols, EOS excluded
  double log_prob = 0.0;
  bool finished = false;
};

// Collects every attention weight matrix produced during a forward pass.
struct AttentionTrace {
  std::vector<nk::Tensor> weights;
};

class Decoder {
 public:
  // Vocabulary is pad/EOS 0, labels 1..K, start at row K+1.
  Decoder(const TransformerConfig& cfg, std::size_t feature_dim, const codec::MappingTable& table,
          nk::ParameterStore& params, nk::Rng& rng);

  const TransformerConfig& config() const { return cfg_; }
  std::size_t vocab_size() const { return vocab_; }

  // Adapter plus self-attention stack over the encoded sequence x [T x D].
  nk::Tensor encode_memory(const nk::Tensor& x, AttentionTrace* trace = nullptr) const;
  // Logits [L x V] for decoder input symbols of length L <= max_len. The
  // start column is pinned to kMasked.
  nk::Tensor forward(const nk::Tensor& memory, std::span<const int> input_symbols,
                     AttentionTrace* trace = nullptr) const;
  // LengthError when the input exceeds max_len.
  nk::Tensor decode_teacher_forced(const nk::Tensor& x, std::span<const int> decoder_input) const;

  // Width-limited search over total log-probability. The greedy lineage is
  // always a candidate, so the result never scores below width 1.
  Hypothesis beam_search(const nk::Tensor& memory, std::size_t width) const;
  Hypothesis greedy(const nk::Tensor& memory) const;

 private:
  struct Attention {
    nk::Linear q, k, v, o;
  };
  struct EncoderLayer {
    Attention self;
    nk::LayerNorm norm1, norm2;
    nk::Linear ffn1, ffn2;
  };
  struct DecoderLayer {
    Attention self, cross;
    nk::LayerNorm norm1, norm2, norm3;
    nk::Linear ffn1, ffn2;
  };

  Attention make_attention(nk::ParameterStore& params, const std::string& name,
                           nk::Rng& rng) const;
  nk::Tensor attend(const Attention& a, const nk::Tensor& query, const nk::Tensor& source,
                    const nk::Tensor& mask, AttentionTrace* trace) const;
  nk::Tensor feed_forward(const nk::Linear& l1, const nk::Linear& l2, const nk::Tensor& x) const;
  std::vector<double> next_log_probs(const nk::Tensor& memory,
                                     const std::vector<int>& labels) const;

  TransformerConfig cfg_;
  std::size_t vocab_ = 0;
  int start_symbol_ = 0;
  std::size_t labels_ = 0;
  bool has_adapter_ = false;
  nk::Linear adapter_;
  nk::Tensor embedding_;  // [V x d_model]
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  nk::Linear output_;
  nk::Tensor output_mask_;  // [V], kMasked at the start row
};

// Mean cross-entropy over every position, pad included. target values are
// pad 0 or labels 1..K.
nk::Tensor attribute_loss(const nk::Tensor& logits, std::span<const int> target);

}  // namespace seqattr::decoder
