// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/decoder/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "seqattr/errors.hpp"

namespace seqattr::decoder {
namespace {

// Better first: higher log-probability, then shorter, then lexicographically
// smaller label sequence.
bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  if (a.labels.size() != b.labels.size()) return a.labels.size() < b.labels.size();
  return a.labels < b.labels;
}

}  // namespace

TransformerConfig TransformerConfig::full_scale() {
  TransformerConfig c;
  c.layers = 6;
  c.heads = 8;
  c.d_model = 1024;
  c.ffn_dim = 4096;
  c.max_len = 28;
  return c;
}

void TransformerConfig::validate() const {
  if (layers == 0 || heads == 0 || d_model == 0 || ffn_dim == 0 || beam_width == 0) {
    throw ConfigError("decoder layers, heads, d_model, ffn_dim and beam_width must be >= 1");
  }
  if (d_model % heads != 0) {
    throw ConfigError("decoder.d_model " + std::to_string(d_model) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (max_len < 2) throw ConfigError("decoder.max_len must be >= 2");
}

AttentionResult scaled_dot_attention(const nk::Tensor& q, const nk::Tensor& k,
                                     const nk::Tensor& v, const nk::Tensor& mask) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) ||
      k.dim(0) != v.dim(0)) {
    throw DimensionError("attention: incompatible q " + nk::shape_string(q.shape()) + ", k " +
                         nk::shape_string(k.shape()) + ", v " + nk::shape_string(v.shape()));
  }
  nk::Tensor scores =
      nk::scale(nk::matmul(q, nk::transpose(k)), 1.0 / std::sqrt(static_cast<double>(q.dim(1))));
  if (mask.defined()) {
    if (mask.shape() != scores.shape()) {
      throw DimensionError("attention: mask " + nk::shape_string(mask.shape()) +
                           " does not match scores " + nk::shape_string(scores.shape()));
    }
    scores = nk::add(scores, mask);
  }
  AttentionResult r;
  r.weights = nk::softmax(scores, 1);
  r.output = nk::matmul(r.weights, v);
  return r;
}

nk::Tensor causal_mask(std::size_t n) {
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m[i * n + j] = kMasked;
  return nk::Tensor::from({n, n}, std::move(m));
}

nk::Tensor positional_encoding(std::size_t n, std::size_t d) {
  std::vector<double> pe(n * d);
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(d));
      const double angle = static_cast<double>(pos) * rate;
      pe[pos * d + i] = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return nk::Tensor::from({n, d}, std::move(pe));
}

Decoder::Attention Decoder::make_attention(nk::ParameterStore& params, const std::string& name,
                                           nk::Rng& rng) const {
  const std::size_t d = cfg_.d_model;
  Attention a;
  a.q = nk::Linear::create(params, name + "/q", d, d, nk::Init::kXavier, rng);
  a.k = nk::Linear::create(params, name + "/k", d, d, nk::Init::kXavier, rng);
  a.v = nk::Linear::create(params, name + "/v", d, d, nk::Init::kXavier, rng);
  a.o = nk::Linear::create(params, name + "/o", d, d, nk::Init::kXavier, rng);
  return a;
}

Decoder::Decoder(const TransformerConfig& cfg, std::size_t feature_dim,
                 const codec::MappingTable& table, nk::ParameterStore& params, nk::Rng& rng)
    : cfg_(cfg),
      vocab_(table.vocab_size()),
      start_symbol_(table.start_symbol()),
      labels_(table.label_count()) {
  cfg_.validate();
  const std::size_t d = cfg_.d_model;
  has_adapter_ = feature_dim != d;
  if (has_adapter_) {
    adapter_ = nk::Linear::create(params, "decoder/adapter", feature_dim, d, nk::Init::kXavier, rng);
  }
  embedding_ = params.add("decoder/embedding", {vocab_, d}, nk::Init::kXavier, rng, vocab_, d);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string name = "decoder/memory" + std::to_string(l);
    EncoderLayer layer;
    layer.self = make_attention(params, name + "/self", rng);
    layer.norm1 = nk::LayerNorm::create(params, name + "/norm1", d, rng);
    layer.ffn1 = nk::Linear::create(params, name + "/ffn1", d, cfg_.ffn_dim, nk::Init::kHe, rng);
    layer.ffn2 = nk::Linear::create(params, name + "/ffn2", cfg_.ffn_dim, d, nk::Init::kXavier, rng);
    layer.norm2 = nk::LayerNorm::create(params, name + "/norm2", d, rng);
    encoder_.push_back(std::move(layer));
  }
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string name = "decoder/layer" + std::to_string(l);
    DecoderLayer layer;
    layer.self = make_attention(params, name + "/self", rng);
    layer.norm1 = nk::LayerNorm::create(params, name + "/norm1", d, rng);
    layer.cross = make_attention(params, name + "/cross", rng);
    layer.norm2 = nk::LayerNorm::create(params, name + "/norm2", d, rng);
    layer.ffn1 = nk::Linear::create(params, name + "/ffn1", d, cfg_.ffn_dim, nk::Init::kHe, rng);
    layer.ffn2 = nk::Linear::create(params, name + "/ffn2", cfg_.ffn_dim, d, nk::Init::kXavier, rng);
    layer.norm3 = nk::LayerNorm::create(params, name + "/norm3", d, rng);
    decoder_.push_back(std::move(layer));
  }
  output_ = nk::Linear::create(params, "decoder/output", d, vocab_, nk::Init::kXavier, rng);
  std::vector<double> mask(vocab_, 0.0);
  mask[table.start_index()] = kMasked;
  output_mask_ = nk::Tensor::from({vocab_}, std::move(mask));
}

nk::Tensor Decoder::attend(const Attention& a, const nk::Tensor& query, const nk::Tensor& source,
                           const nk::Tensor& mask, AttentionTrace* trace) const {
  const nk::Tensor q = a.q(query), k = a.k(source), v = a.v(source);
  const std::size_t dh = cfg_.d_model / cfg_.heads;
  std::vector<nk::Tensor> heads;
  heads.reserve(cfg_.heads);
  for (std::size_t h = 0; h < cfg_.heads; ++h) {
    AttentionResult r = scaled_dot_attention(nk::slice(q, 1, h * dh, (h + 1) * dh),
                                             nk::slice(k, 1, h * dh, (h + 1) * dh),
                                             nk::slice(v, 1, h * dh, (h + 1) * dh), mask);
    if (trace) trace->weights.push_back(r.weights);
    heads.push_back(std::move(r.output));
  }
  return a.o(cfg_.heads == 1 ? heads[0] : nk::concat(heads, 1));
}

nk::Tensor Decoder::feed_forward(const nk::Linear& l1, const nk::Linear& l2,
                                 const nk::Tensor& x) const {
  return l2(nk::relu(l1(x)));
}

nk::Tensor Decoder::encode_memory(const nk::Tensor& x, AttentionTrace* trace) const {
  if (x.rank() != 2) throw DimensionError("decoder memory must be [T x D]");
  nk::Tensor h = has_adapter_ ? adapter_(x) : x;
  if (h.dim(1) != cfg_.d_model) {
    throw ConfigError("decoder expects features of width " + std::to_string(cfg_.d_model) +
                      ", got " + std::to_string(h.dim(1)));
  }
  h = nk::add(h, positional_encoding(h.dim(0), cfg_.d_model));
  for (const EncoderLayer& layer : encoder_) {
    h = layer.norm1(nk::add(h, attend(layer.self, h, h, {}, trace)));
    h = layer.norm2(nk::add(h, feed_forward(layer.ffn1, layer.ffn2, h)));
  }
  return h;
}

nk::Tensor Decoder::forward(const nk::Tensor& memory, std::span<const int> input_symbols,
                            AttentionTrace* trace) const {
  const std::size_t n = input_symbols.size();
  if (n == 0 || n > cfg_.max_len) {
    throw LengthError("decoder input of length " + std::to_string(n) + " outside 1.." +
                      std::to_string(cfg_.max_len));
  }
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int s = input_symbols[i];
    if (s == start_symbol_) {
      rows[i] = labels_ + 1;
    } else if (s >= 0 && static_cast<std::size_t>(s) <= labels_) {
      rows[i] = static_cast<std::size_t>(s);
    } else {
      throw IndexError("decoder input symbol " + std::to_string(s) + " at position " +
                       std::to_string(i) + " is outside the vocabulary");
    }
  }
  const double emb_scale = std::sqrt(static_cast<double>(cfg_.d_model));
  nk::Tensor h = nk::add(nk::scale(nk::gather_rows(embedding_, rows), emb_scale),
                         positional_encoding(n, cfg_.d_model));
  const nk::Tensor mask = causal_mask(n);
  for (const DecoderLayer& layer : decoder_) {
    h = layer.norm1(nk::add(h, attend(layer.self, h, h, mask, trace)));
    h = layer.norm2(nk::add(h, attend(layer.cross, h, memory, {}, trace)));
    h = layer.norm3(nk::add(h, feed_forward(layer.ffn1, layer.ffn2, h)));
  }
  return nk::add_row(output_(h), output_mask_);
}

nk::Tensor Decoder::decode_teacher_forced(const nk::Tensor& x,
                                          std::span<const int> decoder_input) const {
  if (decoder_input.size() > cfg_.max_len) {
    throw LengthError("decoder input of length " + std::to_string(decoder_input.size()) +
                      " exceeds max_len " + std::to_string(cfg_.max_len));
  }
  return forward(encode_memory(x), decoder_input);
}

std::vector<double> Decoder::next_log_probs(const nk::Tensor& memory,
                                            const std::vector<int>& labels) const {
  std::vector<int> input;
  input.reserve(labels.size() + 1);
  input.push_back(start_symbol_);
  input.insert(input.end(), labels.begin(), labels.end());
  const nk::Tensor logits = forward(memory, input);
  const nk::Tensor last = nk::slice(logits, 0, input.size() - 1, input.size());
  const nk::Tensor lp = nk::log_softmax(last, 1);
  return {lp.values().begin(), lp.values().end()};
}

Hypothesis Decoder::greedy(const nk::Tensor& memory) const {
  Hypothesis h;
  while (h.labels.size() < cfg_.max_len) {
    const auto lp = next_log_probs(memory, h.labels);
    // Start row excluded; ties go to the smaller index.
    const auto best = std::max_element(lp.begin(), lp.begin() + labels_ + 1) - lp.begin();
    h.log_prob += lp[best];
    if (best == 0) break;
    h.labels.push_back(static_cast<int>(best));
  }
  h.finished = true;
  return h;
}

Hypothesis Decoder::beam_search(const nk::Tensor& memory, std::size_t width) const {
  if (width == 0) throw ConfigError("beam width must be >= 1");
  std::vector<Hypothesis> beam{Hypothesis{}};
  while (!std::all_of(beam.begin(), beam.end(), [](const Hypothesis& h) { return h.finished; })) {
    std::vector<Hypothesis> candidates;
    for (const Hypothesis& h : beam) {
      if (h.finished) {
        candidates.push_back(h);
        continue;
      }
      const auto lp = next_log_probs(memory, h.labels);
      for (std::size_t k = 0; k <= labels_; ++k) {
        Hypothesis next = h;
        next.log_prob += lp[k];
        if (k == 0) {
          next.finished = true;
        } else {
          next.labels.push_back(static_cast<int>(k));
          next.finished = next.labels.size() >= cfg_.max_len;
        }
        candidates.push_back(std::move(next));
      }
    }
    const std::size_t keep = std::min(width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                      ranks_before);
    candidates.resize(keep);
    beam = std::move(candidates);
  }
  Hypothesis best = beam.front();
  if (width > 1) {
    const Hypothesis g = greedy(memory);
    if (ranks_before(g, best)) best = g;
  }
  return best;
}

nk::Tensor attribute_loss(const nk::Tensor& logits, std::span<const int> target) {
  if (logits.rank() != 2 || logits.dim(0) != target.size()) {
    throw DimensionError("attribute_loss: logits " + nk::shape_string(logits.shape()) + " vs " +
                         std::to_string(target.size()) + " targets");
  }
  std::vector<std::size_t> t(target.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (target[i] < 0) throw IndexError("attribute_loss: negative target");
    t[i] = static_cast<std::size_t>(target[i]);
  }
  return nk::cross_entropy_rows(logits, t);
}

}  // namespace seqattr::decoder
