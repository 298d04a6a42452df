// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/numkit/layers.hpp"

namespace seqattr::nk {

Linear Linear::create(ParameterStore& params, const std::string& name, std::size_t in,
                      std::size_t out, Init init, Rng& rng) {
  Linear l;
  l.weight = params.add(name + "/w", {in, out}, init, rng, in, out);
  l.bias = params.add(name + "/b", {out}, Init::kZeros, rng);
  return l;
}

LayerNorm LayerNorm::create(ParameterStore& params, const std::string& name, std::size_t width,
                            Rng& rng) {
  LayerNorm n;
  n.gain = params.add(name + "/gain", {width}, Init::kOnes, rng);
  n.shift = params.add(name + "/shift", {width}, Init::kZeros, rng);
  return n;
}

}  // namespace seqattr::nk
