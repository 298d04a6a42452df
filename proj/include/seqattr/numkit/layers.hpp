// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "seqattr/numkit/ops.hpp"
#include "seqattr/numkit/parameters.hpp"

namespace seqattr::nk {

// y = x W + b for x of shape [rows x in].
struct Linear {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]

  static Linear create(ParameterStore& params, const std::string& name, std::size_t in,
                       std::size_t out, Init init, Rng& rng);
  Tensor operator()(const Tensor& x) const { return add_row(matmul(x, weight), bias); }
  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
};

struct LayerNorm {
  Tensor gain;
  Tensor shift;

  static LayerNorm create(ParameterStore& params, const std::string& name, std::size_t width,
                          Rng& rng);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gain, shift); }
};

}  // namespace seqattr::nk
