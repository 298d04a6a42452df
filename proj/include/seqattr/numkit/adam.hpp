// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "seqattr/numkit/parameters.hpp"

namespace seqattr::nk {

struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  // Aligned with ParameterStore::entries(); sized on the first update.
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One bias-corrected Adam update of every parameter, then zeroes the
// gradients. Throws ContractError naming the first parameter without a
// gradient buffer.
void adam_step(ParameterStore& params, AdamState& state);

}  // namespace seqattr::nk
