// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// Central finite-difference oracle. It only ever evaluates forward values
// (no tape is active while perturbing), so it is independent of every
// backward implementation it is used to check.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "seqattr/numkit/tensor.hpp"

namespace seqattr::testing {

inline constexpr double kFdStep = 1e-6;
// Gradients smaller than this are compared on an absolute scale of this size.
inline constexpr double kFdScaleFloor = 1e-3;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<leaf index>[<element>] analytic=.. numeric=.."
  std::size_t checked = 0;
};

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kFdScaleFloor});
  return std::abs(analytic - numeric) / scale;
}

// `build` recomputes the scalar loss from the current leaf values. Every
// element of every leaf is checked unless `max_per_leaf` caps it, in which
// case elements are sampled with a fixed stride.
inline GradCheckResult check_gradients(std::vector<nk::Tensor> leaves,
                                       const std::function<nk::Tensor()>& build,
                                       std::size_t max_per_leaf = 0,
                                       double step = kFdStep) {
  for (auto& leaf : leaves) {
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }
  {
    nk::Tape tape;
    nk::Tape::Scope scope(tape);
    nk::Tensor loss = build();
    nk::backward(loss, tape);
  }
  GradCheckResult result;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    const std::vector<double> analytic = leaves[l].grad();
    auto values = leaves[l].mutable_values();
    const std::size_t n = values.size();
    const std::size_t stride =
        (max_per_leaf == 0 || n <= max_per_leaf) ? 1 : (n + max_per_leaf - 1) / max_per_leaf;
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = build().item();
      values[i] = saved - step;
      const double down = build().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(analytic[i], numeric);
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst = std::to_string(l) + "[" + std::to_string(i) +
                       "] analytic=" + std::to_string(analytic[i]) +
                       " numeric=" + std::to_string(numeric);
      }
    }
  }
  return result;
}

}  // namespace seqattr::testing
