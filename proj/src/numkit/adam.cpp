// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/numkit/adam.hpp"

#include <cmath>

#include "seqattr/errors.hpp"

namespace seqattr::nk {

void adam_step(ParameterStore& params, AdamState& state) {
  auto& entries = params.entries();
  for (const auto& e : entries) {
    if (!e.tensor.has_grad()) {
      throw ContractError("adam_step: parameter " + e.name + " has no gradient");
    }
  }
  if (state.first_moment.empty()) {
    for (const auto& e : entries) {
      state.first_moment.emplace_back(e.tensor.size(), 0.0);
      state.second_moment.emplace_back(e.tensor.size(), 0.0);
    }
  }
  if (state.first_moment.size() != entries.size()) {
    throw ContractError("adam_step: optimizer state tracks " +
                        std::to_string(state.first_moment.size()) + " parameters, store has " +
                        std::to_string(entries.size()));
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t p = 0; p < entries.size(); ++p) {
    Tensor& param = entries[p].tensor;
    auto values = param.mutable_values();
    auto grad = param.mutable_grad();
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    if (m.size() != values.size()) {
      throw ContractError("adam_step: moment shape mismatch for " + entries[p].name);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
      grad[i] = 0.0;
    }
  }
}

}  // namespace seqattr::nk
