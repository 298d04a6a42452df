// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "seqattr/numkit/random.hpp"
#include "seqattr/numkit/tensor.hpp"

namespace seqattr::nk {

enum class Init {
  kZeros,
  kOnes,
  kHe,      // normal, std sqrt(2 / fan_in)
  kXavier,  // uniform, limit sqrt(6 / (fan_in + fan_out))
  kUniformFanIn,  // uniform, limit 1 / sqrt(fan_in)
};

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

// Ordered, named collection of trainable leaves. Registration order is the
// iteration order everywhere (optimizer, checkpoint), which keeps updates and
// files deterministic.
class ParameterStore {
 public:
  Tensor add(const std::string& name, Shape shape, Init init, Rng& rng,
             std::size_t fan_in = 0, std::size_t fan_out = 0);

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<NamedParameter>& entries() const { return entries_; }
  std::vector<NamedParameter>& entries() { return entries_; }
  std::size_t scalar_count() const;

  // Allocates and zeroes every gradient buffer.
  void zero_grad();
  // Squared L2 norm of the gradients of parameters whose name starts with
  // `prefix`.
  double grad_norm_sq(const std::string& prefix = "") const;

 private:
  std::vector<NamedParameter> entries_;
};

}  // namespace seqattr::nk
