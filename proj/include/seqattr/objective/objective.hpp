// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "seqattr/numkit/tensor.hpp"

namespace seqattr::objective {

struct JointLossConfig {
  double lambda = 4.0;  // weight on the identity loss, >= 0

  // ConfigError when lambda is negative or not finite.
  void validate() const;
};

// lambda * l_id + l_ctc + l_at over scalar tensors. Each input is expected to
// be a batch mean already. A non-finite component raises NumericError naming
// the offending stream (id, ctc or attribute).
nk::Tensor joint_loss(const nk::Tensor& l_id, const nk::Tensor& l_ctc, const nk::Tensor& l_at,
                      const JointLossConfig& cfg);

}  // namespace seqattr::objective
