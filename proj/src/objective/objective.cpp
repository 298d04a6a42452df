// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/objective/objective.hpp"

#include <cmath>
#include <sstream>

#include "seqattr/errors.hpp"
#include "seqattr/numkit/ops.hpp"

namespace seqattr::objective {

void JointLossConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    std::ostringstream msg;
    msg << "lambda must be finite and non-negative, got " << lambda;
    throw ConfigError(msg.str());
  }
}

namespace {

void check_stream(const nk::Tensor& loss, const char* stream) {
  if (!loss.defined() || loss.size() != 1) {
    throw DimensionError(std::string(stream) + " loss must be a scalar tensor");
  }
  const double v = loss.item();
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "non-finite " << stream << " loss (" << v << ") in training step";
    throw NumericError(msg.str());
  }
}

}  // namespace

nk::Tensor joint_loss(const nk::Tensor& l_id, const nk::Tensor& l_ctc, const nk::Tensor& l_at,
                      const JointLossConfig& cfg) {
  cfg.validate();
  check_stream(l_id, "id");
  check_stream(l_ctc, "ctc");
  check_stream(l_at, "attribute");
  return nk::add(nk::add(nk::scale(l_id, cfg.lambda), l_ctc), l_at);
}

}  // namespace seqattr::objective
