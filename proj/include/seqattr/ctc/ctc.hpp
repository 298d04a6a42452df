// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "seqattr/numkit/tensor.hpp"

namespace seqattr::ctc {

// T x C row-stochastic matrix, C = K + 1, column 0 is the blank.
class PosteriorMatrix {
 public:
  // ContractError unless every row sums to 1 within 1e-9 with entries in [0, 1].
  PosteriorMatrix(std::size_t steps, std::size_t classes, std::vector<double> values);
  // Row-wise softmax of a T x C logit tensor.
  static PosteriorMatrix from_logits(const nk::Tensor& logits);

  std::size_t steps() const { return steps_; }
  std::size_t classes() const { return classes_; }
  double operator()(std::size_t t, std::size_t c) const { return values_[t * classes_ + c]; }
  std::span<const double> row(std::size_t t) const {
    return {values_.data() + t * classes_, classes_};
  }

 private:
  std::size_t steps_;
  std::size_t classes_;
  std::vector<double> values_;
};

// Merge repeats, then drop blanks.
std::vector<int> collapse(std::span<const int> alignment);

// Minimum T for which some alignment collapses to y.
std::size_t required_steps(std::span<const int> y);

// ln P(y | x) by the log-space forward recursion. InfeasibleError when
// T < required_steps(y); IndexError for labels outside 1..C-1. May return
// -inf when every feasible path has a zero factor.
double ctc_log_prob(const PosteriorMatrix& q, std::span<const int> y);

// -ln P(y | x) from raw logits, differentiable through the recursion.
nk::Tensor ctc_loss(const nk::Tensor& logits, std::span<const int> y);

// Reference by enumerating all C^T alignments. ContractError if C^T > 1e7.
double ctc_brute_force(const PosteriorMatrix& q, std::span<const int> y);
// Probability mass of every collapsed output, by the same enumeration.
std::map<std::vector<int>, double> ctc_brute_force_distribution(const PosteriorMatrix& q);

// Per-row argmax (ties to the smaller index), then collapse.
std::vector<int> ctc_greedy_decode(const PosteriorMatrix& q);
std::vector<int> ctc_greedy_decode(const nk::Tensor& logits);

}  // namespace seqattr::ctc
