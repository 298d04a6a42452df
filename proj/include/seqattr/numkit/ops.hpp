// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seqattr/numkit/tensor.hpp"

// Differentiable operations. Each one computes its forward value eagerly and,
// under an active tape, records a backward that accumulates into its inputs.

namespace seqattr::nk {

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// alpha * x + beta
Tensor affine(const Tensor& x, double alpha, double beta = 0.0);
inline Tensor scale(const Tensor& x, double alpha) { return affine(x, alpha); }

// a[m x n] + row[n] broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& row);

Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis);
// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// exp(v_i - max) / sum_j exp(v_j - max) along `axis`.
Tensor softmax(const Tensor& v, std::size_t axis);
Tensor log_softmax(const Tensor& v, std::size_t axis);

// -log softmax(logits)[target] for logits of shape [C].
Tensor cross_entropy(const Tensor& logits, std::size_t target);
// Mean over rows of cross_entropy(logits[r], targets[r]); logits [n x C].
Tensor cross_entropy_rows(const Tensor& logits, std::span<const std::size_t> targets);

// Row-wise normalisation of x [m x n] with learned gain and bias of shape [n].
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

// table[V x d] -> [indices.size() x d]
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices);
// x[m x n] -> [m x indices.size()]
Tensor gather_cols(const Tensor& x, std::span<const std::size_t> indices);

struct Conv2dGeometry {
  std::size_t kernel_h = 1, kernel_w = 1;
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t pad_h = 0, pad_w = 0;

  std::size_t out_h(std::size_t h) const;
  std::size_t out_w(std::size_t w) const;
};

// x [H x W x C] (channels last), weight [kernel_h*kernel_w*C x C_out],
// bias [C_out] -> [H_out x W_out x C_out]. Zero padding.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv2dGeometry& g);

// Max over each window; padded cells never win. x [H x W x C].
Tensor max_pool2d(const Tensor& x, const Conv2dGeometry& g);

}  // namespace seqattr::nk
