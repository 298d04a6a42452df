// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/numkit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "seqattr/errors.hpp"
#include "seqattr/simd/kernels.hpp"

namespace seqattr::nk {
namespace {

const simd::KernelTable& kern() { return simd::active(); }

// Gradient buffer of input `i`, or nullptr when that input needs none.
double* input_grad(Node& self, std::size_t i) {
  Node& in = *self.inputs[i];
  return in.requires_grad ? in.ensure_grad().data() : nullptr;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

void require_rank(const char* op, const Tensor& x, std::size_t rank) {
  if (x.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got " + shape_string(x.shape()));
  }
}

std::vector<double> transposed(const double* src, std::size_t rows, std::size_t cols) {
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  return out;
}

struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> v(a.size());
  kern().add(a.values().data(), b.values().data(), v.data(), v.size());
  return make_result("add", a.shape(), std::move(v), {a, b}, [](Node& self) {
    const std::size_t n = self.value.size();
    for (std::size_t i = 0; i < 2; ++i)
      if (double* g = input_grad(self, i)) kern().axpy(1.0, self.grad.data(), g, n);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] - b[i];
  return make_result("sub", a.shape(), std::move(v), {a, b}, [](Node& self) {
    const std::size_t n = self.value.size();
    if (double* g = input_grad(self, 0)) kern().axpy(1.0, self.grad.data(), g, n);
    if (double* g = input_grad(self, 1)) kern().axpy(-1.0, self.grad.data(), g, n);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> v(a.size());
  kern().mul(a.values().data(), b.values().data(), v.data(), v.size());
  return make_result("mul", a.shape(), std::move(v), {a, b}, [](Node& self) {
    const std::size_t n = self.value.size();
    const Node& a = *self.inputs[0];
    const Node& b = *self.inputs[1];
    // a and b may be the same node; both contributions land in one buffer.
    double* ga = input_grad(self, 0);
    double* gb = input_grad(self, 1);
    if (ga) kern().mul_acc(self.grad.data(), b.value.data(), ga, n);
    if (gb) kern().mul_acc(self.grad.data(), a.value.data(), gb, n);
  });
}

Tensor affine(const Tensor& x, double alpha, double beta) {
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = alpha * x[i] + beta;
  return make_result("affine", x.shape(), std::move(v), {x}, [alpha](Node& self) {
    if (double* g = input_grad(self, 0))
      kern().axpy(alpha, self.grad.data(), g, self.value.size());
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  require_rank("add_row", a, 2);
  if (row.size() != a.dim(1)) {
    throw DimensionError("add_row: row " + shape_string(row.shape()) +
                         " does not match " + shape_string(a.shape()));
  }
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> v(a.size());
  for (std::size_t r = 0; r < m; ++r)
    kern().add(a.values().data() + r * n, row.values().data(), v.data() + r * n, n);
  return make_result("add_row", a.shape(), std::move(v), {a, row}, [m, n](Node& self) {
    if (double* g = input_grad(self, 0)) kern().axpy(1.0, self.grad.data(), g, m * n);
    if (double* g = input_grad(self, 1))
      for (std::size_t r = 0; r < m; ++r) kern().axpy(1.0, self.grad.data() + r * n, g, n);
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] > 0.0 ? x[i] : 0.0;
  return make_result("relu", x.shape(), std::move(v), {x}, [](Node& self) {
    double* g = input_grad(self, 0);
    if (!g) return;
    const auto& in = self.inputs[0]->value;
    for (std::size_t i = 0; i < in.size(); ++i)
      if (in[i] > 0.0) g[i] += self.grad[i];
  });
}

Tensor tanh(const Tensor& x) {
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(x[i]);
  return make_result("tanh", x.shape(), std::move(v), {x}, [](Node& self) {
    double* g = input_grad(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < self.value.size(); ++i)
      g[i] += self.grad[i] * (1.0 - self.value[i] * self.value[i]);
  });
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    // Branch keeps exp() from overflowing for large |x|.
    v[i] = x[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-x[i]))
                       : std::exp(x[i]) / (1.0 + std::exp(x[i]));
  }
  return make_result("sigmoid", x.shape(), std::move(v), {x}, [](Node& self) {
    double* g = input_grad(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < self.value.size(); ++i)
      g[i] += self.grad[i] * self.value[i] * (1.0 - self.value[i]);
  });
}

Tensor exp(const Tensor& x) {
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(x[i]);
  return make_result("exp", x.shape(), std::move(v), {x}, [](Node& self) {
    if (double* g = input_grad(self, 0))
      kern().mul_acc(self.grad.data(), self.value.data(), g, self.value.size());
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> v(m * n);
  kern().gemm(m, n, k, a.values().data(), b.values().data(), v.data(), false);
  return make_result("matmul", {m, n}, std::move(v), {a, b}, [m, k, n](Node& self) {
    const Node& a = *self.inputs[0];
    const Node& b = *self.inputs[1];
    double* ga = input_grad(self, 0);
    double* gb = input_grad(self, 1);
    if (ga) {
      const auto bt = transposed(b.value.data(), k, n);  // [n x k]
      kern().gemm(m, k, n, self.grad.data(), bt.data(), ga, true);
    }
    if (gb) {
      const auto at = transposed(a.value.data(), m, k);  // [k x m]
      kern().gemm(k, n, m, at.data(), self.grad.data(), gb, true);
    }
  });
}

Tensor transpose(const Tensor& x) {
  require_rank("transpose", x, 2);
  const std::size_t m = x.dim(0), n = x.dim(1);
  return make_result("transpose", {n, m}, transposed(x.values().data(), m, n), {x},
                     [m, n](Node& self) {
                       double* g = input_grad(self, 0);
                       if (!g) return;
                       for (std::size_t r = 0; r < n; ++r)
                         for (std::size_t c = 0; c < m; ++c)
                           g[c * n + r] += self.grad[r * m + c];
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (element_count(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " +
                         shape_string(shape));
  }
  std::vector<double> v(x.values().begin(), x.values().end());
  return make_result("reshape", std::move(shape), std::move(v), {x}, [](Node& self) {
    if (double* g = input_grad(self, 0))
      kern().axpy(1.0, self.grad.data(), g, self.value.size());
  });
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  Shape out_shape = parts[0].shape();
  const AxisSplit first = split_axis(out_shape, axis);
  std::vector<std::size_t> lens;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    Shape s = p.shape();
    if (s.size() != out_shape.size()) {
      throw DimensionError("concat: rank mismatch " + shape_string(s) + " vs " +
                           shape_string(out_shape));
    }
    const std::size_t len = s[axis];
    s[axis] = out_shape[axis];
    if (s != out_shape) {
      throw DimensionError("concat: shape mismatch " + shape_string(p.shape()) +
                           " vs " + shape_string(parts[0].shape()));
    }
    lens.push_back(len);
    total += len;
  }
  out_shape[axis] = total;
  const std::size_t outer = first.outer, inner = first.inner;
  std::vector<double> v(element_count(out_shape));
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const std::size_t block = lens[p] * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(parts[p].values().data() + o * block, block,
                  v.data() + o * total * inner + offset);
    }
    offset += block;
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_result("concat", out_shape, std::move(v), std::move(inputs),
                     [lens, outer, inner, total](Node& self) {
                       std::size_t offset = 0;
                       for (std::size_t p = 0; p < lens.size(); ++p) {
                         const std::size_t block = lens[p] * inner;
                         if (double* g = input_grad(self, p)) {
                           for (std::size_t o = 0; o < outer; ++o)
                             kern().axpy(1.0, self.grad.data() + o * total * inner + offset,
                                         g + o * block, block);
                         }
                         offset += block;
                       }
                     });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const AxisSplit s = split_axis(x.shape(), axis);
  if (begin >= end || end > s.len) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") invalid for " + shape_string(x.shape()));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t block = (end - begin) * s.inner;
  std::vector<double> v(s.outer * block);
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(x.values().data() + (o * s.len + begin) * s.inner, block,
                v.data() + o * block);
  }
  return make_result("slice", std::move(out_shape), std::move(v), {x},
                     [s, begin, block](Node& self) {
                       double* g = input_grad(self, 0);
                       if (!g) return;
                       for (std::size_t o = 0; o < s.outer; ++o)
                         kern().axpy(1.0, self.grad.data() + o * block,
                                     g + (o * s.len + begin) * s.inner, block);
                     });
}

Tensor sum(const Tensor& x) {
  const double total = kern().sum(x.values().data(), x.size());
  return make_result("sum", {1}, {total}, {x}, [](Node& self) {
    double* g = input_grad(self, 0);
    if (!g) return;
    const double up = self.grad[0];
    const std::size_t n = self.inputs[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) g[i] += up;
  });
}

Tensor mean(const Tensor& x) {
  const double n = static_cast<double>(x.size());
  const double total = kern().sum(x.values().data(), x.size());
  return make_result("mean", {1}, {total / n}, {x}, [n](Node& self) {
    double* g = input_grad(self, 0);
    if (!g) return;
    const double up = self.grad[0] / n;
    const std::size_t count = self.inputs[0]->value.size();
    for (std::size_t i = 0; i < count; ++i) g[i] += up;
  });
}

namespace {

// Applies `fn(src, dst, stride, len)` to every 1-D lane along the split axis.
template <typename Fn>
void for_each_lane(const AxisSplit& s, Fn&& fn) {
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) fn(o * s.len * s.inner + i);
}

}  // namespace

Tensor softmax(const Tensor& v, std::size_t axis) {
  const AxisSplit s = split_axis(v.shape(), axis);
  std::vector<double> out(v.size());
  const double* in = v.values().data();
  for_each_lane(s, [&](std::size_t base) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < s.len; ++j) mx = std::max(mx, in[base + j * s.inner]);
    double z = 0.0;
    for (std::size_t j = 0; j < s.len; ++j) {
      const double e = std::exp(in[base + j * s.inner] - mx);
      out[base + j * s.inner] = e;
      z += e;
    }
    for (std::size_t j = 0; j < s.len; ++j) out[base + j * s.inner] /= z;
  });
  return make_result("softmax", v.shape(), std::move(out), {v}, [s](Node& self) {
    double* g = input_grad(self, 0);
    if (!g) return;
    const double* y = self.value.data();
    const double* gy = self.grad.data();
    for_each_lane(s, [&](std::size_t base) {
      double dotp = 0.0;
      for (std::size_t j = 0; j < s.len; ++j) {
        const std::size_t k = base + j * s.inner;
        dotp += gy[k] * y[k];
      }
      for (std::size_t j = 0; j < s.len; ++j) {
        const std::size_t k = base + j * s.inner;
        g[k] += y[k] * (gy[k] - dotp);
      }
    });
  });
}

Tensor log_softmax(const Tensor& v, std::size_t axis) {
  const AxisSplit s = split_axis(v.shape(), axis);
  std::vector<double> out(v.size());
  const double* in = v.values().data();
  for_each_lane(s, [&](std::size_t base) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < s.len; ++j) mx = std::max(mx, in[base + j * s.inner]);
    double z = 0.0;
    for (std::size_t j = 0; j < s.len; ++j) z += std::exp(in[base + j * s.inner] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < s.len; ++j)
      out[base + j * s.inner] = in[base + j * s.inner] - lse;
  });
  return make_result("log_softmax", v.shape(), std::move(out), {v}, [s](Node& self) {
    double* g = input_grad(self, 0);
    if (!g) return;
    const double* y = self.value.data();
    const double* gy = self.grad.data();
    for_each_lane(s, [&](std::size_t base) {
      double total = 0.0;
      for (std::size_t j = 0; j < s.len; ++j) total += gy[base + j * s.inner];
      for (std::size_t j = 0; j < s.len; ++j) {
        const std::size_t k = base + j * s.inner;
        g[k] += gy[k] - std::exp(y[k]) * total;
      }
    });
  });
}

namespace {

// Softmax of one row into `prob`; returns -log prob[target]. The sum of
// the non-max terms goes through log1p so confident rows keep precision.
double row_softmax_nll(const double* z, std::size_t c, double* prob, std::size_t target) {
  std::size_t arg = 0;
  for (std::size_t j = 1; j < c; ++j) {
    if (z[j] > z[arg]) arg = j;
  }
  const double mx = z[arg];
  double rest = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    prob[j] = std::exp(z[j] - mx);
    if (j != arg) rest += prob[j];
  }
  const double total = 1.0 + rest;
  for (std::size_t j = 0; j < c; ++j) prob[j] /= total;
  return (mx - z[target]) + std::log1p(rest);
}

}  // namespace

Tensor cross_entropy(const Tensor& logits, std::size_t target) {
  require_rank("cross_entropy", logits, 1);
  const std::size_t c = logits.size();
  if (target >= c) {
    throw IndexError("cross_entropy: target " + std::to_string(target) +
                     " outside [0, " + std::to_string(c) + ")");
  }
  std::vector<double> prob(c);
  const double loss = row_softmax_nll(logits.values().data(), c, prob.data(), target);
  return make_result("cross_entropy", {1}, {loss}, {logits},
                     [prob = std::move(prob), target](Node& self) {
                       double* g = input_grad(self, 0);
                       if (!g) return;
                       const double up = self.grad[0];
                       for (std::size_t j = 0; j < prob.size(); ++j) g[j] += up * prob[j];
                       g[target] -= up;
                     });
}

Tensor cross_entropy_rows(const Tensor& logits, std::span<const std::size_t> targets) {
  require_rank("cross_entropy_rows", logits, 2);
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (targets.size() != n) {
    throw DimensionError("cross_entropy_rows: " + std::to_string(targets.size()) +
                         " targets for " + shape_string(logits.shape()));
  }
  std::vector<double> prob(n * c);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (targets[r] >= c) {
      throw IndexError("cross_entropy_rows: target " + std::to_string(targets[r]) +
                       " outside [0, " + std::to_string(c) + ") at row " +
                       std::to_string(r));
    }
    const double* z = logits.values().data() + r * c;
    total += row_softmax_nll(z, c, prob.data() + r * c, targets[r]);
  }
  std::vector<std::size_t> tgt(targets.begin(), targets.end());
  return make_result(
      "cross_entropy_rows", {1}, {total / static_cast<double>(n)}, {logits},
      [prob = std::move(prob), tgt = std::move(tgt), n, c](Node& self) {
        double* g = input_grad(self, 0);
        if (!g) return;
        const double up = self.grad[0] / static_cast<double>(n);
        kern().axpy(up, prob.data(), g, n * c);
        for (std::size_t r = 0; r < n; ++r) g[r * c + tgt[r]] -= up;
      });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank("layer_norm", x, 2);
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (gamma.size() != n || beta.size() != n) {
    throw DimensionError("layer_norm: gain/bias must have " + std::to_string(n) +
                         " elements");
  }
  std::vector<double> xhat(m * n), inv_std(m), v(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = x.values().data() + r * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[r * n + j] = (row[j] - mu) * inv_std[r];
      v[r * n + j] = xhat[r * n + j] * gamma[j] + beta[j];
    }
  }
  return make_result(
      "layer_norm", x.shape(), std::move(v), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), m, n](Node& self) {
        const auto& gam = self.inputs[1]->value;
        double* gx = input_grad(self, 0);
        double* gg = input_grad(self, 1);
        double* gb = input_grad(self, 2);
        std::vector<double> dxhat(n);
        for (std::size_t r = 0; r < m; ++r) {
          const double* gy = self.grad.data() + r * n;
          const double* xh = xhat.data() + r * n;
          if (gg) kern().mul_acc(gy, xh, gg, n);
          if (gb) kern().axpy(1.0, gy, gb, n);
          if (!gx) continue;
          double mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            dxhat[j] = gy[j] * gam[j];
            mean_d += dxhat[j];
            mean_dx += dxhat[j] * xh[j];
          }
          mean_d /= static_cast<double>(n);
          mean_dx /= static_cast<double>(n);
          for (std::size_t j = 0; j < n; ++j)
            gx[r * n + j] += inv_std[r] * (dxhat[j] - mean_d - xh[j] * mean_dx);
        }
      });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices) {
  require_rank("gather_rows", table, 2);
  const std::size_t rows = table.dim(0), d = table.dim(1);
  if (indices.empty()) throw DimensionError("gather_rows: no indices");
  std::vector<double> v(indices.size() * d);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) {
      throw IndexError("gather_rows: index " + std::to_string(indices[i]) +
                       " outside table of " + std::to_string(rows) + " rows");
    }
    std::copy_n(table.values().data() + indices[i] * d, d, v.data() + i * d);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make_result("gather_rows", {idx.size(), d}, std::move(v), {table},
                     [idx, d](Node& self) {
                       double* g = input_grad(self, 0);
                       if (!g) return;
                       for (std::size_t i = 0; i < idx.size(); ++i)
                         kern().axpy(1.0, self.grad.data() + i * d, g + idx[i] * d, d);
                     });
}

Tensor gather_cols(const Tensor& x, std::span<const std::size_t> indices) {
  require_rank("gather_cols", x, 2);
  const std::size_t m = x.dim(0), n = x.dim(1), k = indices.size();
  if (k == 0) throw DimensionError("gather_cols: no indices");
  for (std::size_t j : indices) {
    if (j >= n) {
      throw IndexError("gather_cols: column " + std::to_string(j) + " outside " +
                       shape_string(x.shape()));
    }
  }
  std::vector<double> v(m * k);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < k; ++j) v[r * k + j] = x[r * n + indices[j]];
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make_result("gather_cols", {m, k}, std::move(v), {x}, [idx, m, n, k](Node& self) {
    double* g = input_grad(self, 0);
    if (!g) return;
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t j = 0; j < k; ++j) g[r * n + idx[j]] += self.grad[r * k + j];
  });
}

std::size_t Conv2dGeometry::out_h(std::size_t h) const {
  if (h + 2 * pad_h < kernel_h) {
    throw DimensionError("window height " + std::to_string(kernel_h) +
                         " exceeds padded input height " + std::to_string(h + 2 * pad_h));
  }
  return (h + 2 * pad_h - kernel_h) / stride_h + 1;
}

std::size_t Conv2dGeometry::out_w(std::size_t w) const {
  if (w + 2 * pad_w < kernel_w) {
    throw DimensionError("window width " + std::to_string(kernel_w) +
                         " exceeds padded input width " + std::to_string(w + 2 * pad_w));
  }
  return (w + 2 * pad_w - kernel_w) / stride_w + 1;
}

namespace {

struct ConvDims {
  std::size_t h, w, c, oh, ow, cout, kk;
  bool identity_cols;  // 1x1, stride 1, no padding: im2col is the input itself
};

void im2col(const double* x, const ConvDims& d, const Conv2dGeometry& g, double* cols) {
  for (std::size_t oh = 0; oh < d.oh; ++oh) {
    for (std::size_t ow = 0; ow < d.ow; ++ow) {
      double* row = cols + (oh * d.ow + ow) * d.kk;
      for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
        const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride_h + ki) -
                                  static_cast<std::ptrdiff_t>(g.pad_h);
        for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
          const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride_w + kj) -
                                    static_cast<std::ptrdiff_t>(g.pad_w);
          double* dst = row + (ki * g.kernel_w + kj) * d.c;
          if (ih < 0 || iw < 0 || ih >= static_cast<std::ptrdiff_t>(d.h) ||
              iw >= static_cast<std::ptrdiff_t>(d.w)) {
            std::fill_n(dst, d.c, 0.0);
          } else {
            std::copy_n(x + (static_cast<std::size_t>(ih) * d.w + static_cast<std::size_t>(iw)) * d.c,
                        d.c, dst);
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, const ConvDims& d, const Conv2dGeometry& g, double* dx) {
  for (std::size_t oh = 0; oh < d.oh; ++oh) {
    for (std::size_t ow = 0; ow < d.ow; ++ow) {
      const double* row = cols + (oh * d.ow + ow) * d.kk;
      for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
        const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride_h + ki) -
                                  static_cast<std::ptrdiff_t>(g.pad_h);
        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) continue;
        for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
          const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride_w + kj) -
                                    static_cast<std::ptrdiff_t>(g.pad_w);
          if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(d.w)) continue;
          kern().axpy(1.0, row + (ki * g.kernel_w + kj) * d.c,
                      dx + (static_cast<std::size_t>(ih) * d.w + static_cast<std::size_t>(iw)) * d.c,
                      d.c);
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv2dGeometry& g) {
  require_rank("conv2d", x, 3);
  require_rank("conv2d weight", weight, 2);
  ConvDims d{};
  d.h = x.dim(0);
  d.w = x.dim(1);
  d.c = x.dim(2);
  d.oh = g.out_h(d.h);
  d.ow = g.out_w(d.w);
  d.kk = g.kernel_h * g.kernel_w * d.c;
  d.cout = weight.dim(1);
  if (weight.dim(0) != d.kk || bias.size() != d.cout) {
    throw DimensionError("conv2d: weight " + shape_string(weight.shape()) + " / bias " +
                         shape_string(bias.shape()) + " incompatible with input " +
                         shape_string(x.shape()));
  }
  d.identity_cols = g.kernel_h == 1 && g.kernel_w == 1 && g.stride_h == 1 &&
                    g.stride_w == 1 && g.pad_h == 0 && g.pad_w == 0;
  const std::size_t p = d.oh * d.ow;
  std::vector<double> cols;
  const double* cols_ptr = x.values().data();
  if (!d.identity_cols) {
    cols.resize(p * d.kk);
    im2col(x.values().data(), d, g, cols.data());
    cols_ptr = cols.data();
  }
  std::vector<double> v(p * d.cout);
  for (std::size_t r = 0; r < p; ++r)
    std::copy_n(bias.values().data(), d.cout, v.data() + r * d.cout);
  kern().gemm(p, d.cout, d.kk, cols_ptr, weight.values().data(), v.data(), true);

  return make_result(
      "conv2d", {d.oh, d.ow, d.cout}, std::move(v), {x, weight, bias},
      [d, g, cols = std::move(cols)](Node& self) {
        const std::size_t p = d.oh * d.ow;
        const double* gy = self.grad.data();
        const double* col_vals = d.identity_cols ? self.inputs[0]->value.data() : cols.data();
        if (double* gw = input_grad(self, 1)) {
          const auto cols_t = transposed(col_vals, p, d.kk);  // [kk x p]
          kern().gemm(d.kk, d.cout, p, cols_t.data(), gy, gw, true);
        }
        if (double* gb = input_grad(self, 2)) {
          for (std::size_t r = 0; r < p; ++r) kern().axpy(1.0, gy + r * d.cout, gb, d.cout);
        }
        if (double* gx = input_grad(self, 0)) {
          const auto wt = transposed(self.inputs[1]->value.data(), d.kk, d.cout);
          if (d.identity_cols) {
            kern().gemm(p, d.kk, d.cout, gy, wt.data(), gx, true);
          } else {
            std::vector<double> dcols(p * d.kk);
            kern().gemm(p, d.kk, d.cout, gy, wt.data(), dcols.data(), false);
            col2im_add(dcols.data(), d, g, gx);
          }
        }
      });
}

Tensor max_pool2d(const Tensor& x, const Conv2dGeometry& g) {
  require_rank("max_pool2d", x, 3);
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  const std::size_t oh = g.out_h(h), ow = g.out_w(w);
  std::vector<double> v(oh * ow * c);
  std::vector<std::size_t> winner(v.size());
  const double* in = x.values().data();
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = std::numeric_limits<std::size_t>::max();
        for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(i * g.stride_h + ki) -
                                    static_cast<std::ptrdiff_t>(g.pad_h);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(j * g.stride_w + kj) -
                                      static_cast<std::ptrdiff_t>(g.pad_w);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(w)) continue;
            const std::size_t idx =
                (static_cast<std::size_t>(ih) * w + static_cast<std::size_t>(iw)) * c + ch;
            if (in[idx] > best) {
              best = in[idx];
              arg = idx;
            }
          }
        }
        if (arg == std::numeric_limits<std::size_t>::max()) {
          throw DimensionError("max_pool2d: window covers only padding");
        }
        const std::size_t o = (i * ow + j) * c + ch;
        v[o] = best;
        winner[o] = arg;
      }
    }
  }
  return make_result("max_pool2d", {oh, ow, c}, std::move(v), {x},
                     [winner = std::move(winner)](Node& self) {
                       double* gx = input_grad(self, 0);
                       if (!gx) return;
                       for (std::size_t o = 0; o < winner.size(); ++o) gx[winner[o]] += self.grad[o];
                     });
}

}  // namespace seqattr::nk
