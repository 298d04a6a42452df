// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// AArch64 only; Advanced SIMD is mandatory there so no runtime probe is
// needed beyond the compile-time guard.

#include "seqattr/simd/kernels.hpp"

#if defined(SEQATTR_HAVE_NEON)

#include <arm_neon.h>

#include <algorithm>
#include <cstring>
#include <limits>

namespace seqattr::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_neon(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void mul_neon(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc_neon(const double* a, const double* b, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), vld1q_f64(a + i), vld1q_f64(b + i)));
  }
  for (; i < n; ++i) y[i] += a[i] * b[i];
}

double sum_neon(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double max_neon(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 2) {
    float64x2_t acc = vld1q_f64(x);
    for (i = 2; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vld1q_f64(x + i));
    m = vmaxvq_f64(acc);
  }
  for (; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

// 4 rows x 4 columns tile.
template <int R>
inline void tile_4(std::size_t n, std::size_t k, const double* a,
                   const double* b, double* c) {
  float64x2_t acc[R][2];
  for (int r = 0; r < R; ++r) acc[r][0] = acc[r][1] = vdupq_n_f64(0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const float64x2_t b0 = vld1q_f64(b + p * n);
    const float64x2_t b1 = vld1q_f64(b + p * n + 2);
    for (int r = 0; r < R; ++r) {
      const float64x2_t av = vdupq_n_f64(a[r * k + p]);
      acc[r][0] = vfmaq_f64(acc[r][0], av, b0);
      acc[r][1] = vfmaq_f64(acc[r][1], av, b1);
    }
  }
  for (int r = 0; r < R; ++r) {
    double* crow = c + r * n;
    vst1q_f64(crow, vaddq_f64(vld1q_f64(crow), acc[r][0]));
    vst1q_f64(crow + 2, vaddq_f64(vld1q_f64(crow + 2), acc[r][1]));
  }
}

template <int R>
inline void tile_1(std::size_t n, std::size_t k, const double* a,
                   const double* b, double* c) {
  double acc[R] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const double bv = b[p * n];
    for (int r = 0; r < R; ++r) acc[r] += a[r * k + p] * bv;
  }
  for (int r = 0; r < R; ++r) c[r * n] += acc[r];
}

template <int R>
inline void row_block(std::size_t n, std::size_t k, const double* a,
                      const double* b, double* c) {
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) tile_4<R>(n, k, a, b + j, c + j);
  for (; j < n; ++j) tile_1<R>(n, k, a, b + j, c + j);
}

void gemm_neon(std::size_t m, std::size_t n, std::size_t k, const double* a,
               const double* b, double* c, bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(double) * m * n);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) row_block<4>(n, k, a + i * k, b, c + i * n);
  switch (m - i) {
    case 3: row_block<3>(n, k, a + i * k, b, c + i * n); break;
    case 2: row_block<2>(n, k, a + i * k, b, c + i * n); break;
    case 1: row_block<1>(n, k, a + i * k, b, c + i * n); break;
    default: break;
  }
}

constexpr KernelTable kNeon{
    Isa::kNeon, dot_neon, axpy_neon, add_neon, mul_neon,
    mul_acc_neon, sum_neon, max_neon, gemm_neon,
};

}  // namespace

const KernelTable* neon_table_unchecked() noexcept { return &kNeon; }

}  // namespace seqattr::simd

#endif  // SEQATTR_HAVE_NEON
