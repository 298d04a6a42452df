// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

namespace seqattr::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa) noexcept;

// Dense double-precision kernels. Every ISA provides the same table; the
// scalar table is the reference the vector tables are tested against.
//
// gemm computes C[m x n] (+)= A[m x k] * B[k x n], all row-major and
// contiguous. When `accumulate` is false C is overwritten.
struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = a + b
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  // out = a * b
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // y += a * b
  void (*mul_acc)(const double* a, const double* b, double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*max)(const double* x, std::size_t n);
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const double* a,
               const double* b, double* c, bool accumulate);
};

const KernelTable& scalar_kernels() noexcept;

// nullptr when the ISA was not compiled in or the CPU lacks it.
const KernelTable* avx2_kernels() noexcept;
const KernelTable* neon_kernels() noexcept;

// Best table for this CPU, chosen once. SEQATTR_ISA=scalar|avx2|neon in the
// environment overrides the choice when the requested ISA is available.
const KernelTable& active() noexcept;

// Switches the active table for the rest of the process (tests and
// benchmarks). Returns false and leaves the selection unchanged when the ISA
// is unavailable.
bool select(Isa isa) noexcept;

}  // namespace seqattr::simd
