// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/ctc/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seqattr/codec/codec.hpp"
#include "seqattr/errors.hpp"
#include "seqattr/numkit/ops.hpp"

namespace seqattr::ctc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Stands in for log(0) on the tape, where every value must stay finite.
// exp(kUnreachable - x) underflows to exactly 0 for any finite log-prob x.
constexpr double kUnreachable = -1e300;
constexpr double kBruteForceLimit = 1e7;

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void check_labels(std::span<const int> y, std::size_t classes) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 1 || static_cast<std::size_t>(y[i]) >= classes) {
      throw IndexError("ctc: label " + std::to_string(y[i]) + " at position " +
                       std::to_string(i) + " outside 1.." + std::to_string(classes - 1));
    }
  }
}

void check_feasible(std::size_t steps, std::span<const int> y) {
  const std::size_t need = required_steps(y);
  if (steps < need) {
    throw InfeasibleError("ctc: " + std::to_string(steps) + " timesteps cannot emit a " +
                          std::to_string(y.size()) + "-label sequence needing " +
                          std::to_string(need));
  }
}

// skip[s]: state s may be entered from s-2 (non-blank, differs from s-2).
std::vector<bool> skip_mask(const std::vector<int>& ext) {
  std::vector<bool> skip(ext.size(), false);
  for (std::size_t s = 2; s < ext.size(); ++s) {
    skip[s] = ext[s] != codec::kCtcBlank && ext[s] != ext[s - 2];
  }
  return skip;
}

// alpha_t[s] = lse(alpha[s], alpha[s-1], alpha[s-2] if skip[s]) + emit[s].
nk::Tensor recursion_step(const nk::Tensor& alpha, const nk::Tensor& emit,
                          const std::vector<bool>& skip) {
  const std::size_t n = alpha.size();
  const auto a = alpha.values();
  const auto e = emit.values();
  std::vector<double> out(n);
  std::vector<double> w(3 * n, 0.0);  // softmax weights of the three predecessors
  for (std::size_t s = 0; s < n; ++s) {
    double c[3] = {a[s], s >= 1 ? a[s - 1] : kNegInf, skip[s] ? a[s - 2] : kNegInf};
    const double m = std::max({c[0], c[1], c[2]});
    double total = 0.0;
    for (int j = 0; j < 3; ++j) {
      w[3 * s + j] = c[j] == kNegInf ? 0.0 : std::exp(c[j] - m);
      total += w[3 * s + j];
    }
    for (int j = 0; j < 3; ++j) w[3 * s + j] /= total;
    out[s] = std::max(m + std::log(total) + e[s], kUnreachable);
  }
  return nk::make_result("ctc_step", {n}, std::move(out), {alpha, emit},
                         [w = std::move(w), n](nk::Node& self) {
                           const auto& up = self.grad;
                           if (nk::Node* in = self.inputs[0].get(); in->requires_grad) {
                             in->ensure_grad();
                             for (std::size_t s = 0; s < n; ++s) {
                               in->grad[s] += up[s] * w[3 * s];
                               if (s >= 1) in->grad[s - 1] += up[s] * w[3 * s + 1];
                               if (s >= 2) in->grad[s - 2] += up[s] * w[3 * s + 2];
                             }
                           }
                           if (nk::Node* in = self.inputs[1].get(); in->requires_grad) {
                             in->ensure_grad();
                             for (std::size_t s = 0; s < n; ++s) in->grad[s] += up[s];
                           }
                         });
}

// -(log-sum-exp over the last one or two entries).
nk::Tensor negative_tail_lse(const nk::Tensor& alpha) {
  const std::size_t n = alpha.size();
  const std::size_t first = n >= 2 ? n - 2 : 0;
  const auto a = alpha.values();
  double m = kNegInf;
  for (std::size_t s = first; s < n; ++s) m = std::max(m, a[s]);
  double total = 0.0;
  std::vector<double> w(n, 0.0);
  for (std::size_t s = first; s < n; ++s) total += (w[s] = std::exp(a[s] - m));
  for (double& v : w) v /= total;
  return nk::make_result("ctc_final", {1}, {-(m + std::log(total))}, {alpha},
                         [w = std::move(w)](nk::Node& self) {
                           nk::Node* in = self.inputs[0].get();
                           if (!in->requires_grad) return;
                           in->ensure_grad();
                           for (std::size_t s = 0; s < w.size(); ++s) {
                             in->grad[s] -= self.grad[0] * w[s];
                           }
                         });
}

}  // namespace

PosteriorMatrix::PosteriorMatrix(std::size_t steps, std::size_t classes,
                                 std::vector<double> values)
    : steps_(steps), classes_(classes), values_(std::move(values)) {
  if (steps == 0 || classes < 2 || values_.size() != steps * classes) {
    throw ContractError("posterior matrix needs T >= 1, C >= 2 and T*C values");
  }
  for (std::size_t t = 0; t < steps; ++t) {
    double total = 0.0;
    for (double p : row(t)) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ContractError("posterior row " + std::to_string(t) + " has an entry outside [0,1]");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ContractError("posterior row " + std::to_string(t) + " sums to " +
                          std::to_string(total));
    }
  }
}

PosteriorMatrix PosteriorMatrix::from_logits(const nk::Tensor& logits) {
  if (logits.rank() != 2) throw DimensionError("ctc: logits must be T x C");
  const nk::Tensor p = nk::softmax(logits, 1);
  return {logits.dim(0), logits.dim(1), {p.values().begin(), p.values().end()}};
}

std::vector<int> collapse(std::span<const int> alignment) {
  std::vector<int> out;
  for (std::size_t t = 0; t < alignment.size(); ++t) {
    if (t > 0 && alignment[t] == alignment[t - 1]) continue;
    if (alignment[t] != codec::kCtcBlank) out.push_back(alignment[t]);
  }
  return out;
}

std::size_t required_steps(std::span<const int> y) {
  std::size_t need = y.size();
  for (std::size_t i = 1; i < y.size(); ++i) need += y[i] == y[i - 1] ? 1 : 0;
  return need;
}

double ctc_log_prob(const PosteriorMatrix& q, std::span<const int> y) {
  check_labels(y, q.classes());
  check_feasible(q.steps(), y);
  const std::vector<int> ext = codec::extend_with_blanks(y);
  const std::vector<bool> skip = skip_mask(ext);
  const std::size_t n = ext.size();
  auto lq = [&](std::size_t t, std::size_t s) { return std::log(q(t, ext[s])); };

  std::vector<double> alpha(n, kNegInf), next(n);
  alpha[0] = lq(0, 0);
  if (n > 1) alpha[1] = lq(0, 1);
  for (std::size_t t = 1; t < q.steps(); ++t) {
    for (std::size_t s = 0; s < n; ++s) {
      double acc = alpha[s];
      if (s >= 1) acc = log_add(acc, alpha[s - 1]);
      if (skip[s]) acc = log_add(acc, alpha[s - 2]);
      next[s] = acc == kNegInf ? kNegInf : acc + lq(t, s);
    }
    alpha.swap(next);
  }
  return n >= 2 ? log_add(alpha[n - 1], alpha[n - 2]) : alpha[n - 1];
}

nk::Tensor ctc_loss(const nk::Tensor& logits, std::span<const int> y) {
  if (logits.rank() != 2) throw DimensionError("ctc_loss: logits must be T x C");
  const std::size_t steps = logits.dim(0);
  check_labels(y, logits.dim(1));
  check_feasible(steps, y);
  const std::vector<int> ext = codec::extend_with_blanks(y);
  const std::vector<bool> skip = skip_mask(ext);
  const std::size_t n = ext.size();
  std::vector<std::size_t> cols(ext.begin(), ext.end());

  // emit[t, s] = log q_t(y'_s)
  const nk::Tensor emit = nk::gather_cols(nk::log_softmax(logits, 1), cols);
  // Only states 0 and 1 are live at t = 0.
  std::vector<double> init(n, kUnreachable);
  init[0] = 0.0;
  if (n > 1) init[1] = 0.0;
  nk::Tensor alpha = nk::add(nk::Tensor::from({n}, init),
                             nk::reshape(nk::slice(emit, 0, 0, 1), {n}));
  for (std::size_t t = 1; t < steps; ++t) {
    alpha = recursion_step(alpha, nk::reshape(nk::slice(emit, 0, t, t + 1), {n}), skip);
  }
  return negative_tail_lse(alpha);
}

double ctc_brute_force(const PosteriorMatrix& q, std::span<const int> y) {
  const std::vector<int> target(y.begin(), y.end());
  const auto dist = ctc_brute_force_distribution(q);
  const auto it = dist.find(target);
  return it == dist.end() ? 0.0 : it->second;
}

std::map<std::vector<int>, double> ctc_brute_force_distribution(const PosteriorMatrix& q) {
  const std::size_t steps = q.steps(), classes = q.classes();
  if (std::pow(static_cast<double>(classes), static_cast<double>(steps)) > kBruteForceLimit) {
    throw ContractError("ctc_brute_force: " + std::to_string(classes) + "^" +
                        std::to_string(steps) + " alignments exceed the 1e7 guard");
  }
  std::map<std::vector<int>, double> dist;
  std::vector<int> path(steps, 0);
  while (true) {
    double p = 1.0;
    for (std::size_t t = 0; t < steps; ++t) p *= q(t, path[t]);
    dist[collapse(path)] += p;
    std::size_t t = 0;
    while (t < steps && ++path[t] == static_cast<int>(classes)) path[t++] = 0;
    if (t == steps) break;
  }
  return dist;
}

std::vector<int> ctc_greedy_decode(const PosteriorMatrix& q) {
  std::vector<int> best(q.steps());
  for (std::size_t t = 0; t < q.steps(); ++t) {
    const auto r = q.row(t);
    best[t] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return collapse(best);
}

std::vector<int> ctc_greedy_decode(const nk::Tensor& logits) {
  if (logits.rank() != 2) throw DimensionError("ctc: logits must be T x C");
  const std::size_t c = logits.dim(1);
  std::vector<int> best(logits.dim(0));
  for (std::size_t t = 0; t < best.size(); ++t) {
    const double* r = logits.values().data() + t * c;
    best[t] = static_cast<int>(std::max_element(r, r + c) - r);
  }
  return collapse(best);
}

}  // namespace seqattr::ctc
