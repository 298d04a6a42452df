// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/numkit/parameters.hpp"

#include <algorithm>
#include <cmath>

#include "seqattr/errors.hpp"

namespace seqattr::nk {

Tensor ParameterStore::add(const std::string& name, Shape shape, Init init, Rng& rng,
                           std::size_t fan_in, std::size_t fan_out) {
  if (contains(name)) throw ConfigError("duplicate parameter name " + name);
  const std::size_t n = element_count(shape);
  std::vector<double> v(n, 0.0);
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kOnes:
      std::fill(v.begin(), v.end(), 1.0);
      break;
    case Init::kHe: {
      const double sd = std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
      for (double& x : v) x = sd * rng.normal();
      break;
    }
    case Init::kXavier: {
      const double limit = std::sqrt(
          6.0 / static_cast<double>(std::max<std::size_t>(fan_in + fan_out, 1)));
      for (double& x : v) x = rng.uniform(-limit, limit);
      break;
    }
    case Init::kUniformFanIn: {
      const double limit =
          1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
      for (double& x : v) x = rng.uniform(-limit, limit);
      break;
    }
  }
  Tensor t = Tensor::from(std::move(shape), std::move(v), true);
  entries_.push_back({name, t});
  return t;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.tensor;
  throw ConfigError("no parameter named " + name);
}

bool ParameterStore::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const NamedParameter& e) { return e.name == name; });
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) {
    e.tensor.mutable_grad();
    e.tensor.zero_grad();
  }
}

double ParameterStore::grad_norm_sq(const std::string& prefix) const {
  double total = 0.0;
  for (const auto& e : entries_) {
    if (e.name.compare(0, prefix.size(), prefix) != 0 || !e.tensor.has_grad()) continue;
    for (double g : e.tensor.grad()) total += g * g;
  }
  return total;
}

}  // namespace seqattr::nk
