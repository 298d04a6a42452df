// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/numkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "seqattr/errors.hpp"

namespace seqattr::nk {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::vector<double>& Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

namespace {

void validate_shape(const Shape& shape, std::size_t count) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("zero-sized dimension in " + shape_string(shape));
  }
  if (element_count(shape) != count) {
    throw DimensionError("shape " + shape_string(shape) + " does not hold " +
                         std::to_string(count) + " elements");
  }
}

thread_local Tape* g_active_tape = nullptr;

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = element_count(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  validate_shape(shape, values.size());
  check_finite("tensor", values);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::vector(std::initializer_list<double> values, bool requires_grad) {
  return from({values.size()}, std::vector<double>(values), requires_grad);
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows,
                      bool requires_grad) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.begin()->size() : 0;
  std::vector<double> v;
  v.reserve(m * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw DimensionError("ragged matrix literal");
    v.insert(v.end(), r.begin(), r.end());
  }
  return from({m, n}, std::move(v), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() on tensor of shape " + shape_string(shape()));
  }
  return node_->value[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw DimensionError("at(row, col) needs a rank-2 tensor");
  return node_->value.at(row * dim(1) + col);
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tape::Scope::Scope(Tape& tape) : previous_(g_active_tape) {
  g_active_tape = &tape;
}

Tape::Scope::~Scope() { g_active_tape = previous_; }

Tape* Tape::active() noexcept { return g_active_tape; }

void Tape::record(std::shared_ptr<Node> node) { records_.push_back(std::move(node)); }

bool Tape::contains(const Node* node) const {
  return std::any_of(records_.begin(), records_.end(),
                     [node](const auto& r) { return r.get() == node; });
}

void backward(const Tensor& loss, Tape& tape) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        (loss.defined() ? shape_string(loss.shape()) : "<none>"));
  }
  if (!loss.requires_grad()) return;  // nothing upstream wants a gradient
  if (loss.node()->backward && !tape.contains(loss.node())) {
    throw ContractError("loss was not produced on this tape");
  }
  loss.node()->ensure_grad()[0] += 1.0;
  const auto& recs = tape.records();
  for (auto it = recs.rbegin(); it != recs.rend(); ++it) {
    Node& n = **it;
    if (n.grad.empty() || !n.backward) continue;
    n.backward(n);
  }
}

void check_finite(const char* op, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError(std::string("non-finite value ") +
                         std::to_string(values[i]) + " produced by " + op +
                         " at element " + std::to_string(i));
    }
  }
}

Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs, std::function<void(Node&)> backward) {
  check_finite(op, value);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  Tape* tape = Tape::active();
  const bool any_grad = std::any_of(inputs.begin(), inputs.end(),
                                    [](const Tensor& t) { return t.requires_grad(); });
  if (tape != nullptr && any_grad) {
    node->requires_grad = true;
    node->backward = std::move(backward);
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.shared());
    tape->record(node);
  }
  return Tensor(std::move(node));
}

}  // namespace seqattr::nk
