// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace seqattr::nk {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

// One value in the computation graph. Leaves (parameters, inputs) have no
// backward function; op outputs hold their inputs alive until the tape that
// recorded them is cleared.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until something flows into it
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor vector(std::initializer_list<double> values,
                       bool requires_grad = false);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  // Direct write access. Only for leaves: parameter initialisation and the
  // optimizer. Writing into an op output invalidates its recorded backward.
  std::span<double> mutable_values() { return node_->value; }

  double item() const;
  double operator[](std::size_t i) const { return node_->value[i]; }
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Zero-filled view when no gradient has arrived yet.
  std::vector<double> grad() const;
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad();

  const char* op() const { return node_->op; }
  Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node>& shared() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Ordered record of differentiable operations for one forward pass. Ops
// append themselves to the tape installed by Tape::Scope on the current
// thread; with no scope active nothing is recorded (inference mode).
class Tape {
 public:
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  static Tape* active() noexcept;

  void record(std::shared_ptr<Node> node);
  std::size_t size() const noexcept { return records_.size(); }
  bool contains(const Node* node) const;
  const std::vector<std::shared_ptr<Node>>& records() const { return records_; }
  void clear() noexcept { records_.clear(); }

 private:
  std::vector<std::shared_ptr<Node>> records_;
};

// Seeds d(loss)/d(loss) = 1 and runs every recorded backward once, newest
// first. Gradients add into existing buffers; callers zero them between
// batches.
void backward(const Tensor& loss, Tape& tape);

// Building block for operations: allocates the output node and, when some
// input requires a gradient and a tape is active, wires `backward` and
// records the node. Checks the forward values are finite.
Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward);

// Throws NumericError naming `op` if any value is NaN or infinite.
void check_finite(const char* op, std::span<const double> values);

}  // namespace seqattr::nk
