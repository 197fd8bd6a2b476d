// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <deque>
#include <functional>
#include <vector>

#include "dysfl/types.hpp"

namespace dysfl::ad {

using Mat = Eigen::MatrixXd;

class Tape;

/// Handle to a tape node. Valid as long as its tape is alive.
class Value {
 public:
  Value() = default;
  const Mat& val() const;
  const Mat& grad() const;
  Eigen::Index rows() const { return val().rows(); }
  Eigen::Index cols() const { return val().cols(); }
  bool defined() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Value(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode autodiff over double matrices. Operations record themselves
/// in execution order (already topological); backward() walks the record in
/// reverse, accumulating gradients into every reachable node that requires
/// them. Single-threaded and bit-deterministic for a fixed call sequence.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Node without gradient tracking (inputs, targets, masks).
  Value constant(Mat v);
  /// Differentiable node (parameters and anything under test).
  Value leaf(Mat v);

  // Elementwise.
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  Value add_scalar(Value a, double s);
  Value mul_scalar(Value a, double s);
  Value rsub_scalar(Value a, double s);  // s - a
  Value square(Value a);
  Value relu(Value a);
  Value gelu(Value a);  // tanh approximation
  Value sigmoid(Value a);
  /// log of a clamped to [lo, hi]; gradient is zero outside the open range.
  Value log_clamped(Value a, double lo, double hi);

  // Matrix.
  Value matmul(Value a, Value b);
  Value matmul_nt(Value a, Value b);  // a * b^T
  Value add_row_broadcast(Value x, Value row);
  Value slice_cols(Value a, int col0, int ncols);
  Value concat_cols(const std::vector<Value>& parts);
  Value softmax_rows(Value a);
  Value layer_norm_rows(Value x, Value gamma, Value beta, double eps = 1e-5);
  Value transpose(Value a);
  Value sum(Value a);  // 1x1

  // 1-D convolutions over [channels x time] inputs, zero padding.
  Value conv1d_depthwise(Value x, Value w, Value b, int stride, int pad);
  Value conv1d_grouped(Value x, Value w, Value b, int groups, int stride, int pad);

  /// Seeds d(output)/d(output)=1 and back-propagates; `output` must be 1x1.
  void backward(Value output);

  /// True when the node received gradient during the last backward pass;
  /// a parameter that never does is detached from the loss.
  bool reached(Value v) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  friend class Value;
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    bool visited = false;
    std::function<void(Tape&)> backprop;
  };

  int push(Mat value, bool requires_grad, std::function<void(Tape&)> fn);
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  void accumulate(int id, const Mat& g);
  const Mat& value_of(int id) const { return node(id).value; }
  const Mat& grad_of(int id) const { return node(id).grad; }
  void check_same_shape(Value a, Value b, const char* op) const;

  std::deque<Node> nodes_;
};

}  // namespace dysfl::ad
