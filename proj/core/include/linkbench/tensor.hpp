#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "linkbench/matrix.hpp"

namespace linkbench::nn {

/// A named learnable array and its gradient buffer.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;
  bool has_grad = false;  // set by Tape::backward, cleared by zero_grad
};

/// Owns a model's parameters. Addresses are stable for the store's lifetime.
class ParamStore {
 public:
  Param& add(std::string name, Matrix init, bool trainable = true);
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t num_values() const;
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::deque<Param> params_;
};

/// Compressed segment lists: segment i covers members[offsets[i] .. offsets[i+1]).
struct Segments {
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> members;

  std::size_t count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const std::uint32_t> operator[](std::size_t i) const {
    return {members.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Reverse-mode recording of one forward pass. Every recorded value is
/// checked for NaN/Inf (NonFinite). backward() accumulates into Param::grad.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  /// With `track_grad` false, params enter as constants and nothing is
  /// recorded for backward (inference passes).
  explicit Tape(bool track_grad = true) : track_grad_(track_grad) {}

  Var constant(Matrix m);
  Var param(Param& p);

  /// Records an op result; `inputs` decide whether a gradient is needed.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  /// Gradient buffer of a node, zero-allocated on first use.
  Matrix& grad(Var v);

  void backward(Var scalar);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Param* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  bool track_grad_ = true;
};

// Differentiable ops. Shape errors raise ShapeMismatch.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var add_bias(Var a, Var bias);  // bias is 1 x cols, broadcast over rows
Var scale(Var a, double s);
Var concat_cols(Var a, Var b);
Var concat_rows(Var a, Var b);
Var gather_rows(Var a, std::span<const std::uint32_t> idx);
/// out[i] = sum of a's rows listed in segment i. Empty segments give zero rows.
Var segment_sum(Var a, const Segments& seg);
/// out[i] = mean of a's rows listed in segment i. Empty segments give zero rows.
Var segment_mean(Var a, const Segments& seg);
/// Softmax of a column vector within each segment.
Var segment_softmax(Var scores, const Segments& seg);
Var mul_rows(Var a, Var weights);  // weights is rows x 1
Var rowwise_dot(Var a, Var b);     // rows x 1
Var leaky_relu(Var a, double slope = 0.01);
Var relu(Var a);
Var sigmoid(Var a);
/// Divides each row by its L2 norm; rows with zero norm pass through unchanged.
Var l2_normalize_rows(Var a);
/// Mean binary cross-entropy of probabilities against {0,1} labels; scores are
/// clamped to [1e-12, 1 - 1e-12]. Raises LengthMismatch.
Var bce_loss(Var probs, std::span<const double> labels);

double sigmoid_value(double x);

}  // namespace linkbench::nn
