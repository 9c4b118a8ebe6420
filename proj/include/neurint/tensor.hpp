#pragma once

// Dense float64 tensors with a tape-based reverse-mode differentiation record.
//
// Operations are free functions. When a Recording is active on the current
// thread and any input is tracked by that tape, the result is appended to the
// tape; otherwise the operation is inert and the result is untracked.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace neurint {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised on NaN/Inf produced by a guarded forward operation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Tape;

class Tensor {
 public:
  /// Rank-0 tensor holding 0.0.
  Tensor() : data_(1, 0.0) {}
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return data_; }
  /// Mutable access to the buffer. Writing to a tracked tensor does not
  /// update saved values on the tape.
  std::span<double> data() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double item() const;
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

  bool tracked() const;
  Tensor detach() const;
  bool all_finite() const;

 private:
  friend class Tape;
  friend class Gradients;
  Shape shape_;
  std::vector<double> data_;
  std::uint64_t tape_id_ = 0;
  std::int64_t node_ = -1;
};

/// Gradients of one backward pass, keyed by the watched leaves of that pass.
class Gradients {
 public:
  /// Gradient for a watched parameter. Zeros when the loss does not depend on it.
  Tensor of(const Tensor& param) const;
  /// True when backward reached the parameter with a gradient.
  bool reached(const Tensor& param) const;

 private:
  friend class Tape;
  std::uint64_t tape_id_ = 0;
  std::unordered_map<std::int64_t, Tensor> by_node_;
};

/// Backward rule for custom operations: given the output gradient, return one
/// gradient buffer per input (empty vector for inputs with no gradient).
using CustomBackward =
    std::function<std::vector<std::vector<double>>(std::span<const double> grad_out)>;

/// Append-only computation record. Confined to a single thread.
class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Register `param` as a differentiable leaf of this tape.
  void watch(Tensor& param);

  /// Reverse sweep from a scalar loss. Clears the record afterwards.
  Gradients backward(const Tensor& loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }
  std::uint64_t id() const { return id_; }
  /// Nodes processed by the most recent backward pass.
  std::size_t last_backward_visits() const { return last_visits_; }

  /// The tape recorded into on this thread, or nullptr.
  static Tape* active();

  // Internal recording interface used by the op implementations.
  enum class Op : std::uint8_t {
    Leaf, Add, Sub, Mul, Div, Scale, Offset, Matmul, Linear,
    LeakyRelu, Tanh, Sigmoid, Exp, Log, Square, Clamp,
    Sum, SumAxis, ConcatCols, SliceCols, ConcatRows, SliceRows, Reshape, Custom
  };
  struct Node {
    Op op = Op::Leaf;
    std::vector<std::int64_t> inputs;
    Shape shape;
    std::vector<Shape> input_shapes;
    std::vector<double> saved0, saved1;
    double a = 0.0, b = 0.0;
    std::size_t index = 0, extent = 0;
    CustomBackward custom;
  };
  bool tracks(const Tensor& t) const { return t.node_ >= 0 && t.tape_id_ == id_; }
  std::int64_t node_of(const Tensor& t) const { return tracks(t) ? t.node_ : -1; }
  void attach(Tensor& out, Node node);

 private:
  friend class Recording;
  std::uint64_t id_;
  std::vector<Node> nodes_;
  std::size_t last_visits_ = 0;
};

/// RAII guard making a tape active on the current thread.
class Recording {
 public:
  explicit Recording(Tape& tape);
  ~Recording();
  Recording(const Recording&) = delete;
  Recording& operator=(const Recording&) = delete;

 private:
  Tape* previous_;
};

// Elementwise binary ops: equal shapes, or one side holding a single value.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);
Tensor offset(const Tensor& x, double c);

Tensor matmul(const Tensor& a, const Tensor& b);
/// x·W + b with x [m,k], W [k,n], b [n].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor leaky_relu(const Tensor& x, double slope);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// Rejects overflow to infinity.
Tensor exp(const Tensor& x);
/// Rejects non-positive arguments.
Tensor log(const Tensor& x);
Tensor square(const Tensor& x);
/// Gradient passes only where lo < x < hi.
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Reduction over one axis of a rank-2 tensor; the axis is dropped.
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x, std::size_t axis);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor reshape(const Tensor& x, Shape shape);

/// Records an operation whose forward value was computed by the caller.
Tensor custom_op(Tensor result, std::span<const Tensor* const> inputs, CustomBackward backward);

// Convenience overloads.
inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(double c, const Tensor& x) { return scale(x, c); }

}  // namespace neurint
