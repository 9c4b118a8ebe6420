#include "neurint/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>

namespace neurint {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
using ConstVec = Eigen::Map<const Eigen::RowVectorXd>;

std::atomic<std::uint64_t> g_next_tape_id{1};
thread_local Tape* g_active = nullptr;

Tape* recording_for(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = g_active;
  if (tape == nullptr) return nullptr;
  for (const Tensor* t : inputs) {
    if (tape->tracks(*t)) return tape;
  }
  return nullptr;
}

Tape* recording_for(std::span<const Tensor> inputs) {
  Tape* tape = g_active;
  if (tape == nullptr) return nullptr;
  for (const Tensor& t : inputs) {
    if (tape->tracks(t)) return tape;
  }
  return nullptr;
}

void check_finite_result(const Tensor& out, const char* op) {
  if (!out.all_finite()) {
    throw NumericError(std::string(op) + ": non-finite result");
  }
}

const Shape& require_matrix(const Tensor& x, const char* op) {
  if (x.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(x.shape()));
  }
  return x.shape();
}

enum class Broadcast { Equal, LeftScalar, RightScalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::Equal;
  if (b.size() == 1) return Broadcast::RightScalar;
  if (a.size() == 1) return Broadcast::LeftScalar;
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                   shape_str(b.shape()));
}

template <typename F>
Tensor binary_forward(const Tensor& a, const Tensor& b, Broadcast kind, F f) {
  if (kind == Broadcast::Equal) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i], b.data()[i]);
    return Tensor(a.shape(), std::move(out));
  }
  if (kind == Broadcast::RightScalar) {
    const double s = b.data()[0];
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i], s);
    return Tensor(a.shape(), std::move(out));
  }
  const double s = a.data()[0];
  std::vector<double> out(b.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(s, b.data()[i]);
  return Tensor(b.shape(), std::move(out));
}

template <typename F>
Tensor unary_forward(const Tensor& x, F f) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x.data()[i]);
  return Tensor(x.shape(), std::move(out));
}

// Reduce an output-shaped gradient onto an input that may have been broadcast.
void accumulate_broadcast(std::vector<double>& dst, std::span<const double> g, double factor,
                          const std::vector<double>* elementwise, bool input_is_scalar) {
  if (input_is_scalar) {
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      total += g[i] * (elementwise ? (*elementwise)[elementwise->size() == 1 ? 0 : i] : 1.0);
    }
    dst[0] += factor * total;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    dst[i] += factor * g[i] * (elementwise ? (*elementwise)[elementwise->size() == 1 ? 0 : i] : 1.0);
  }
}

}  // namespace

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (std::size_t extent : shape_) {
    if (extent == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape_));
  }
  if (shape_numel(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_str(shape_) + " does not match " + std::to_string(data_.size()) +
                     " values");
  }
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::rows() const { return shape_.empty() ? 1 : shape_[0]; }

std::size_t Tensor::cols() const {
  if (shape_.size() < 2) return shape_.empty() ? 1 : shape_[0];
  return shape_[1];
}

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape_));
  return data_[0];
}

bool Tensor::tracked() const { return g_active != nullptr && g_active->tracks(*this); }

Tensor Tensor::detach() const { return Tensor(shape_, data_); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Gradients

Tensor Gradients::of(const Tensor& param) const {
  if (param.tape_id_ == tape_id_) {
    auto it = by_node_.find(param.node_);
    if (it != by_node_.end()) return it->second;
  }
  return Tensor::zeros(param.shape());
}

bool Gradients::reached(const Tensor& param) const {
  return param.tape_id_ == tape_id_ && by_node_.count(param.node_) > 0;
}

// ---------------------------------------------------------------------------
// Tape

Tape::Tape() : id_(g_next_tape_id.fetch_add(1)) {}

Tape* Tape::active() { return g_active; }

void Tape::watch(Tensor& param) {
  Node node;
  node.op = Op::Leaf;
  node.shape = param.shape();
  param.tape_id_ = id_;
  param.node_ = static_cast<std::int64_t>(nodes_.size());
  nodes_.push_back(std::move(node));
}

void Tape::attach(Tensor& out, Node node) {
  node.shape = out.shape();
  out.tape_id_ = id_;
  out.node_ = static_cast<std::int64_t>(nodes_.size());
  nodes_.push_back(std::move(node));
}

void Tape::clear() {
  nodes_.clear();
  id_ = g_next_tape_id.fetch_add(1);
}

Gradients Tape::backward(const Tensor& loss) {
  if (!tracks(loss)) throw std::logic_error("backward: loss is not recorded on this tape");
  if (loss.size() != 1) throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.shape()));

  std::vector<std::vector<double>> grads(nodes_.size());
  auto acc = [&](std::int64_t id) -> std::vector<double>& {
    auto& g = grads[static_cast<std::size_t>(id)];
    if (g.empty()) g.assign(shape_numel(nodes_[static_cast<std::size_t>(id)].shape), 0.0);
    return g;
  };
  grads[static_cast<std::size_t>(loss.node_)] = {1.0};

  Gradients result;
  result.tape_id_ = id_;
  last_visits_ = 0;

  for (std::int64_t i = loss.node_; i >= 0; --i) {
    auto& g = grads[static_cast<std::size_t>(i)];
    if (g.empty()) continue;
    ++last_visits_;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    const std::span<const double> gout(g);

    switch (n.op) {
      case Op::Leaf:
        result.by_node_.emplace(i, Tensor(n.shape, std::move(g)));
        break;

      case Op::Add:
      case Op::Sub: {
        const double sign_b = n.op == Op::Sub ? -1.0 : 1.0;
        if (n.inputs[0] >= 0)
          accumulate_broadcast(acc(n.inputs[0]), gout, 1.0, nullptr, shape_numel(n.input_shapes[0]) == 1 && gout.size() != 1);
        if (n.inputs[1] >= 0)
          accumulate_broadcast(acc(n.inputs[1]), gout, sign_b, nullptr, shape_numel(n.input_shapes[1]) == 1 && gout.size() != 1);
        break;
      }

      case Op::Mul: {
        // d(a*b)/da = b, d(a*b)/db = a
        if (n.inputs[0] >= 0)
          accumulate_broadcast(acc(n.inputs[0]), gout, 1.0, &n.saved1, n.saved0.size() == 1 && gout.size() != 1);
        if (n.inputs[1] >= 0)
          accumulate_broadcast(acc(n.inputs[1]), gout, 1.0, &n.saved0, n.saved1.size() == 1 && gout.size() != 1);
        break;
      }

      case Op::Div: {
        const auto& a = n.saved0;
        const auto& b = n.saved1;
        const std::size_t m = gout.size();
        auto av = [&](std::size_t k) { return a[a.size() == 1 ? 0 : k]; };
        auto bv = [&](std::size_t k) { return b[b.size() == 1 ? 0 : k]; };
        if (n.inputs[0] >= 0) {
          auto& da = acc(n.inputs[0]);
          for (std::size_t k = 0; k < m; ++k) da[a.size() == 1 ? 0 : k] += gout[k] / bv(k);
        }
        if (n.inputs[1] >= 0) {
          auto& db = acc(n.inputs[1]);
          for (std::size_t k = 0; k < m; ++k) db[b.size() == 1 ? 0 : k] -= gout[k] * av(k) / (bv(k) * bv(k));
        }
        break;
      }

      case Op::Scale: {
        auto& dx = acc(n.inputs[0]);
        for (std::size_t k = 0; k < gout.size(); ++k) dx[k] += n.a * gout[k];
        break;
      }

      case Op::Offset: {
        auto& dx = acc(n.inputs[0]);
        for (std::size_t k = 0; k < gout.size(); ++k) dx[k] += gout[k];
        break;
      }

      case Op::Matmul: {
        const auto& sa = n.input_shapes[0];
        const auto& sb = n.input_shapes[1];
        const auto m = static_cast<Eigen::Index>(sa[0]);
        const auto k = static_cast<Eigen::Index>(sa[1]);
        const auto c = static_cast<Eigen::Index>(sb[1]);
        ConstMap G(gout.data(), m, c);
        if (n.inputs[0] >= 0) {
          MutMap da(acc(n.inputs[0]).data(), m, k);
          da.noalias() += G * ConstMap(n.saved1.data(), k, c).transpose();
        }
        if (n.inputs[1] >= 0) {
          MutMap db(acc(n.inputs[1]).data(), k, c);
          db.noalias() += ConstMap(n.saved0.data(), m, k).transpose() * G;
        }
        break;
      }

      case Op::Linear: {
        const auto& sx = n.input_shapes[0];
        const auto m = static_cast<Eigen::Index>(sx[0]);
        const auto k = static_cast<Eigen::Index>(sx[1]);
        const auto c = static_cast<Eigen::Index>(n.shape[1]);
        ConstMap G(gout.data(), m, c);
        if (n.inputs[0] >= 0) {
          MutMap dx(acc(n.inputs[0]).data(), m, k);
          dx.noalias() += G * ConstMap(n.saved1.data(), k, c).transpose();
        }
        if (n.inputs[1] >= 0) {
          MutMap dw(acc(n.inputs[1]).data(), k, c);
          dw.noalias() += ConstMap(n.saved0.data(), m, k).transpose() * G;
        }
        if (n.inputs[2] >= 0) {
          Eigen::Map<Eigen::RowVectorXd> db(acc(n.inputs[2]).data(), c);
          db += G.colwise().sum();
        }
        break;
      }

      case Op::LeakyRelu: {
        auto& dx = acc(n.inputs[0]);
        for (std::size_t k = 0; k < gout.size(); ++k) dx[k] += gout[k] * (n.saved0[k] > 0.0 ? 1.0 : n.a);
        break;
      }

      case Op::Tanh: {
        auto& dx = acc(n.inputs[0]);
        for (std::size_t k = 0; k < gout.size(); ++k) {
          const double y = n.saved0[k];
          dx[k] += gout[k] * (1.0 - y * y);
        }
        break;
      }

      case Op::Sigmoid: {
        auto& dx = acc(n.inputs[0]);
        for (std::size_t k = 0; k < gout.size(); ++k) {
          const double y = n.saved0[k];
          dx[k] += gout[k] * y * (1.0 - y);
        }
        break;
      }

      case Op::Exp: {
        auto& dx = acc(n.inputs[0]);
        for (std::size_t k = 0; k < gout.size(); ++k) dx[k] += gout[k] * n.saved0[k];
        break;
      }

      case Op::Log: {
        auto& dx = acc(n.inputs[0]);
        for (std::size_t k = 0; k < gout.size(); ++k) dx[k] += gout[k] / n.saved0[k];
        break;
      }

      case Op::Square: {
        auto& dx = acc(n.inputs[0]);
        for (std::size_t k = 0; k < gout.size(); ++k) dx[k] += 2.0 * gout[k] * n.saved0[k];
        break;
      }

      case Op::Clamp: {
        auto& dx = acc(n.inputs[0]);
        for (std::size_t k = 0; k < gout.size(); ++k) {
          const double x = n.saved0[k];
          if (x > n.a && x < n.b) dx[k] += gout[k];
        }
        break;
      }

      case Op::Sum: {
        auto& dx = acc(n.inputs[0]);
        for (double& v : dx) v += gout[0];
        break;
      }

      case Op::SumAxis: {
        const auto& s = n.input_shapes[0];
        auto& dx = acc(n.inputs[0]);
        for (std::size_t r = 0; r < s[0]; ++r)
          for (std::size_t c = 0; c < s[1]; ++c) dx[r * s[1] + c] += gout[n.index == 0 ? c : r];
        break;
      }

      case Op::ConcatCols: {
        const std::size_t rows = n.shape[0];
        const std::size_t total = n.shape[1];
        std::size_t col0 = 0;
        for (std::size_t p = 0; p < n.inputs.size(); ++p) {
          const std::size_t w = n.input_shapes[p][1];
          if (n.inputs[p] >= 0) {
            auto& dx = acc(n.inputs[p]);
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t c = 0; c < w; ++c) dx[r * w + c] += gout[r * total + col0 + c];
          }
          col0 += w;
        }
        break;
      }

      case Op::ConcatRows: {
        std::size_t off = 0;
        for (std::size_t p = 0; p < n.inputs.size(); ++p) {
          const std::size_t len = shape_numel(n.input_shapes[p]);
          if (n.inputs[p] >= 0) {
            auto& dx = acc(n.inputs[p]);
            for (std::size_t k = 0; k < len; ++k) dx[k] += gout[off + k];
          }
          off += len;
        }
        break;
      }

      case Op::SliceCols: {
        const auto& s = n.input_shapes[0];
        auto& dx = acc(n.inputs[0]);
        for (std::size_t r = 0; r < s[0]; ++r)
          for (std::size_t c = 0; c < n.extent; ++c) dx[r * s[1] + n.index + c] += gout[r * n.extent + c];
        break;
      }

      case Op::SliceRows: {
        const std::size_t w = n.input_shapes[0].size() > 1 ? n.input_shapes[0][1] : 1;
        auto& dx = acc(n.inputs[0]);
        for (std::size_t k = 0; k < gout.size(); ++k) dx[n.index * w + k] += gout[k];
        break;
      }

      case Op::Reshape: {
        auto& dx = acc(n.inputs[0]);
        for (std::size_t k = 0; k < gout.size(); ++k) dx[k] += gout[k];
        break;
      }

      case Op::Custom: {
        auto parts = n.custom(gout);
        for (std::size_t p = 0; p < n.inputs.size() && p < parts.size(); ++p) {
          if (n.inputs[p] < 0 || parts[p].empty()) continue;
          auto& dx = acc(n.inputs[p]);
          for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += parts[p][k];
        }
        break;
      }
    }
    if (n.op != Op::Leaf) std::vector<double>().swap(g);
  }

  clear();
  return result;
}

Recording::Recording(Tape& tape) : previous_(g_active) { g_active = &tape; }
Recording::~Recording() { g_active = previous_; }

// ---------------------------------------------------------------------------
// Ops

namespace {

Tape::Node make_node(Tape& tape, Tape::Op op, std::initializer_list<const Tensor*> inputs) {
  Tape::Node node;
  node.op = op;
  for (const Tensor* t : inputs) {
    node.inputs.push_back(tape.node_of(*t));
    node.input_shapes.push_back(t->shape());
  }
  return node;
}

Tensor binary(const Tensor& a, const Tensor& b, Tape::Op op, const char* name) {
  const Broadcast kind = broadcast_kind(a, b, name);
  Tensor out;
  switch (op) {
    case Tape::Op::Add: out = binary_forward(a, b, kind, std::plus<>()); break;
    case Tape::Op::Sub: out = binary_forward(a, b, kind, std::minus<>()); break;
    case Tape::Op::Mul: out = binary_forward(a, b, kind, std::multiplies<>()); break;
    case Tape::Op::Div:
      out = binary_forward(a, b, kind, std::divides<>());
      check_finite_result(out, name);
      break;
    default: throw std::logic_error("binary: bad op");
  }
  if (Tape* tape = recording_for({&a, &b})) {
    auto node = make_node(*tape, op, {&a, &b});
    if (op == Tape::Op::Mul || op == Tape::Op::Div) {
      node.saved0 = a.values();
      node.saved1 = b.values();
    }
    tape->attach(out, std::move(node));
  }
  return out;
}

template <typename F>
Tensor unary(const Tensor& x, Tape::Op op, F f, bool save_input, bool save_output, double a = 0.0,
             double b = 0.0) {
  Tensor out = unary_forward(x, f);
  if (Tape* tape = recording_for({&x})) {
    auto node = make_node(*tape, op, {&x});
    if (save_input) node.saved0 = x.values();
    if (save_output) node.saved0 = out.values();
    node.a = a;
    node.b = b;
    tape->attach(out, std::move(node));
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, Tape::Op::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, Tape::Op::Sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, Tape::Op::Mul, "mul"); }
Tensor div(const Tensor& a, const Tensor& b) { return binary(a, b, Tape::Op::Div, "div"); }

Tensor scale(const Tensor& x, double c) {
  return unary(x, Tape::Op::Scale, [c](double v) { return c * v; }, false, false, c);
}

Tensor offset(const Tensor& x, double c) {
  return unary(x, Tape::Op::Offset, [c](double v) { return v + c; }, false, false, c);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: inner extents differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(a.shape()[0]);
  const auto k = static_cast<Eigen::Index>(a.shape()[1]);
  const auto c = static_cast<Eigen::Index>(b.shape()[1]);
  Tensor out = Tensor::zeros({a.shape()[0], b.shape()[1]});
  MutMap(out.data().data(), m, c).noalias() = ConstMap(a.data().data(), m, k) * ConstMap(b.data().data(), k, c);
  if (Tape* tape = recording_for({&a, &b})) {
    auto node = make_node(*tape, Tape::Op::Matmul, {&a, &b});
    node.saved0 = a.values();
    node.saved1 = b.values();
    tape->attach(out, std::move(node));
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_matrix(x, "linear");
  require_matrix(weight, "linear");
  if (x.shape()[1] != weight.shape()[0] || bias.size() != weight.shape()[1] || bias.rank() != 1) {
    throw ShapeError("linear: input " + shape_str(x.shape()) + ", weight " + shape_str(weight.shape()) +
                     ", bias " + shape_str(bias.shape()));
  }
  const auto m = static_cast<Eigen::Index>(x.shape()[0]);
  const auto k = static_cast<Eigen::Index>(x.shape()[1]);
  const auto c = static_cast<Eigen::Index>(weight.shape()[1]);
  Tensor out = Tensor::zeros({x.shape()[0], weight.shape()[1]});
  MutMap o(out.data().data(), m, c);
  o.noalias() = ConstMap(x.data().data(), m, k) * ConstMap(weight.data().data(), k, c);
  o.rowwise() += ConstVec(bias.data().data(), c);
  if (Tape* tape = recording_for({&x, &weight, &bias})) {
    auto node = make_node(*tape, Tape::Op::Linear, {&x, &weight, &bias});
    node.saved0 = x.values();
    node.saved1 = weight.values();
    tape->attach(out, std::move(node));
  }
  return out;
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return unary(x, Tape::Op::LeakyRelu, [slope](double v) { return v > 0.0 ? v : slope * v; }, true, false, slope);
}

Tensor tanh(const Tensor& x) {
  return unary(x, Tape::Op::Tanh, [](double v) { return std::tanh(v); }, false, true);
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, Tape::Op::Sigmoid,
               [](double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
               false, true);
}

Tensor exp(const Tensor& x) {
  Tensor out = unary(x, Tape::Op::Exp, [](double v) { return std::exp(v); }, false, true);
  check_finite_result(out, "exp");
  return out;
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw NumericError("log: argument " + std::to_string(v) + " outside domain");
  }
  return unary(x, Tape::Op::Log, [](double v) { return std::log(v); }, true, false);
}

Tensor square(const Tensor& x) {
  return unary(x, Tape::Op::Square, [](double v) { return v * v; }, true, false);
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return unary(x, Tape::Op::Clamp, [lo, hi](double v) { return std::clamp(v, lo, hi); }, true, false, lo, hi);
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor out = Tensor::scalar(total);
  if (Tape* tape = recording_for({&x})) tape->attach(out, make_node(*tape, Tape::Op::Sum, {&x}));
  return out;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor sum(const Tensor& x, std::size_t axis) {
  if (x.rank() != 2 || axis > 1) {
    throw ShapeError("sum: axis " + std::to_string(axis) + " out of range for " + shape_str(x.shape()));
  }
  const std::size_t r = x.shape()[0];
  const std::size_t c = x.shape()[1];
  std::vector<double> out(axis == 0 ? c : r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[axis == 0 ? j : i] += x(i, j);
  Tensor result = Tensor::vector(std::move(out));
  if (Tape* tape = recording_for({&x})) {
    auto node = make_node(*tape, Tape::Op::SumAxis, {&x});
    node.index = axis;
    tape->attach(result, std::move(node));
  }
  return result;
}

Tensor mean(const Tensor& x, std::size_t axis) {
  Tensor s = sum(x, axis);
  return scale(s, 1.0 / static_cast<double>(x.shape()[axis]));
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = require_matrix(parts[0], "concat_cols")[0];
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (require_matrix(p, "concat_cols")[0] != rows) {
      throw ShapeError("concat_cols: row mismatch " + shape_str(parts[0].shape()) + " vs " + shape_str(p.shape()));
    }
    total += p.shape()[1];
  }
  Tensor out = Tensor::zeros({rows, total});
  std::size_t col0 = 0;
  for (const Tensor& p : parts) {
    const std::size_t w = p.shape()[1];
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(p.data().begin() + static_cast<std::ptrdiff_t>(r * w), w,
                  out.data().begin() + static_cast<std::ptrdiff_t>(r * total + col0));
    col0 += w;
  }
  if (Tape* tape = recording_for(parts)) {
    Tape::Node node;
    node.op = Tape::Op::ConcatCols;
    for (const Tensor& p : parts) {
      node.inputs.push_back(tape->node_of(p));
      node.input_shapes.push_back(p.shape());
    }
    tape->attach(out, std::move(node));
  }
  return out;
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = require_matrix(parts[0], "concat_rows")[1];
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    if (require_matrix(p, "concat_rows")[1] != cols) {
      throw ShapeError("concat_rows: column mismatch " + shape_str(parts[0].shape()) + " vs " + shape_str(p.shape()));
    }
    rows += p.shape()[0];
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const Tensor& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
  Tensor out({rows, cols}, std::move(data));
  if (Tape* tape = recording_for(parts)) {
    Tape::Node node;
    node.op = Tape::Op::ConcatRows;
    for (const Tensor& p : parts) {
      node.inputs.push_back(tape->node_of(p));
      node.input_shapes.push_back(p.shape());
    }
    tape->attach(out, std::move(node));
  }
  return out;
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  const auto& s = require_matrix(x, "slice_cols");
  if (count == 0 || begin + count > s[1]) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", +" + std::to_string(count) + ") out of " +
                     shape_str(s));
  }
  Tensor out = Tensor::zeros({s[0], count});
  for (std::size_t r = 0; r < s[0]; ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = x(r, begin + c);
  if (Tape* tape = recording_for({&x})) {
    auto node = make_node(*tape, Tape::Op::SliceCols, {&x});
    node.index = begin;
    node.extent = count;
    tape->attach(out, std::move(node));
  }
  return out;
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  if (x.rank() == 0 || count == 0 || begin + count > x.shape()[0]) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", +" + std::to_string(count) + ") out of " +
                     shape_str(x.shape()));
  }
  Shape shape = x.shape();
  shape[0] = count;
  const std::size_t w = x.size() / x.shape()[0];
  std::vector<double> data(x.data().begin() + static_cast<std::ptrdiff_t>(begin * w),
                           x.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * w));
  Tensor out(std::move(shape), std::move(data));
  if (Tape* tape = recording_for({&x})) {
    auto node = make_node(*tape, Tape::Op::SliceRows, {&x});
    node.index = begin;
    tape->attach(out, std::move(node));
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.size()) {
    throw ShapeError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  Tensor out(std::move(shape), x.values());
  if (Tape* tape = recording_for({&x})) tape->attach(out, make_node(*tape, Tape::Op::Reshape, {&x}));
  return out;
}

Tensor custom_op(Tensor result, std::span<const Tensor* const> inputs, CustomBackward backward) {
  Tape* tape = g_active;
  if (tape == nullptr) return result;
  bool any = false;
  for (const Tensor* t : inputs) any = any || tape->tracks(*t);
  if (!any) return result;
  Tape::Node node;
  node.op = Tape::Op::Custom;
  for (const Tensor* t : inputs) {
    node.inputs.push_back(tape->node_of(*t));
    node.input_shapes.push_back(t->shape());
  }
  node.custom = std::move(backward);
  tape->attach(result, std::move(node));
  return result;
}

}  // namespace neurint
