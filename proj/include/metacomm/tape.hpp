// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "metacomm/dual.hpp"

namespace metacomm::ad {

/// Raised when a forward value stops being finite. `layer()` names the scope
/// that was active when the offending node was recorded.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(std::string layer)
      : std::runtime_error("non-finite value in layer '" + layer + "'"), layer_(std::move(layer)) {}
  const std::string& layer() const { return layer_; }

 private:
  std::string layer_;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Var {
  std::size_t id = 0;
};

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

namespace detail {
inline bool finite(double x) { return std::isfinite(x); }
inline bool finite(const Dual& x) { return isfinite(x); }
using std::exp;
using std::log;
using std::sqrt;
using std::tanh;
using ad::exp;
using ad::log;
using ad::sqrt;
using ad::tanh;
}  // namespace detail

/// Single-use record of row-batched primitive operations.
///
/// Every value is a row-major matrix; rows index samples of a batch. Nodes
/// are appended in evaluation order, so the node list is already
/// topologically sorted and the backward sweep is one reverse pass.
///
/// The primitive set is closed: affine, ReLU, tanh, elementwise add, scale,
/// per-row power normalization, per-row complex linear convolution, column
/// windows, fused softmax cross-entropy and the inner product.
///
/// ReLU uses 0 as its derivative at the kink.
template <class T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;

  /// Scope label attached to every node recorded from now on.
  void set_scope(std::string scope) { scope_ = std::move(scope); }

  Var input(std::vector<T> values, std::size_t rows, std::size_t cols) {
    if (values.size() != rows * cols) throw ShapeError("input: value count does not match shape");
    return push(Op::kInput, {rows, cols}, std::move(values), {}, 0, true);
  }

  Var constant(std::span<const double> values, std::size_t rows, std::size_t cols) {
    if (values.size() != rows * cols) throw ShapeError("constant: value count does not match shape");
    std::vector<T> v(values.begin(), values.end());
    return push(Op::kConstant, {rows, cols}, std::move(v), {}, 0, false);
  }

  Var slice(Var x, std::size_t offset, std::size_t rows, std::size_t cols) {
    const auto& xv = node(x).value;
    if (offset + rows * cols > xv.size()) throw ShapeError("slice: out of range");
    std::vector<T> v(xv.begin() + static_cast<std::ptrdiff_t>(offset),
                     xv.begin() + static_cast<std::ptrdiff_t>(offset + rows * cols));
    Var out = push(Op::kSlice, {rows, cols}, std::move(v), {x.id}, 1, false);
    nodes_[out.id].offset = offset;
    return out;
  }

  /// out[r] = W x[r] + b with W stored (out x in) row-major and b as (1 x out).
  Var affine(Var x, Var w, Var b) {
    const Shape xs = shape(x), ws = shape(w), bs = shape(b);
    if (ws.cols != xs.cols || bs.size() != ws.rows) throw ShapeError("affine: incompatible shapes");
    const std::size_t rows = xs.rows, in = xs.cols, out = ws.rows;
    const auto& xv = node(x).value;
    const auto& wv = node(w).value;
    const auto& bv = node(b).value;
    std::vector<T> v(rows * out);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t o = 0; o < out; ++o) {
        T acc = bv[o];
        for (std::size_t i = 0; i < in; ++i) acc += wv[o * in + i] * xv[r * in + i];
        v[r * out + o] = acc;
      }
    }
    return push(Op::kAffine, {rows, out}, std::move(v), {x.id, w.id, b.id}, 3, false);
  }

  Var relu(Var x) {
    std::vector<T> v = node(x).value;
    for (auto& e : v) {
      if (!(e > T(0.0))) e = T(0.0);
    }
    return push(Op::kRelu, shape(x), std::move(v), {x.id}, 1, false);
  }

  Var tanh(Var x) {
    std::vector<T> v = node(x).value;
    for (auto& e : v) e = detail::tanh(e);
    return push(Op::kTanh, shape(x), std::move(v), {x.id}, 1, false);
  }

  Var add(Var a, Var b) {
    if (!(shape(a) == shape(b))) throw ShapeError("add: shape mismatch");
    std::vector<T> v = node(a).value;
    const auto& bv = node(b).value;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += bv[i];
    return push(Op::kAdd, shape(a), std::move(v), {a.id, b.id}, 2, false);
  }

  Var scale(Var a, double factor) {
    std::vector<T> v = node(a).value;
    for (auto& e : v) e *= T(factor);
    Var out = push(Op::kScale, shape(a), std::move(v), {a.id}, 1, false);
    nodes_[out.id].coeff = factor;
    return out;
  }

  /// Rescales each row to squared norm `energy`: x * sqrt(energy) / max(|x|, 1e-12).
  Var power_normalize(Var x, double energy) {
    const Shape s = shape(x);
    std::vector<T> v = node(x).value;
    std::vector<T> norms(s.rows);
    const T target = detail::sqrt(T(energy));
    for (std::size_t r = 0; r < s.rows; ++r) {
      T sq(0.0);
      for (std::size_t c = 0; c < s.cols; ++c) sq += v[r * s.cols + c] * v[r * s.cols + c];
      // sqrt has an infinite derivative at 0, the guard branch never needs it
      const T norm = value_of(sq) > 0.0 ? detail::sqrt(sq) : T(0.0);
      norms[r] = norm;
      const T factor = target / (value_of(norm) > kNormFloor ? norm : T(kNormFloor));
      for (std::size_t c = 0; c < s.cols; ++c) v[r * s.cols + c] *= factor;
    }
    Var out = push(Op::kNormalize, s, std::move(v), {x.id}, 1, false);
    nodes_[out.id].cache = std::move(norms);
    nodes_[out.id].coeff = energy;
    return out;
  }

  /// Row-wise full linear convolution of complex sequences stored as
  /// interleaved (re, im) pairs. Either operand may have a single row, which
  /// is then shared by all rows of the other.
  Var complex_conv(Var a, Var b) {
    const Shape as = shape(a), bs = shape(b);
    if (as.cols % 2 != 0 || bs.cols % 2 != 0 || as.cols == 0 || bs.cols == 0) {
      throw ShapeError("complex_conv: operands must hold complex pairs");
    }
    const std::size_t rows = std::max(as.rows, bs.rows);
    if ((as.rows != rows && as.rows != 1) || (bs.rows != rows && bs.rows != 1)) {
      throw ShapeError("complex_conv: row counts not broadcastable");
    }
    const std::size_t la = as.cols / 2, lb = bs.cols / 2, lo = la + lb - 1;
    const auto& av = node(a).value;
    const auto& bv = node(b).value;
    std::vector<T> v(rows * 2 * lo, T(0.0));
    for (std::size_t r = 0; r < rows; ++r) {
      const T* ar = av.data() + (as.rows == 1 ? 0 : r) * as.cols;
      const T* br = bv.data() + (bs.rows == 1 ? 0 : r) * bs.cols;
      T* orow = v.data() + r * 2 * lo;
      for (std::size_t i = 0; i < la; ++i) {
        for (std::size_t j = 0; j < lb; ++j) {
          const T& are = ar[2 * i];
          const T& aim = ar[2 * i + 1];
          const T& bre = br[2 * j];
          const T& bim = br[2 * j + 1];
          orow[2 * (i + j)] += are * bre - aim * bim;
          orow[2 * (i + j) + 1] += are * bim + aim * bre;
        }
      }
    }
    return push(Op::kConv, {rows, 2 * lo}, std::move(v), {a.id, b.id}, 2, false);
  }

  Var take_columns(Var x, std::size_t start, std::size_t count) {
    const Shape s = shape(x);
    if (start + count > s.cols) throw ShapeError("take_columns: window out of range");
    const auto& xv = node(x).value;
    std::vector<T> v(s.rows * count);
    for (std::size_t r = 0; r < s.rows; ++r) {
      for (std::size_t c = 0; c < count; ++c) v[r * count + c] = xv[r * s.cols + start + c];
    }
    Var out = push(Op::kColumns, {s.rows, count}, std::move(v), {x.id}, 1, false);
    nodes_[out.id].offset = start;
    return out;
  }

  /// Mean over rows of -log softmax(logits[r])[labels[r]], computed through
  /// log-sum-exp with max subtraction.
  Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
    const Shape s = shape(logits);
    if (labels.size() != s.rows) throw ShapeError("softmax_cross_entropy: one label per row");
    const auto& z = node(logits).value;
    std::vector<T> probs(s.size());
    T total(0.0);
    for (std::size_t r = 0; r < s.rows; ++r) {
      const int label = labels[r];
      if (label < 0 || static_cast<std::size_t>(label) >= s.cols) {
        throw ShapeError("softmax_cross_entropy: label out of range");
      }
      const T* zr = z.data() + r * s.cols;
      T peak = zr[0];
      for (std::size_t c = 1; c < s.cols; ++c) {
        if (zr[c] > peak) peak = zr[c];
      }
      T sum(0.0);
      for (std::size_t c = 0; c < s.cols; ++c) {
        probs[r * s.cols + c] = detail::exp(zr[c] - peak);
        sum += probs[r * s.cols + c];
      }
      for (std::size_t c = 0; c < s.cols; ++c) probs[r * s.cols + c] /= sum;
      total += detail::log(sum) + peak - zr[label];
    }
    total /= T(static_cast<double>(s.rows));
    Var out = push(Op::kSoftmaxCe, {1, 1}, {total}, {logits.id}, 1, false);
    nodes_[out.id].cache = std::move(probs);
    nodes_[out.id].labels.assign(labels.begin(), labels.end());
    return out;
  }

  Var dot(Var a, Var b) {
    if (shape(a).size() != shape(b).size()) throw ShapeError("dot: size mismatch");
    const auto& av = node(a).value;
    const auto& bv = node(b).value;
    T acc(0.0);
    for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
    return push(Op::kDot, {1, 1}, {acc}, {a.id, b.id}, 2, false);
  }

  const std::vector<T>& value(Var x) const { return node(x).value; }
  Shape shape(Var x) const { return node(x).shape; }
  std::size_t node_count() const { return nodes_.size(); }

  /// Reverse sweep from a scalar output; returns d output / d `wrt`.
  std::vector<T> gradient(Var output, Var wrt) const {
    auto adj = backward(output);
    if (adj[wrt.id].empty()) return std::vector<T>(node(wrt).value.size(), T(0.0));
    return std::move(adj[wrt.id]);
  }

  /// Adjoints of every node with respect to the scalar `output`. Nodes that
  /// are unreachable or not differentiable keep an empty adjoint.
  std::vector<std::vector<T>> backward(Var output) const {
    if (node(output).shape.size() != 1) throw ShapeError("backward: output must be scalar");
    std::vector<std::vector<T>> adj(nodes_.size());
    adj[output.id] = {T(1.0)};
    for (std::size_t id = output.id + 1; id-- > 0;) {
      const Node& nd = nodes_[id];
      if (adj[id].empty() || !nd.needs_grad) continue;
      propagate(nd, adj[id], adj);
    }
    return adj;
  }

 private:
  static constexpr double kNormFloor = 1e-12;

  enum class Op { kInput, kConstant, kSlice, kAffine, kRelu, kTanh, kAdd, kScale, kNormalize, kConv, kColumns,
                  kSoftmaxCe, kDot };

  struct Node {
    Op op = Op::kConstant;
    Shape shape;
    std::vector<T> value;
    std::array<std::size_t, 3> args{};
    std::size_t arity = 0;
    bool needs_grad = false;
    std::size_t offset = 0;
    double coeff = 0.0;
    std::vector<T> cache;
    std::vector<int> labels;
  };

  const Node& node(Var x) const {
    if (x.id >= nodes_.size()) throw std::out_of_range("tape: unknown variable");
    return nodes_[x.id];
  }

  Var push(Op op, Shape s, std::vector<T> value, std::initializer_list<std::size_t> args, std::size_t arity,
           bool leaf_grad) {
    for (const auto& e : value) {
      if (!detail::finite(e)) throw NumericError(scope_.empty() ? std::string("<unscoped>") : scope_);
    }
    Node nd;
    nd.op = op;
    nd.shape = s;
    nd.value = std::move(value);
    nd.arity = arity;
    nd.needs_grad = leaf_grad;
    std::size_t i = 0;
    for (auto a : args) {
      nd.args[i++] = a;
      nd.needs_grad = nd.needs_grad || nodes_[a].needs_grad;
    }
    nodes_.push_back(std::move(nd));
    return Var{nodes_.size() - 1};
  }

  std::vector<T>& adj_of(std::vector<std::vector<T>>& adj, std::size_t id) const {
    if (adj[id].empty()) adj[id].assign(nodes_[id].value.size(), T(0.0));
    return adj[id];
  }

  void propagate(const Node& nd, const std::vector<T>& g, std::vector<std::vector<T>>& adj) const {
    auto wants = [&](std::size_t k) { return nodes_[nd.args[k]].needs_grad; };
    switch (nd.op) {
      case Op::kInput:
      case Op::kConstant:
        break;
      case Op::kSlice: {
        auto& ax = adj_of(adj, nd.args[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ax[nd.offset + i] += g[i];
        break;
      }
      case Op::kAffine: {
        const Node& x = nodes_[nd.args[0]];
        const Node& w = nodes_[nd.args[1]];
        const std::size_t rows = x.shape.rows, in = x.shape.cols, out = w.shape.rows;
        if (wants(0)) {
          auto& ax = adj_of(adj, nd.args[0]);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t o = 0; o < out; ++o)
              for (std::size_t i = 0; i < in; ++i) ax[r * in + i] += w.value[o * in + i] * g[r * out + o];
        }
        if (wants(1)) {
          auto& aw = adj_of(adj, nd.args[1]);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t o = 0; o < out; ++o)
              for (std::size_t i = 0; i < in; ++i) aw[o * in + i] += g[r * out + o] * x.value[r * in + i];
        }
        if (wants(2)) {
          auto& ab = adj_of(adj, nd.args[2]);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t o = 0; o < out; ++o) ab[o] += g[r * out + o];
        }
        break;
      }
      case Op::kRelu: {
        const Node& x = nodes_[nd.args[0]];
        auto& ax = adj_of(adj, nd.args[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (x.value[i] > T(0.0)) ax[i] += g[i];
        }
        break;
      }
      case Op::kTanh: {
        auto& ax = adj_of(adj, nd.args[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ax[i] += g[i] * (T(1.0) - nd.value[i] * nd.value[i]);
        break;
      }
      case Op::kAdd: {
        for (std::size_t k = 0; k < 2; ++k) {
          if (!wants(k)) continue;
          auto& a = adj_of(adj, nd.args[k]);
          for (std::size_t i = 0; i < g.size(); ++i) a[i] += g[i];
        }
        break;
      }
      case Op::kScale: {
        auto& ax = adj_of(adj, nd.args[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ax[i] += g[i] * T(nd.coeff);
        break;
      }
      case Op::kNormalize: {
        const Node& x = nodes_[nd.args[0]];
        auto& ax = adj_of(adj, nd.args[0]);
        const std::size_t cols = nd.shape.cols;
        const T target = detail::sqrt(T(nd.coeff));
        for (std::size_t r = 0; r < nd.shape.rows; ++r) {
          const T& norm = nd.cache[r];
          const T* xr = x.value.data() + r * cols;
          const T* gr = g.data() + r * cols;
          T* ar = ax.data() + r * cols;
          if (value_of(norm) > kNormFloor) {
            const T factor = target / norm;
            T xg(0.0);
            for (std::size_t c = 0; c < cols; ++c) xg += xr[c] * gr[c];
            const T proj = xg / (norm * norm);
            for (std::size_t c = 0; c < cols; ++c) ar[c] += factor * (gr[c] - xr[c] * proj);
          } else {
            const T factor = target / T(kNormFloor);
            for (std::size_t c = 0; c < cols; ++c) ar[c] += factor * gr[c];
          }
        }
        break;
      }
      case Op::kConv: {
        const Node& a = nodes_[nd.args[0]];
        const Node& b = nodes_[nd.args[1]];
        const std::size_t la = a.shape.cols / 2, lb = b.shape.cols / 2, lo = la + lb - 1;
        const bool wa = wants(0), wb = wants(1);
        std::vector<T>* aa = wa ? &adj_of(adj, nd.args[0]) : nullptr;
        std::vector<T>* ab = wb ? &adj_of(adj, nd.args[1]) : nullptr;
        for (std::size_t r = 0; r < nd.shape.rows; ++r) {
          const std::size_t ra = a.shape.rows == 1 ? 0 : r;
          const std::size_t rb = b.shape.rows == 1 ? 0 : r;
          const T* av = a.value.data() + ra * a.shape.cols;
          const T* bv = b.value.data() + rb * b.shape.cols;
          const T* gr = g.data() + r * 2 * lo;
          for (std::size_t i = 0; i < la; ++i) {
            for (std::size_t j = 0; j < lb; ++j) {
              const T& gre = gr[2 * (i + j)];
              const T& gim = gr[2 * (i + j) + 1];
              // real-valued loss: d/d(a) = g * conj(b), d/d(b) = g * conj(a)
              if (wa) {
                T* dst = aa->data() + ra * a.shape.cols;
                dst[2 * i] += gre * bv[2 * j] + gim * bv[2 * j + 1];
                dst[2 * i + 1] += gim * bv[2 * j] - gre * bv[2 * j + 1];
              }
              if (wb) {
                T* dst = ab->data() + rb * b.shape.cols;
                dst[2 * j] += gre * av[2 * i] + gim * av[2 * i + 1];
                dst[2 * j + 1] += gim * av[2 * i] - gre * av[2 * i + 1];
              }
            }
          }
        }
        break;
      }
      case Op::kColumns: {
        const Node& x = nodes_[nd.args[0]];
        auto& ax = adj_of(adj, nd.args[0]);
        const std::size_t count = nd.shape.cols;
        for (std::size_t r = 0; r < nd.shape.rows; ++r)
          for (std::size_t c = 0; c < count; ++c) ax[r * x.shape.cols + nd.offset + c] += g[r * count + c];
        break;
      }
      case Op::kSoftmaxCe: {
        const Node& z = nodes_[nd.args[0]];
        auto& az = adj_of(adj, nd.args[0]);
        const std::size_t rows = z.shape.rows, cols = z.shape.cols;
        const T scale = g[0] / T(static_cast<double>(rows));
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            T d = nd.cache[r * cols + c];
            if (static_cast<int>(c) == nd.labels[r]) d -= T(1.0);
            az[r * cols + c] += scale * d;
          }
        }
        break;
      }
      case Op::kDot: {
        const Node& a = nodes_[nd.args[0]];
        const Node& b = nodes_[nd.args[1]];
        if (wants(0)) {
          auto& aa = adj_of(adj, nd.args[0]);
          for (std::size_t i = 0; i < aa.size(); ++i) aa[i] += g[0] * b.value[i];
        }
        if (wants(1)) {
          auto& ab = adj_of(adj, nd.args[1]);
          for (std::size_t i = 0; i < ab.size(); ++i) ab[i] += g[0] * a.value[i];
        }
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::string scope_;
};

}  // namespace metacomm::ad
