// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal deterministic tensor library with reverse-mode automatic
// differentiation. Tensors are rank-1 or rank-2, row-major, and form a DAG
// of shared nodes; backward() runs an iterative topological sweep from a
// scalar root. The scalar type is a template parameter: float for training,
// double for finite-difference gradient verification.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "adlr/errors.hpp"
#include "adlr/rng.hpp"

namespace adlr {

using Shape = std::vector<size_t>;

inline size_t shape_size(const Shape& s) {
  size_t n = 1;
  for (size_t e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

[[noreturn]] inline void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) +
                   " and " + shape_str(b));
}

// When gradient tracking is disabled, ops compute values but record no
// graph edges. Used for frozen-model inference and evaluation loops.
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

class NoGradGuard {
 public:
  NoGradGuard() : prev_(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename S>
struct TensorNode {
  Shape shape;
  std::vector<S> value;
  std::vector<S> grad;  // sized on first accumulation
  bool requires_grad = false;
  std::string name;  // non-empty for named parameters
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Reads this->grad and accumulates into parents' grads. Closures capture
  // only value data (ids, masks, cached statistics) — never owning node
  // references; ownership lives solely in `parents` so destruction can be
  // flattened iteratively below.
  std::function<void(TensorNode&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), S(0));
  }

  ~TensorNode() {
    // Long chains (LSTM over hundreds of steps) would otherwise recurse.
    std::vector<std::shared_ptr<TensorNode>> stack(
        std::make_move_iterator(parents.begin()),
        std::make_move_iterator(parents.end()));
    parents.clear();
    while (!stack.empty()) {
      std::shared_ptr<TensorNode> p = std::move(stack.back());
      stack.pop_back();
      if (p && p.use_count() == 1) {
        for (auto& gp : p->parents) stack.push_back(std::move(gp));
        p->parents.clear();
      }
    }
  }
};

template <typename S>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), S(0), requires_grad);
  }

  static Tensor filled(Shape shape, S v, bool requires_grad = false) {
    auto n = std::make_shared<TensorNode<S>>();
    n->value.assign(shape_size(shape), v);
    n->shape = std::move(shape);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor from(Shape shape, std::vector<S> data, bool requires_grad = false) {
    if (shape_size(shape) != data.size())
      throw ShapeError("Tensor::from: data size " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    auto n = std::make_shared<TensorNode<S>>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor scalar(S v) { return from({1, 1}, {v}); }

  // Named trainable parameter.
  static Tensor param(Shape shape, std::vector<S> data, std::string name) {
    Tensor t = from(std::move(shape), std::move(data), true);
    t.node_->name = std::move(name);
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  size_t size() const { return node_->value.size(); }
  size_t rows() const { return node_->shape.size() == 2 ? node_->shape[0] : 1; }
  size_t cols() const {
    return node_->shape.size() == 2 ? node_->shape[1] : node_->shape[0];
  }

  std::span<const S> data() const { return node_->value; }
  std::span<S> mutable_data() { return node_->value; }
  bool requires_grad() const { return node_->requires_grad; }
  const std::string& name() const { return node_->name; }

  std::span<const S> grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  std::span<S> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad.assign(node_->value.size(), S(0)); }

  S item() const {
    if (size() != 1)
      throw ShapeError("Tensor::item: tensor has " + std::to_string(size()) +
                       " elements");
    return node_->value[0];
  }

  S at(size_t r, size_t c) const { return node_->value[r * cols() + c]; }

  // Reverse-mode sweep from a scalar root.
  void backward() {
    if (size() != 1) throw ShapeError("backward: root must be a scalar");
    if (!node_->requires_grad) return;

    // Iterative post-order: parents appear before descendants.
    std::vector<TensorNode<S>*> order;
    std::unordered_set<TensorNode<S>*> done;
    struct Frame {
      TensorNode<S>* n;
      size_t next;
    };
    std::vector<Frame> stack{{node_.get(), 0}};
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < f.n->parents.size()) {
        TensorNode<S>* p = f.n->parents[f.next++].get();
        if (p->requires_grad && !done.contains(p)) stack.push_back({p, 0});
      } else {
        if (done.insert(f.n).second) order.push_back(f.n);
        stack.pop_back();
      }
    }

    node_->ensure_grad();
    node_->grad[0] += S(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }
  }

  std::shared_ptr<TensorNode<S>> node() const { return node_; }

  explicit Tensor(std::shared_ptr<TensorNode<S>> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<TensorNode<S>> node_;
};

namespace detail {

template <typename S>
Tensor<S> make_op(Shape shape, std::vector<S> value,
                  std::initializer_list<Tensor<S>> inputs,
                  std::function<void(TensorNode<S>&)> backward_fn) {
  auto n = std::make_shared<TensorNode<S>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool track = grad_mode();
  bool any = false;
  if (track) {
    for (const auto& t : inputs) any = any || t.requires_grad();
  }
  if (any) {
    n->requires_grad = true;
    n->parents.reserve(inputs.size());
    for (const auto& t : inputs) n->parents.push_back(t.node());
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor<S>(std::move(n));
}

// Accumulate g into p's grad if p participates in the sweep.
template <typename S>
void accum(TensorNode<S>& p, const std::vector<S>& g) {
  if (!p.requires_grad) return;
  p.ensure_grad();
  for (size_t i = 0; i < g.size(); ++i) p.grad[i] += g[i];
}

}  // namespace detail

// ---------------------------------------------------------------- broadcast

// Supported elementwise forms: identical shapes, b a [1,n] row against
// [m,n], or b a scalar.
enum class Broadcast { same, row, scalar_b };

template <typename S>
Broadcast broadcast_kind(const char* op, const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() == b.shape()) return Broadcast::same;
  if (b.size() == 1) return Broadcast::scalar_b;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::row;
  shape_fail(op, a.shape(), b.shape());
}

// ------------------------------------------------------------- elementwise

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  Broadcast kind = broadcast_kind("add", a, b);
  std::vector<S> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  const size_t n = out.size(), bc = a.cols();
  switch (kind) {
    case Broadcast::same:
      for (size_t i = 0; i < n; ++i) out[i] += bd[i];
      break;
    case Broadcast::scalar_b:
      for (size_t i = 0; i < n; ++i) out[i] += bd[0];
      break;
    case Broadcast::row:
      for (size_t i = 0; i < n; ++i) out[i] += bd[i % bc];
      break;
  }
  return detail::make_op<S>(
      a.shape(), std::move(out), {a, b}, [kind, bc](TensorNode<S>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        detail::accum(pa, self.grad);
        if (!pb.requires_grad) return;
        pb.ensure_grad();
        switch (kind) {
          case Broadcast::same:
            for (size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i];
            break;
          case Broadcast::scalar_b:
            for (S g : self.grad) pb.grad[0] += g;
            break;
          case Broadcast::row:
            for (size_t i = 0; i < self.grad.size(); ++i)
              pb.grad[i % bc] += self.grad[i];
            break;
        }
      });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  Broadcast kind = broadcast_kind("mul", a, b);
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<S> out(ad.size());
  const size_t n = out.size(), bc = a.cols();
  switch (kind) {
    case Broadcast::same:
      for (size_t i = 0; i < n; ++i) out[i] = ad[i] * bd[i];
      break;
    case Broadcast::scalar_b:
      for (size_t i = 0; i < n; ++i) out[i] = ad[i] * bd[0];
      break;
    case Broadcast::row:
      for (size_t i = 0; i < n; ++i) out[i] = ad[i] * bd[i % bc];
      break;
  }
  return detail::make_op<S>(
      a.shape(), std::move(out), {a, b}, [kind, bc](TensorNode<S>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const auto& av = pa.value;
        const auto& bv = pb.value;
        if (pa.requires_grad) {
          pa.ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i) {
            S bvi = kind == Broadcast::same    ? bv[i]
                    : kind == Broadcast::scalar_b ? bv[0]
                                                  : bv[i % bc];
            pa.grad[i] += self.grad[i] * bvi;
          }
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i) {
            size_t j = kind == Broadcast::same    ? i
                       : kind == Broadcast::scalar_b ? 0
                                                     : i % bc;
            pb.grad[j] += self.grad[i] * av[i];
          }
        }
      });
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, S c) {
  std::vector<S> out(a.size());
  const auto ad = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * c;
  return detail::make_op<S>(a.shape(), std::move(out), {a},
                            [c](TensorNode<S>& self) {
                              auto& pa = *self.parents[0];
                              if (!pa.requires_grad) return;
                              pa.ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                pa.grad[i] += self.grad[i] * c;
                            });
}

template <typename S>
Tensor<S> neg(const Tensor<S>& a) {
  return scale(a, S(-1));
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  return add(a, neg(b));
}

// ------------------------------------------------------------------ matmul

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  const size_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  if (k != k2) shape_fail("matmul", a.shape(), b.shape());
  std::vector<S> out(m * n, S(0));
  {
    const S* A = a.data().data();
    const S* B = b.data().data();
    for (size_t i = 0; i < m; ++i) {
      S* Ci = out.data() + i * n;
      const S* Ai = A + i * k;
      for (size_t p = 0; p < k; ++p) {
        const S aip = Ai[p];
        const S* Bp = B + p * n;
        for (size_t j = 0; j < n; ++j) Ci[j] += aip * Bp[j];
      }
    }
  }
  return detail::make_op<S>(
      Shape{m, n}, std::move(out), {a, b}, [m, k, n](TensorNode<S>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const S* G = self.grad.data();
        if (pa.requires_grad) {
          pa.ensure_grad();
          // dA = dC * B^T
          const S* B = pb.value.data();
          for (size_t i = 0; i < m; ++i) {
            S* dAi = pa.grad.data() + i * k;
            const S* Gi = G + i * n;
            for (size_t p = 0; p < k; ++p) {
              const S* Bp = B + p * n;
              S acc = 0;
              for (size_t j = 0; j < n; ++j) acc += Gi[j] * Bp[j];
              dAi[p] += acc;
            }
          }
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          // dB = A^T * dC
          const S* A = pa.value.data();
          for (size_t i = 0; i < m; ++i) {
            const S* Ai = A + i * k;
            const S* Gi = G + i * n;
            for (size_t p = 0; p < k; ++p) {
              S* dBp = pb.grad.data() + p * n;
              const S aip = Ai[p];
              for (size_t j = 0; j < n; ++j) dBp[j] += aip * Gi[j];
            }
          }
        }
      });
}

template <typename S>
Tensor<S> transpose(const Tensor<S>& a) {
  const size_t m = a.rows(), n = a.cols();
  std::vector<S> out(m * n);
  const auto ad = a.data();
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) out[j * m + i] = ad[i * n + j];
  return detail::make_op<S>(Shape{n, m}, std::move(out), {a},
                            [m, n](TensorNode<S>& self) {
                              auto& pa = *self.parents[0];
                              if (!pa.requires_grad) return;
                              pa.ensure_grad();
                              for (size_t i = 0; i < m; ++i)
                                for (size_t j = 0; j < n; ++j)
                                  pa.grad[i * n + j] += self.grad[j * m + i];
                            });
}

// ----------------------------------------------------------- slice/concat

// Rectangular sub-block [r0, r1) x [c0, c1); returns a copy.
template <typename S>
Tensor<S> slice(const Tensor<S>& a, size_t r0, size_t r1, size_t c0, size_t c1) {
  const size_t m = a.rows(), n = a.cols();
  if (r1 > m || c1 > n || r0 >= r1 || c0 >= c1)
    throw ShapeError("slice: range [" + std::to_string(r0) + "," +
                     std::to_string(r1) + ")x[" + std::to_string(c0) + "," +
                     std::to_string(c1) + ") out of bounds for " +
                     shape_str(a.shape()));
  const size_t sm = r1 - r0, sn = c1 - c0;
  std::vector<S> out(sm * sn);
  const auto ad = a.data();
  for (size_t i = 0; i < sm; ++i)
    for (size_t j = 0; j < sn; ++j) out[i * sn + j] = ad[(r0 + i) * n + (c0 + j)];
  return detail::make_op<S>(Shape{sm, sn}, std::move(out), {a},
                            [r0, c0, sm, sn, n](TensorNode<S>& self) {
                              auto& pa = *self.parents[0];
                              if (!pa.requires_grad) return;
                              pa.ensure_grad();
                              for (size_t i = 0; i < sm; ++i)
                                for (size_t j = 0; j < sn; ++j)
                                  pa.grad[(r0 + i) * n + (c0 + j)] +=
                                      self.grad[i * sn + j];
                            });
}

template <typename S>
Tensor<S> row(const Tensor<S>& a, size_t r) {
  return slice(a, r, r + 1, 0, a.cols());
}

template <typename S>
Tensor<S> concat(const std::vector<Tensor<S>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  const size_t keep = axis == 0 ? parts[0].cols() : parts[0].rows();
  size_t total = 0;
  for (const auto& p : parts) {
    size_t pk = axis == 0 ? p.cols() : p.rows();
    if (pk != keep) shape_fail("concat", parts[0].shape(), p.shape());
    total += axis == 0 ? p.rows() : p.cols();
  }
  const size_t m = axis == 0 ? total : keep;
  const size_t n = axis == 0 ? keep : total;
  std::vector<S> out(m * n);
  size_t off = 0;
  for (const auto& p : parts) {
    const auto pd = p.data();
    if (axis == 0) {
      std::copy(pd.begin(), pd.end(), out.begin() + off * n);
      off += p.rows();
    } else {
      for (size_t i = 0; i < m; ++i)
        std::copy(pd.begin() + i * p.cols(), pd.begin() + (i + 1) * p.cols(),
                  out.begin() + i * n + off);
      off += p.cols();
    }
  }

  std::vector<size_t> extents;
  extents.reserve(parts.size());
  for (const auto& p : parts) extents.push_back(axis == 0 ? p.rows() : p.cols());

  auto node = std::make_shared<TensorNode<S>>();
  node->shape = Shape{m, n};
  node->value = std::move(out);
  bool any = false;
  if (grad_mode()) {
    for (const auto& p : parts) any = any || p.requires_grad();
  }
  if (any) {
    node->requires_grad = true;
    for (const auto& p : parts) node->parents.push_back(p.node());
    node->backward_fn = [axis, extents, m, n](TensorNode<S>& self) {
      size_t off = 0;
      for (size_t pi = 0; pi < self.parents.size(); ++pi) {
        auto& p = *self.parents[pi];
        const size_t ext = extents[pi];
        if (p.requires_grad) {
          p.ensure_grad();
          if (axis == 0) {
            for (size_t i = 0; i < ext * n; ++i) p.grad[i] += self.grad[off * n + i];
          } else {
            for (size_t i = 0; i < m; ++i)
              for (size_t j = 0; j < ext; ++j)
                p.grad[i * ext + j] += self.grad[i * n + off + j];
          }
        }
        off += ext;
      }
    };
  }
  return Tensor<S>(std::move(node));
}

template <typename S>
Tensor<S> concat_rows(const std::vector<Tensor<S>>& parts) {
  return concat(parts, 0);
}

template <typename S>
Tensor<S> concat_cols(const std::vector<Tensor<S>>& parts) {
  return concat(parts, 1);
}

// ------------------------------------------------------------- activations

namespace detail {

template <typename S, typename FwdFn, typename BwdFn>
Tensor<S> unary_op(const Tensor<S>& a, FwdFn f, BwdFn dfdx_from_xy) {
  std::vector<S> out(a.size());
  const auto ad = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = f(ad[i]);
  return make_op<S>(a.shape(), std::move(out), {a},
                    [dfdx_from_xy](TensorNode<S>& self) {
                      auto& pa = *self.parents[0];
                      if (!pa.requires_grad) return;
                      pa.ensure_grad();
                      for (size_t i = 0; i < self.grad.size(); ++i)
                        pa.grad[i] += self.grad[i] *
                                      dfdx_from_xy(pa.value[i], self.value[i]);
                    });
}

}  // namespace detail

template <typename S>
Tensor<S> tanh(const Tensor<S>& a) {
  return detail::unary_op(
      a, [](S x) { return std::tanh(x); },
      [](S, S y) { return S(1) - y * y; });
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& a) {
  return detail::unary_op(
      a, [](S x) { return S(1) / (S(1) + std::exp(-x)); },
      [](S, S y) { return y * (S(1) - y); });
}

// GELU, tanh approximation (the GPT-2 feed-forward nonlinearity).
template <typename S>
Tensor<S> gelu(const Tensor<S>& a) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  return detail::unary_op(
      a,
      [](S x) {
        double xd = static_cast<double>(x);
        double u = kC * (xd + kA * xd * xd * xd);
        return static_cast<S>(0.5 * xd * (1.0 + std::tanh(u)));
      },
      [](S x, S) {
        double xd = static_cast<double>(x);
        double u = kC * (xd + kA * xd * xd * xd);
        double t = std::tanh(u);
        double du = kC * (1.0 + 3.0 * kA * xd * xd);
        return static_cast<S>(0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t * t) * du);
      });
}

// -------------------------------------------------------------- reductions

template <typename S>
Tensor<S> sum_all(const Tensor<S>& a) {
  S total = 0;
  for (S v : a.data()) total += v;
  return detail::make_op<S>(Shape{1, 1}, {total}, {a}, [](TensorNode<S>& self) {
    auto& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (auto& g : pa.grad) g += self.grad[0];
  });
}

template <typename S>
Tensor<S> mean_all(const Tensor<S>& a) {
  return scale(sum_all(a), S(1) / static_cast<S>(a.size()));
}

// ----------------------------------------------------------------- softmax

// Softmax along the last axis of a rank<=2 tensor, with max subtraction.
// -inf inputs produce exact zeros.
template <typename S>
Tensor<S> softmax(const Tensor<S>& a) {
  const size_t m = a.rows(), n = a.cols();
  std::vector<S> out(m * n);
  const auto ad = a.data();
  for (size_t i = 0; i < m; ++i) {
    const S* xi = ad.data() + i * n;
    S* yi = out.data() + i * n;
    S mx = xi[0];
    for (size_t j = 1; j < n; ++j) mx = std::max(mx, xi[j]);
    S z = 0;
    for (size_t j = 0; j < n; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      z += yi[j];
    }
    for (size_t j = 0; j < n; ++j) yi[j] /= z;
  }
  return detail::make_op<S>(a.shape(), std::move(out), {a},
                            [m, n](TensorNode<S>& self) {
                              auto& pa = *self.parents[0];
                              if (!pa.requires_grad) return;
                              pa.ensure_grad();
                              for (size_t i = 0; i < m; ++i) {
                                const S* y = self.value.data() + i * n;
                                const S* g = self.grad.data() + i * n;
                                S dot = 0;
                                for (size_t j = 0; j < n; ++j) dot += y[j] * g[j];
                                S* dx = pa.grad.data() + i * n;
                                for (size_t j = 0; j < n; ++j)
                                  dx[j] += y[j] * (g[j] - dot);
                              }
                            });
}

// -------------------------------------------------------------- layer norm

// Per-row normalization over the last axis: y = (x - mu)/sqrt(var + eps) * g + b.
// gain and bias are [1, n] rows.
template <typename S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gain,
                     const Tensor<S>& bias, S eps = S(1e-5)) {
  const size_t m = x.rows(), n = x.cols();
  if (gain.size() != n) shape_fail("layer_norm(gain)", x.shape(), gain.shape());
  if (bias.size() != n) shape_fail("layer_norm(bias)", x.shape(), bias.shape());
  std::vector<S> out(m * n);
  std::vector<S> inv_std(m), mean(m);
  const auto xd = x.data();
  const auto gd = gain.data();
  const auto bd = bias.data();
  for (size_t i = 0; i < m; ++i) {
    const S* xi = xd.data() + i * n;
    S mu = 0;
    for (size_t j = 0; j < n; ++j) mu += xi[j];
    mu /= static_cast<S>(n);
    S var = 0;
    for (size_t j = 0; j < n; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= static_cast<S>(n);
    const S is = S(1) / std::sqrt(var + eps);
    mean[i] = mu;
    inv_std[i] = is;
    S* yi = out.data() + i * n;
    for (size_t j = 0; j < n; ++j) yi[j] = (xi[j] - mu) * is * gd[j] + bd[j];
  }
  return detail::make_op<S>(
      x.shape(), std::move(out), {x, gain, bias},
      [m, n, mean, inv_std](TensorNode<S>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        const auto& xv = px.value;
        const auto& gv = pg.value;
        if (pg.requires_grad) pg.ensure_grad();
        if (pb.requires_grad) pb.ensure_grad();
        if (px.requires_grad) px.ensure_grad();
        for (size_t i = 0; i < m; ++i) {
          const S* xi = xv.data() + i * n;
          const S* gi = self.grad.data() + i * n;
          const S mu = mean[i], is = inv_std[i];
          // dgain, dbias
          if (pg.requires_grad || pb.requires_grad) {
            for (size_t j = 0; j < n; ++j) {
              const S xhat = (xi[j] - mu) * is;
              if (pg.requires_grad) pg.grad[j] += gi[j] * xhat;
              if (pb.requires_grad) pb.grad[j] += gi[j];
            }
          }
          if (!px.requires_grad) continue;
          // dx via the standard closed form with dxhat = dy * gain:
          // dx = is/n * (n*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
          S sum_dxh = 0, sum_dxh_xh = 0;
          for (size_t j = 0; j < n; ++j) {
            const S dxh = gi[j] * gv[j];
            const S xhat = (xi[j] - mu) * is;
            sum_dxh += dxh;
            sum_dxh_xh += dxh * xhat;
          }
          S* dx = px.grad.data() + i * n;
          const S inv_n = S(1) / static_cast<S>(n);
          for (size_t j = 0; j < n; ++j) {
            const S dxh = gi[j] * gv[j];
            const S xhat = (xi[j] - mu) * is;
            dx[j] += is * (dxh - inv_n * sum_dxh - xhat * inv_n * sum_dxh_xh);
          }
        }
      });
}

// --------------------------------------------------------------- embedding

template <typename S>
Tensor<S> embedding_lookup(const Tensor<S>& table, const std::vector<int>& ids) {
  const size_t v = table.rows(), d = table.cols();
  if (ids.empty()) throw ShapeError("embedding_lookup: empty id list");
  for (int id : ids) {
    if (id < 0 || static_cast<size_t>(id) >= v)
      throw ShapeError("embedding_lookup: id " + std::to_string(id) +
                       " out of range for table " + shape_str(table.shape()));
  }
  std::vector<S> out(ids.size() * d);
  const auto td = table.data();
  for (size_t i = 0; i < ids.size(); ++i)
    std::copy(td.begin() + ids[i] * d, td.begin() + (ids[i] + 1) * d,
              out.begin() + i * d);
  return detail::make_op<S>(Shape{ids.size(), d}, std::move(out), {table},
                            [ids, d](TensorNode<S>& self) {
                              auto& pt = *self.parents[0];
                              if (!pt.requires_grad) return;
                              pt.ensure_grad();
                              for (size_t i = 0; i < ids.size(); ++i) {
                                S* dst = pt.grad.data() + ids[i] * d;
                                const S* src = self.grad.data() + i * d;
                                for (size_t j = 0; j < d; ++j) dst[j] += src[j];
                              }
                            });
}

// ------------------------------------------------------------ cross entropy

// Mean negative log-likelihood of `targets` under row-wise softmax of
// `logits` [n, V]. Numerically stable log-sum-exp.
template <typename S>
Tensor<S> cross_entropy(const Tensor<S>& logits, const std::vector<int>& targets) {
  const size_t n = logits.rows(), v = logits.cols();
  if (targets.size() != n)
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(n) + " rows");
  for (int t : targets) {
    if (t < 0 || static_cast<size_t>(t) >= v)
      throw ShapeError("cross_entropy: target " + std::to_string(t) +
                       " out of range for " + std::to_string(v) + " classes");
  }
  const auto ld = logits.data();
  std::vector<S> lse(n);
  S loss = 0;
  for (size_t i = 0; i < n; ++i) {
    const S* xi = ld.data() + i * v;
    S mx = xi[0];
    for (size_t j = 1; j < v; ++j) mx = std::max(mx, xi[j]);
    S z = 0;
    for (size_t j = 0; j < v; ++j) z += std::exp(xi[j] - mx);
    lse[i] = mx + std::log(z);
    loss += lse[i] - xi[targets[i]];
  }
  loss /= static_cast<S>(n);
  return detail::make_op<S>(
      Shape{1, 1}, {loss}, {logits}, [n, v, targets, lse](TensorNode<S>& self) {
        auto& pl = *self.parents[0];
        if (!pl.requires_grad) return;
        pl.ensure_grad();
        const S g = self.grad[0] / static_cast<S>(n);
        for (size_t i = 0; i < n; ++i) {
          const S* xi = pl.value.data() + i * v;
          S* dx = pl.grad.data() + i * v;
          for (size_t j = 0; j < v; ++j) dx[j] += g * std::exp(xi[j] - lse[i]);
          dx[targets[i]] -= g;
        }
      });
}

// ----------------------------------------------------------------- dropout

// Inverted dropout: keeps with probability 1-p and scales by 1/(1-p).
// The mask is drawn from `rng` at call time, so determinism follows from
// the caller's stream discipline.
template <typename S>
Tensor<S> dropout(const Tensor<S>& a, double p, Rng& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw ShapeError("dropout: p must be < 1");
  std::vector<uint8_t> keep(a.size());
  for (auto& k : keep) k = rng.uniform() >= p ? 1 : 0;
  const S inv_keep = static_cast<S>(1.0 / (1.0 - p));
  std::vector<S> out(a.size());
  const auto ad = a.data();
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = keep[i] ? ad[i] * inv_keep : S(0);
  return detail::make_op<S>(a.shape(), std::move(out), {a},
                            [keep, inv_keep](TensorNode<S>& self) {
                              auto& pa = *self.parents[0];
                              if (!pa.requires_grad) return;
                              pa.ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                if (keep[i]) pa.grad[i] += self.grad[i] * inv_keep;
                            });
}

// ------------------------------------------------------------- masked fill

// Replaces masked entries (mask[i] != 0) with fill_value; gradient flows
// only through unmasked entries.
template <typename S>
Tensor<S> masked_fill(const Tensor<S>& a, const std::vector<uint8_t>& mask, S fill_value) {
  if (mask.size() != a.size())
    throw ShapeError("masked_fill: mask size " + std::to_string(mask.size()) +
                     " does not match tensor " + shape_str(a.shape()));
  std::vector<S> out(a.size());
  const auto ad = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = mask[i] ? fill_value : ad[i];
  return detail::make_op<S>(a.shape(), std::move(out), {a},
                            [mask](TensorNode<S>& self) {
                              auto& pa = *self.parents[0];
                              if (!pa.requires_grad) return;
                              pa.ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                if (!mask[i]) pa.grad[i] += self.grad[i];
                            });
}

// Upper-triangular (strictly above diagonal) mask for an [n, n] score matrix.
inline std::vector<uint8_t> causal_mask(size_t n) {
  std::vector<uint8_t> mask(n * n, 0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) mask[i * n + j] = 1;
  return mask;
}

// Constant (no-grad) tensor from existing data.
template <typename S>
Tensor<S> constant(Shape shape, std::vector<S> data) {
  return Tensor<S>::from(std::move(shape), std::move(data), false);
}

}  // namespace adlr
