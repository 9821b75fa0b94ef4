#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pgorder/errors.hpp"
#include "pgorder/numcore/array.hpp"

namespace pgo::nc {

namespace detail {
inline thread_local bool grad_enabled = true;
}

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_enabled) { detail::grad_enabled = false; }
  ~NoGradGuard() { detail::grad_enabled = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

inline bool grad_enabled() noexcept { return detail::grad_enabled; }

template <class T>
struct Node {
  Array<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::span<T> ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T{0});
    return grad;
  }
  void accumulate(std::span<const T> g) {
    auto dst = ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }
};

/// Handle to a value in the autodiff graph.
///
/// Copies share the node. Leaf tensors created with `parameter` keep their
/// gradient across `backward` calls until `zero_grad`, which is how
/// per-document losses accumulate into one batch update.
template <class T>
class Tensor {
 public:
  using NodePtr = std::shared_ptr<Node<T>>;

  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor constant(Array<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    return Tensor(std::move(n));
  }

  static Tensor parameter(Array<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Tensor(std::move(n));
  }

  /// Builds an op result. Parents and the backward closure are dropped when
  /// grad mode is off or no parent needs a gradient.
  static Tensor from_op(Array<T> value, std::vector<Tensor> parents, std::function<void(Node<T>&)> backward) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    bool needs = false;
    if (grad_enabled()) {
      for (const auto& p : parents) needs = needs || p.requires_grad();
    }
    if (needs) {
      n->requires_grad = true;
      n->parents.reserve(parents.size());
      for (auto& p : parents) n->parents.push_back(p.node_);
      n->backward_fn = std::move(backward);
    }
    return Tensor(std::move(n));
  }

  [[nodiscard]] bool defined() const noexcept { return static_cast<bool>(node_); }
  [[nodiscard]] const Array<T>& value() const { return node_->value; }
  [[nodiscard]] Array<T>& mutable_value() { return node_->value; }
  [[nodiscard]] const Dims& dims() const { return node_->value.dims(); }
  [[nodiscard]] std::size_t rows() const { return node_->value.rows(); }
  [[nodiscard]] std::size_t cols() const { return node_->value.cols(); }
  [[nodiscard]] std::size_t size() const { return node_->value.size(); }
  [[nodiscard]] bool requires_grad() const { return node_ && node_->requires_grad; }
  [[nodiscard]] T item() const {
    if (size() != 1) throw ShapeError("item() on tensor of dims " + dims_string(dims()));
    return node_->value[0];
  }

  [[nodiscard]] std::span<const T> grad() const { return node_->grad; }
  [[nodiscard]] std::span<T> mutable_grad() { return node_->ensure_grad(); }
  [[nodiscard]] bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  void zero_grad() { node_->grad.assign(node_->value.size(), T{0}); }

  [[nodiscard]] const NodePtr& node() const noexcept { return node_; }

  /// Reverse-mode sweep from this scalar, seeded with `seed`.
  void backward(T seed = T{1}) const {
    if (size() != 1) throw ShapeError("backward() requires a scalar, got " + dims_string(dims()));
    if (!node_->requires_grad) return;
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      if (next < n->parents.size()) {
        Node<T>* p = n->parents[next++].get();
        if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    node_->ensure_grad()[0] += seed;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node<T>* n = *it;
      if (n->backward_fn && n->grad.size() == n->value.size()) n->backward_fn(*n);
    }
  }

 private:
  NodePtr node_;
};

namespace detail {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
Eigen::Map<const RowMat<T>> cmap(const T* p, std::size_t r, std::size_t c) {
  return Eigen::Map<const RowMat<T>>(p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}
template <class T>
Eigen::Map<RowMat<T>> map(T* p, std::size_t r, std::size_t c) {
  return Eigen::Map<RowMat<T>>(p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

inline void require_rank2(const Dims& d, const char* op) {
  if (d.size() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + dims_string(d));
}

template <class T>
void accumulate_into(Node<T>& parent, std::span<const T> g) {
  if (parent.requires_grad) parent.accumulate(g);
}

template <class T, class F>
Tensor<T> unary_map(const Tensor<T>& a, F fwd_and_deriv) {
  const auto& av = a.value();
  Array<T> out(av.dims());
  std::vector<T> deriv(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    auto [y, dy] = fwd_and_deriv(av[i]);
    out[i] = y;
    deriv[i] = dy;
  }
  return Tensor<T>::from_op(std::move(out), {a}, [deriv = std::move(deriv)](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto g = p.ensure_grad();
    for (std::size_t i = 0; i < deriv.size(); ++i) g[i] += self.grad[i] * deriv[i];
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// linear algebra

/// Matrix product a[m×k] · b[k×n].
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_rank2(a.dims(), "matmul");
  detail::require_rank2(b.dims(), "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dims differ " + dims_string(a.dims()) + " x " + dims_string(b.dims()));
  }
  Array<T> out({m, n});
  detail::map(out.data().data(), m, n).noalias() =
      detail::cmap(a.value().data().data(), m, k) * detail::cmap(b.value().data().data(), k, n);
  return Tensor<T>::from_op(std::move(out), {a, b}, [m, k, n](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    auto g = detail::cmap(self.grad.data(), m, n);
    if (pa.requires_grad) {
      detail::map(pa.ensure_grad().data(), m, k).noalias() +=
          g * detail::cmap(pb.value.data().data(), k, n).transpose();
    }
    if (pb.requires_grad) {
      detail::map(pb.ensure_grad().data(), k, n).noalias() +=
          detail::cmap(pa.value.data().data(), m, k).transpose() * g;
    }
  });
}

/// a[m×k] · b[n×k]ᵀ without materialising the transpose.
template <class T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_rank2(a.dims(), "matmul_nt");
  detail::require_rank2(b.dims(), "matmul_nt");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) {
    throw ShapeError("matmul_nt: inner dims differ " + dims_string(a.dims()) + " x " + dims_string(b.dims()) + "^T");
  }
  Array<T> out({m, n});
  detail::map(out.data().data(), m, n).noalias() =
      detail::cmap(a.value().data().data(), m, k) * detail::cmap(b.value().data().data(), n, k).transpose();
  return Tensor<T>::from_op(std::move(out), {a, b}, [m, k, n](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    auto g = detail::cmap(self.grad.data(), m, n);
    if (pa.requires_grad) {
      detail::map(pa.ensure_grad().data(), m, k).noalias() += g * detail::cmap(pb.value.data().data(), n, k);
    }
    if (pb.requires_grad) {
      detail::map(pb.ensure_grad().data(), n, k).noalias() +=
          g.transpose() * detail::cmap(pa.value.data().data(), m, k);
    }
  });
}

template <class T>
Tensor<T> transpose(const Tensor<T>& a) {
  detail::require_rank2(a.dims(), "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  Array<T> out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(j, i) = a.value()(i, j);
  return Tensor<T>::from_op(std::move(out), {a}, [m, n](Node<T>& self) {
    auto& p = *self.parents[0];
    auto g = p.ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
  });
}

// ---------------------------------------------------------------------------
// elementwise

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.dims() != b.dims()) throw ShapeError("add: " + dims_string(a.dims()) + " vs " + dims_string(b.dims()));
  Array<T> out(a.dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return Tensor<T>::from_op(std::move(out), {a, b}, [](Node<T>& self) {
    detail::accumulate_into<T>(*self.parents[0], self.grad);
    detail::accumulate_into<T>(*self.parents[1], self.grad);
  });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.dims() != b.dims()) throw ShapeError("sub: " + dims_string(a.dims()) + " vs " + dims_string(b.dims()));
  Array<T> out(a.dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return Tensor<T>::from_op(std::move(out), {a, b}, [](Node<T>& self) {
    detail::accumulate_into<T>(*self.parents[0], self.grad);
    auto& pb = *self.parents[1];
    if (pb.requires_grad) {
      auto g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

/// Hadamard product.
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.dims() != b.dims()) throw ShapeError("mul: " + dims_string(a.dims()) + " vs " + dims_string(b.dims()));
  Array<T> out(a.dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return Tensor<T>::from_op(std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

/// a[m×n] + bias broadcast over rows; bias holds n values.
template <class T>
Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& bias) {
  detail::require_rank2(a.dims(), "add_row");
  const std::size_t m = a.rows(), n = a.cols();
  if (bias.size() != n) throw ShapeError("add_row: bias length " + std::to_string(bias.size()) + " vs cols " + std::to_string(n));
  Array<T> out(a.dims());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = a.value()(i, j) + bias.value()[j];
  return Tensor<T>::from_op(std::move(out), {a, bias}, [m, n](Node<T>& self) {
    detail::accumulate_into<T>(*self.parents[0], self.grad);
    auto& pb = *self.parents[1];
    if (pb.requires_grad) {
      auto g = pb.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
    }
  });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  return detail::unary_map(a, [s](T x) { return std::pair{x * s, s}; });
}

template <class T>
Tensor<T> tanh(const Tensor<T>& a) {
  return detail::unary_map(a, [](T x) {
    const T y = std::tanh(x);
    return std::pair{y, T{1} - y * y};
  });
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return detail::unary_map(a, [](T x) {
    const T y = x >= 0 ? T{1} / (T{1} + std::exp(-x)) : std::exp(x) / (T{1} + std::exp(x));
    return std::pair{y, y * (T{1} - y)};
  });
}

template <class T>
Tensor<T> relu(const Tensor<T>& a) {
  return detail::unary_map(a, [](T x) { return x > 0 ? std::pair{x, T{1}} : std::pair{T{0}, T{0}}; });
}

// ---------------------------------------------------------------------------
// softmax and normalisation

/// Row-wise softmax with an optional keep-mask (one row broadcasts).
/// Masked entries are exactly 0; a row with no kept entry is an error.
template <class T>
Tensor<T> softmax(const Tensor<T>& x, const Mask* mask = nullptr) {
  const std::size_t n = x.cols();
  const std::size_t m = x.size() / n;
  if (mask && (mask->cols != n || (mask->rows != 1 && mask->rows != m))) {
    throw ShapeError("softmax: mask " + std::to_string(mask->rows) + "x" + std::to_string(mask->cols) +
                     " does not fit " + dims_string(x.dims()));
  }
  Array<T> out(x.dims(), T{0});
  for (std::size_t r = 0; r < m; ++r) {
    T mx = -std::numeric_limits<T>::infinity();
    bool any = false;
    for (std::size_t c = 0; c < n; ++c) {
      if (mask && !mask->at(r, c)) continue;
      mx = std::max(mx, x.value()[r * n + c]);
      any = true;
    }
    if (!any) throw DegenerateMaskError("softmax: row " + std::to_string(r) + " is fully masked");
    T total{0};
    for (std::size_t c = 0; c < n; ++c) {
      if (mask && !mask->at(r, c)) continue;
      const T e = std::exp(x.value()[r * n + c] - mx);
      out[r * n + c] = e;
      total += e;
    }
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] /= total;
  }
  return Tensor<T>::from_op(std::move(out), {x}, [m, n](Node<T>& self) {
    auto& p = *self.parents[0];
    auto g = p.ensure_grad();
    for (std::size_t r = 0; r < m; ++r) {
      const T* y = self.value.data().data() + r * n;
      const T* dy = self.grad.data() + r * n;
      T dot{0};
      for (std::size_t c = 0; c < n; ++c) dot += dy[c] * y[c];
      for (std::size_t c = 0; c < n; ++c) g[r * n + c] += y[c] * (dy[c] - dot);
    }
  });
}

/// Per-row layer normalisation with learned gain and bias (each of length cols).
template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps = T(1e-5)) {
  detail::require_rank2(x.dims(), "layer_norm");
  const std::size_t m = x.rows(), n = x.cols();
  if (gain.size() != n || bias.size() != n) throw ShapeError("layer_norm: gain/bias length mismatch");
  Array<T> out(x.dims());
  std::vector<T> xhat(m * n), inv_std(m);
  for (std::size_t r = 0; r < m; ++r) {
    T mean{0};
    for (std::size_t c = 0; c < n; ++c) mean += x.value()(r, c);
    mean /= static_cast<T>(n);
    T var{0};
    for (std::size_t c = 0; c < n; ++c) {
      const T d = x.value()(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<T>(n);
    inv_std[r] = T{1} / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      xhat[r * n + c] = (x.value()(r, c) - mean) * inv_std[r];
      out(r, c) = xhat[r * n + c] * gain.value()[c] + bias.value()[c];
    }
  }
  return Tensor<T>::from_op(std::move(out), {x, gain, bias},
                            [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
                              auto& px = *self.parents[0];
                              auto& pg = *self.parents[1];
                              auto& pb = *self.parents[2];
                              const T* dy = self.grad.data();
                              if (pg.requires_grad || pb.requires_grad) {
                                auto gg = pg.ensure_grad();
                                auto gb = pb.ensure_grad();
                                for (std::size_t r = 0; r < m; ++r)
                                  for (std::size_t c = 0; c < n; ++c) {
                                    gg[c] += dy[r * n + c] * xhat[r * n + c];
                                    gb[c] += dy[r * n + c];
                                  }
                              }
                              if (!px.requires_grad) return;
                              auto gx = px.ensure_grad();
                              std::vector<T> dxhat(n);
                              for (std::size_t r = 0; r < m; ++r) {
                                T mean_d{0}, mean_dx{0};
                                for (std::size_t c = 0; c < n; ++c) {
                                  dxhat[c] = dy[r * n + c] * pg.value[c];
                                  mean_d += dxhat[c];
                                  mean_dx += dxhat[c] * xhat[r * n + c];
                                }
                                mean_d /= static_cast<T>(n);
                                mean_dx /= static_cast<T>(n);
                                for (std::size_t c = 0; c < n; ++c) {
                                  gx[r * n + c] += inv_std[r] * (dxhat[c] - mean_d - xhat[r * n + c] * mean_dx);
                                }
                              }
                            });
}

// ---------------------------------------------------------------------------
// structural

template <class T>
Tensor<T> reshape(const Tensor<T>& a, Dims dims) {
  Array<T> out = a.value().reshaped(std::move(dims));
  return Tensor<T>::from_op(std::move(out), {a},
                            [](Node<T>& self) { detail::accumulate_into<T>(*self.parents[0], self.grad); });
}

template <class T>
Tensor<T> slice_rows(const Tensor<T>& a, std::size_t start, std::size_t count) {
  detail::require_rank2(a.dims(), "slice_rows");
  const std::size_t n = a.cols();
  if (start + count > a.rows() || count == 0) throw ShapeError("slice_rows: range out of bounds");
  std::vector<T> data(a.value().data().begin() + static_cast<std::ptrdiff_t>(start * n),
                      a.value().data().begin() + static_cast<std::ptrdiff_t>((start + count) * n));
  return Tensor<T>::from_op(Array<T>({count, n}, std::move(data)), {a}, [start, n](Node<T>& self) {
    auto& p = *self.parents[0];
    auto g = p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[start * n + i] += self.grad[i];
  });
}

template <class T>
Tensor<T> row(const Tensor<T>& a, std::size_t r) {
  return slice_rows(a, r, 1);
}

template <class T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t start, std::size_t count) {
  detail::require_rank2(a.dims(), "slice_cols");
  const std::size_t m = a.rows(), n = a.cols();
  if (start + count > n || count == 0) throw ShapeError("slice_cols: range out of bounds");
  Array<T> out({m, count});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = a.value()(i, start + j);
  return Tensor<T>::from_op(std::move(out), {a}, [m, n, start, count](Node<T>& self) {
    auto& p = *self.parents[0];
    auto g = p.ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j) g[i * n + start + j] += self.grad[i * count + j];
  });
}

template <class T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t m = parts.front().rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    detail::require_rank2(p.dims(), "concat_cols");
    if (p.rows() != m) throw ShapeError("concat_cols: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  Array<T> out({m, total});
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) out(i, off + j) = p.value()(i, j);
    off += p.cols();
  }
  return Tensor<T>::from_op(std::move(out), parts, [m, total, widths](Node<T>& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      auto& p = *self.parents[k];
      if (p.requires_grad) {
        auto g = p.ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) g[i * widths[k] + j] += self.grad[i * total + off + j];
      }
      off += widths[k];
    }
  });
}

template <class T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t n = parts.front().cols();
  std::size_t total = 0;
  std::vector<std::size_t> sizes;
  std::vector<T> data;
  for (const auto& p : parts) {
    detail::require_rank2(p.dims(), "concat_rows");
    if (p.cols() != n) throw ShapeError("concat_rows: column counts differ");
    total += p.rows();
    sizes.push_back(p.size());
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  }
  return Tensor<T>::from_op(Array<T>({total, n}, std::move(data)), parts, [sizes](Node<T>& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      auto& p = *self.parents[k];
      if (p.requires_grad) {
        auto g = p.ensure_grad();
        for (std::size_t i = 0; i < sizes[k]; ++i) g[i] += self.grad[off + i];
      }
      off += sizes[k];
    }
  });
}

/// Row gather: out[r] = a[index[r]]. Backward scatter-adds, so repeated indices accumulate.
template <class T>
Tensor<T> gather_rows(const Tensor<T>& a, std::vector<std::size_t> index) {
  detail::require_rank2(a.dims(), "gather_rows");
  const std::size_t n = a.cols();
  if (index.empty()) throw ShapeError("gather_rows: empty index");
  Array<T> out({index.size(), n});
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= a.rows()) throw ShapeError("gather_rows: index " + std::to_string(index[r]) + " out of range");
    std::copy_n(a.value().data().begin() + static_cast<std::ptrdiff_t>(index[r] * n), n, out.row(r).begin());
  }
  return Tensor<T>::from_op(std::move(out), {a}, [n, index = std::move(index)](Node<T>& self) {
    auto& p = *self.parents[0];
    auto g = p.ensure_grad();
    for (std::size_t r = 0; r < index.size(); ++r)
      for (std::size_t j = 0; j < n; ++j) g[index[r] * n + j] += self.grad[r * n + j];
  });
}

/// Column-wise mean over rows, 1×n.
template <class T>
Tensor<T> mean_rows(const Tensor<T>& a) {
  detail::require_rank2(a.dims(), "mean_rows");
  const std::size_t m = a.rows(), n = a.cols();
  Array<T> out({1, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += a.value()(i, j);
  for (std::size_t j = 0; j < n; ++j) out[j] /= static_cast<T>(m);
  return Tensor<T>::from_op(std::move(out), {a}, [m, n](Node<T>& self) {
    auto& p = *self.parents[0];
    auto g = p.ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j] / static_cast<T>(m);
  });
}

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
  T total{0};
  for (auto v : a.value().data()) total += v;
  return Tensor<T>::from_op(Array<T>::scalar(total), {a}, [](Node<T>& self) {
    auto& p = *self.parents[0];
    auto g = p.ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

template <class T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T{1} / static_cast<T>(a.size()));
}

// ---------------------------------------------------------------------------
// losses

/// Mean squared error against a constant target of the same shape.
template <class T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Array<T>& target) {
  if (pred.size() != target.size()) throw ShapeError("mse_loss: size mismatch");
  const std::size_t n = pred.size();
  T total{0};
  for (std::size_t i = 0; i < n; ++i) {
    const T d = pred.value()[i] - target[i];
    total += d * d;
  }
  return Tensor<T>::from_op(Array<T>::scalar(total / static_cast<T>(n)), {pred}, [n, target](Node<T>& self) {
    auto& p = *self.parents[0];
    auto g = p.ensure_grad();
    for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[0] * T{2} * (p.value[i] - target[i]) / static_cast<T>(n);
  });
}

/// Weighted mean binary cross-entropy of sigmoid(logits) against 0/1 targets.
/// Entries with zero weight do not participate.
template <class T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, const Array<T>& targets, const Array<T>& weights) {
  if (logits.size() != targets.size() || logits.size() != weights.size()) {
    throw ShapeError("bce_with_logits: size mismatch");
  }
  const std::size_t n = logits.size();
  T total{0}, wsum{0};
  for (std::size_t i = 0; i < n; ++i) {
    const T w = weights[i];
    if (w == T{0}) continue;
    const T x = logits.value()[i];
    total += w * (std::max(x, T{0}) - x * targets[i] + std::log1p(std::exp(-std::abs(x))));
    wsum += w;
  }
  if (wsum <= T{0}) throw DomainError("bce_with_logits: all weights are zero");
  return Tensor<T>::from_op(Array<T>::scalar(total / wsum), {logits}, [n, targets, weights, wsum](Node<T>& self) {
    auto& p = *self.parents[0];
    auto g = p.ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      if (weights[i] == T{0}) continue;
      const T x = p.value[i];
      const T s = x >= 0 ? T{1} / (T{1} + std::exp(-x)) : std::exp(x) / (T{1} + std::exp(x));
      g[i] += self.grad[0] * weights[i] * (s - targets[i]) / wsum;
    }
  });
}

/// Mean over rows of −log softmax_masked(logits[r])[labels[r]].
/// A label pointing at a masked entry is an internal-consistency error.
template <class T>
Tensor<T> masked_cross_entropy(const Tensor<T>& logits, const Mask& mask, const std::vector<std::size_t>& labels) {
  detail::require_rank2(logits.dims(), "masked_cross_entropy");
  const std::size_t m = logits.rows(), n = logits.cols();
  if (labels.size() != m) throw ShapeError("masked_cross_entropy: one label per row required");
  if (mask.cols != n || (mask.rows != m && mask.rows != 1)) throw ShapeError("masked_cross_entropy: mask shape");
  std::vector<T> probs(m * n, T{0});
  T total{0};
  for (std::size_t r = 0; r < m; ++r) {
    if (labels[r] >= n || !mask.at(r, labels[r])) {
      throw DomainError("masked_cross_entropy: label " + std::to_string(labels[r]) + " at step " + std::to_string(r) +
                        " is not an available candidate");
    }
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t c = 0; c < n; ++c)
      if (mask.at(r, c)) mx = std::max(mx, logits.value()(r, c));
    T z{0};
    for (std::size_t c = 0; c < n; ++c) {
      if (!mask.at(r, c)) continue;
      probs[r * n + c] = std::exp(logits.value()(r, c) - mx);
      z += probs[r * n + c];
    }
    for (std::size_t c = 0; c < n; ++c) probs[r * n + c] /= z;
    total += -(logits.value()(r, labels[r]) - mx - std::log(z));
  }
  return Tensor<T>::from_op(Array<T>::scalar(total / static_cast<T>(m)), {logits},
                            [m, n, labels, probs = std::move(probs)](Node<T>& self) {
                              auto& p = *self.parents[0];
                              auto g = p.ensure_grad();
                              const T s = self.grad[0] / static_cast<T>(m);
                              for (std::size_t r = 0; r < m; ++r) {
                                for (std::size_t c = 0; c < n; ++c) g[r * n + c] += s * probs[r * n + c];
                                g[r * n + labels[r]] -= s;
                              }
                            });
}

// ---------------------------------------------------------------------------
// attention

template <class T>
struct AttentionOutput {
  Tensor<T> out;
  Array<T> weights;  // heads × n_query × n_key
};

/// Scaled dot-product attention split over `heads` column groups.
/// q is n×d, k and v are m×d; `mask` (n×m or a broadcast row) limits visible keys.
template <class T>
AttentionOutput<T> multi_head_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, std::size_t heads,
                                        const Mask* mask = nullptr) {
  const std::size_t d = q.cols();
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("multi_head_attention: width " + std::to_string(d) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (k.cols() != d || v.cols() != d || k.rows() != v.rows()) throw ShapeError("multi_head_attention: q/k/v shapes");
  const std::size_t dh = d / heads, n = q.rows(), m = k.rows();
  const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(dh));
  AttentionOutput<T> result{{}, Array<T>({heads, n, m})};
  std::vector<Tensor<T>> head_out;
  head_out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    auto qh = heads == 1 ? q : slice_cols(q, h * dh, dh);
    auto kh = heads == 1 ? k : slice_cols(k, h * dh, dh);
    auto vh = heads == 1 ? v : slice_cols(v, h * dh, dh);
    auto p = softmax(scale(matmul_nt(qh, kh), inv_sqrt), mask);
    std::copy(p.value().data().begin(), p.value().data().end(),
              result.weights.data().begin() + static_cast<std::ptrdiff_t>(h * n * m));
    head_out.push_back(matmul(p, vh));
  }
  result.out = heads == 1 ? head_out.front() : concat_cols(head_out);
  return result;
}

}  // namespace pgo::nc
