#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pgorder/errors.hpp"

namespace pgo::nc {

using Dims = std::vector<std::size_t>;

inline std::size_t dims_product(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string dims_string(const Dims& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "x" : "") << dims[i];
  os << ']';
  return os.str();
}

/// Dense row-major array. Rank is dynamic; most of the library works on rank 2.
template <class T>
class Array {
 public:
  using value_type = T;

  Array() = default;

  explicit Array(Dims dims, T fill = T{0}) : dims_(std::move(dims)), data_(dims_product(dims_), fill) {
    check_dims();
  }

  Array(Dims dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims();
    if (data_.size() != dims_product(dims_)) {
      throw ShapeError("array data length " + std::to_string(data_.size()) + " does not match dims " +
                       dims_string(dims_));
    }
  }

  static Array matrix(std::size_t rows, std::size_t cols, std::initializer_list<T> values) {
    return Array({rows, cols}, std::vector<T>(values));
  }

  static Array scalar(T v) { return Array({1}, std::vector<T>{v}); }

  [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
  [[nodiscard]] std::size_t rank() const noexcept { return dims_.size(); }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] std::size_t rows() const { return dims_.empty() ? 0 : dims_.front(); }
  [[nodiscard]] std::size_t cols() const { return dims_.size() < 2 ? 1 : dims_.back(); }

  [[nodiscard]] std::span<T> data() noexcept { return data_; }
  [[nodiscard]] std::span<const T> data() const noexcept { return data_; }
  [[nodiscard]] std::vector<T>& storage() noexcept { return data_; }
  [[nodiscard]] const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  T& operator()(std::size_t a, std::size_t r, std::size_t c) { return data_[(a * dims_[1] + r) * dims_[2] + c]; }
  const T& operator()(std::size_t a, std::size_t r, std::size_t c) const {
    return data_[(a * dims_[1] + r) * dims_[2] + c];
  }

  [[nodiscard]] std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }
  [[nodiscard]] std::span<T> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }

  [[nodiscard]] Array reshaped(Dims dims) const { return Array(std::move(dims), data_); }

  template <class U>
  [[nodiscard]] Array<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Array<U>(dims_, std::move(out));
  }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  friend bool operator==(const Array&, const Array&) = default;

 private:
  void check_dims() const {
    for (auto d : dims_) {
      if (d == 0) throw ShapeError("array dims must be positive, got " + dims_string(dims_));
    }
  }

  Dims dims_;
  std::vector<T> data_;
};

/// Boolean keep-mask; `keep[i] != 0` marks an entry that participates.
/// A mask with a single row broadcasts over every row of its target.
struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> keep;

  Mask() = default;
  Mask(std::size_t r, std::size_t c, bool value = true) : rows(r), cols(c), keep(r * c, value ? 1 : 0) {}

  static Mask row_vector(const std::vector<bool>& values) {
    Mask m(1, values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m.keep[i] = values[i] ? 1 : 0;
    return m;
  }

  /// Lower-triangular mask: row i may see columns 0..i.
  static Mask causal(std::size_t n) {
    Mask m(n, n, false);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) m.keep[i * n + j] = 1;
    return m;
  }

  [[nodiscard]] bool at(std::size_t r, std::size_t c) const {
    return keep[(rows == 1 ? 0 : r) * cols + c] != 0;
  }
  void set(std::size_t r, std::size_t c, bool v) { keep[r * cols + c] = v ? 1 : 0; }
};

}  // namespace pgo::nc
