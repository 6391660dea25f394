#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "ceskd/error.hpp"

namespace ceskd {

// Dense row-major n-d array. Shape is dynamic; data is flat.
template <typename S>
struct TensorT {
  std::vector<std::size_t> shape;
  std::vector<S> data;

  TensorT() = default;

  explicit TensorT(std::vector<std::size_t> shp)
      : shape(std::move(shp)), data(numel_of(shape), S(0)) {}

  TensorT(std::vector<std::size_t> shp, std::vector<S> values)
      : shape(std::move(shp)), data(std::move(values)) {
    if (numel_of(shape) != data.size()) {
      throw ConfigError("tensor shape does not match data length");
    }
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           [](std::size_t a, std::size_t b) { return a * b; });
  }

  std::size_t numel() const { return data.size(); }
  std::size_t ndim() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape[i]; }

  S& operator[](std::size_t i) { return data[i]; }
  const S& operator[](std::size_t i) const { return data[i]; }

  // 2-d accessors for [rows, cols] tensors
  S& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  const S& at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  bool same_shape(const TensorT& other) const { return shape == other.shape; }

  bool all_finite() const {
    for (const S& v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

}  // namespace ceskd
