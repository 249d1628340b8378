/*
 * Copyright 2026 The flexaccel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "flexaccel/errors.hpp"

namespace flexaccel {

/// Arithmetic used by every datapath element. Integers wrap modulo 2^32 so
/// that accumulation order never changes the result.
template <typename T>
struct Arith;

template <>
struct Arith<std::int32_t> {
  static std::int32_t add(std::int32_t a, std::int32_t b) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
  }
  static std::int32_t mul(std::int32_t a, std::int32_t b) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) * static_cast<std::uint32_t>(b));
  }
  static constexpr const char* name = "int32";
};

template <>
struct Arith<float> {
  static float add(float a, float b) { return a + b; }
  static float mul(float a, float b) { return a * b; }
  static constexpr const char* name = "float32";
};

/// Dense row-major tensor.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> dims, T fill = T{})
      : dims_(std::move(dims)), data_(product(dims_), fill) {}

  Tensor(std::vector<std::size_t> dims, std::vector<T> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    if (data_.size() != product(dims_))
      throw ShapeMismatch("tensor data length " + std::to_string(data_.size()) +
                          " does not match dims " + dims_string());
  }

  std::span<const std::size_t> dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  /// Flat offset of a multi-index; throws AddressOutOfRange.
  std::size_t offset(std::span<const std::size_t> index) const {
    if (index.size() != dims_.size())
      throw AddressOutOfRange("index rank " + std::to_string(index.size()) + " vs tensor rank " +
                              std::to_string(dims_.size()));
    std::size_t off = 0;
    for (std::size_t d = 0; d < dims_.size(); ++d) {
      if (index[d] >= dims_[d])
        throw AddressOutOfRange("index " + std::to_string(index[d]) + " out of range in dim " +
                                std::to_string(d) + " of " + dims_string());
      off = off * dims_[d] + index[d];
    }
    return off;
  }
  std::size_t offset(std::initializer_list<std::size_t> index) const {
    return offset(std::span<const std::size_t>(index.begin(), index.size()));
  }

  /// Inverse of offset().
  std::vector<std::size_t> unravel(std::size_t flat) const {
    if (flat >= data_.size()) throw AddressOutOfRange("flat offset out of range");
    std::vector<std::size_t> idx(dims_.size());
    for (std::size_t d = dims_.size(); d-- > 0;) {
      idx[d] = flat % dims_[d];
      flat /= dims_[d];
    }
    return idx;
  }

  T& at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
  const T& at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

  /// Same data viewed with different dims of equal element count.
  Tensor reshaped(std::vector<std::size_t> dims) const& { return Tensor(std::move(dims), data_); }

  std::string dims_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < dims_.size(); ++i) os << (i ? "," : "") << dims_[i];
    os << ')';
    return os.str();
  }

  bool operator==(const Tensor&) const = default;

 private:
  static std::size_t product(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }

  std::vector<std::size_t> dims_;
  std::vector<T> data_;
};

}  // namespace flexaccel
