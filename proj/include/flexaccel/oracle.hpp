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

/**
 * @file oracle.hpp
 * @brief Direct grouped convolution used to check every simulated layer.
 *
 * Index arithmetic is written out here on purpose rather than borrowed from
 * the PB layout helpers.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flexaccel/config.hpp"
#include "flexaccel/tensor.hpp"

namespace flexaccel {

template <typename T>
struct OracleResult {
  Tensor<T> output;  // (N, G, K, X', Y')
  Count mac_count = 0;
};

/// O[n,g,k,x',y'] = sum_{c,r,s} I[n,g,c,x'*stride+r-pad,y'*stride+s-pad] * W[g,k,c,r,s].
/// Throws ShapeMismatch.
template <typename T>
OracleResult<T> conv_reference(const LayerConfig& layer, const Tensor<T>& inputs, const Tensor<T>& weights);

struct CompareResult {
  bool pass = true;
  std::size_t mismatches = 0;
  double max_abs_diff = 0.0;
  std::optional<std::vector<std::size_t>> first_mismatch;
  std::string report;
};

/// Exact for integers; for floats passes iff max |a-b| <= tolerance.
/// Throws DimsMismatch.
template <typename T>
CompareResult compare(const Tensor<T>& simulated, const Tensor<T>& reference, double tolerance = 0.0);

extern template OracleResult<std::int32_t> conv_reference(const LayerConfig&, const Tensor<std::int32_t>&,
                                                          const Tensor<std::int32_t>&);
extern template OracleResult<float> conv_reference(const LayerConfig&, const Tensor<float>&, const Tensor<float>&);
extern template CompareResult compare(const Tensor<std::int32_t>&, const Tensor<std::int32_t>&, double);
extern template CompareResult compare(const Tensor<float>&, const Tensor<float>&, double);

}  // namespace flexaccel
