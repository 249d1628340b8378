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
 * @file tensor_io.hpp
 * @brief Seeded random tensors and tensor files.
 *
 * Tensor files are either JSON documents {"dims": [...], "dtype": "int32" |
 * "float32", "data": [...]} or raw little-endian element dumps with a `.bin`
 * extension (dims then come from the layer).
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flexaccel/config.hpp"
#include "flexaccel/tensor.hpp"

namespace flexaccel {

/// Integers uniform in [-8, 8] from a 64-bit Mersenne Twister.
template <typename T>
Tensor<T> random_tensor(std::vector<std::size_t> dims, std::uint64_t seed);

template <typename T>
struct LayerData {
  Tensor<T> inputs;
  Tensor<T> weights;
};

/// Inputs from `seed`, weights from `seed + 1`.
template <typename T>
LayerData<T> random_layer_data(const LayerConfig& layer, std::uint64_t seed);

template <typename T>
Tensor<T> read_tensor(const std::filesystem::path& path, const std::vector<std::size_t>& expected_dims);

template <typename T>
void write_tensor(const std::filesystem::path& path, const Tensor<T>& t);

template <typename T>
std::string tensor_to_text(const Tensor<T>& t);

}  // namespace flexaccel
