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
 * @file model.hpp
 * @brief Layer-by-layer execution of a small model file.
 *
 * Model document:
 *   {"version": 1, "element": "int32" | "float32",
 *    "layers": [{"name": ..., "layer": {...}, "tile": {...} | "search",
 *                "data": {"seed": n} | {"weights": path, "inputs": path}}]}
 *
 * Each layer after the first consumes the previous layer's output, reshaped
 * row-major to its own input dims; batch sizes and per-sample element counts
 * must agree. "inputs" is only honoured on the first layer.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "flexaccel/config.hpp"
#include "flexaccel/engine.hpp"
#include "flexaccel/oracle.hpp"
#include "flexaccel/tensor.hpp"

namespace flexaccel {

struct ModelLayerSpec {
  std::string name;
  LayerConfig layer;
  std::optional<TileConfig> tile;  // empty: pick with the tiler
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> weights_file;
  std::optional<std::filesystem::path> inputs_file;
};

struct ModelSpec {
  std::string element = "int32";
  std::vector<ModelLayerSpec> layers;
};

/// Relative tensor paths are resolved against `base_dir`. Throws
/// SyntaxError / ValidationError (chaining errors name both layers).
ModelSpec parse_model(std::string_view text, const std::filesystem::path& base_dir = {});

struct LayerRun {
  std::string name;
  TileConfig tile;
  SimStats stats;
  std::optional<CompareResult> verdict;
};

template <typename T>
struct ModelResult {
  std::vector<LayerRun> layers;
  SimStats totals;
  Tensor<T> output;
  std::optional<Tensor<T>> oracle_output;  // chained oracle, when verifying
  bool verified = true;
};

/// Runs every layer in order. A layer without its own seed uses seed + index.
template <typename T>
ModelResult<T> run_model(const HardwareConfig& hw, const ModelSpec& model, std::uint64_t seed, bool verify,
                         double tolerance = 1e-3);

template <typename T>
nlohmann::json to_json(const ModelResult<T>& result);

}  // namespace flexaccel
