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
 * @file config.hpp
 * @brief Hardware, layer and tile descriptors.
 *
 * A layer is described by its filter shape (R x S over C channels), G groups
 * of K filters each, batch N, input plane X x Y, stride and padding. A tile
 * picks a sub-extent of every dimension: the filter part (T_R*T_S*T_C) sets
 * the size of a virtual neuron (VN), the rest (T_G*T_K*T_N*T_X'*T_Y') sets
 * how many VNs are resident at once.
 *
 * Documents use JSON; see docs/schemas.md for the exact keys.
 */

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

namespace flexaccel {

using Count = std::int64_t;

enum class FoldingStrategy {
  /// One extra MS per VN re-injects the previous fold's psum read back from
  /// the prefetch buffer.
  ForwarderRoundtrip,
  /// The egress adder switch keeps a local accumulator across folds.
  IdealLocalAccumulation,
};

std::string_view to_string(FoldingStrategy s);
FoldingStrategy parse_folding_strategy(std::string_view text);

/// Pipeline latencies in cycles. Every stage is fully pipelined.
struct LatencyModel {
  int pb_read = 1;
  int dn_traversal = 1;
  int multiply = 1;
  int art_level = 1;
  int lateral_extra = 1;  // added on top of art_level for an augmented-link hop
  int bus_grant = 1;
  int pb_write = 1;
  int operand_depth = 2;  // per-MS operand buffers (steps delivered ahead of firing)

  bool operator==(const LatencyModel&) const = default;
};

struct HardwareConfig {
  int num_ms = 32;
  int dn_bw = 4;
  int rn_bw = 4;
  FoldingStrategy folding = FoldingStrategy::ForwarderRoundtrip;
  LatencyModel latency{};

  /// Throws ValidationError naming the violated invariant.
  void validate() const;
  int leaves_per_subtree() const { return num_ms / dn_bw; }

  bool operator==(const HardwareConfig&) const = default;
};

enum class LayerKind { Convolution, FullyConnected };

struct LayerConfig {
  LayerKind kind = LayerKind::Convolution;
  int filter_rows = 1;   // R
  int filter_cols = 1;   // S
  int channels = 1;      // C, per group
  int groups = 1;        // G
  int filters = 1;       // K, per group
  int batch = 1;         // N
  int in_rows = 1;       // X
  int in_cols = 1;       // Y
  int stride = 1;
  int padding = 0;

  void validate() const;
  int out_rows() const;
  int out_cols() const;
  Count filter_size() const { return Count{filter_rows} * filter_cols * channels; }
  Count output_count() const;

  bool operator==(const LayerConfig&) const = default;
};

/// Builds the convolution parameterisation of a fully-connected layer: the
/// flattened input lives in rows*cols*channels, input plane equals the filter
/// plane and there is one group, so the output plane is 1x1.
LayerConfig make_fully_connected(int rows, int cols, int channels, int outputs, int batch);

struct TileConfig {
  int filter_rows = 1;
  int filter_cols = 1;
  int channels = 1;
  int groups = 1;
  int filters = 1;
  int batch = 1;
  int out_rows = 1;
  int out_cols = 1;

  Count vn_size() const { return Count{filter_rows} * filter_cols * channels; }
  Count n_vns() const { return Count{groups} * filters * batch * out_rows * out_cols; }

  bool operator==(const TileConfig&) const = default;
  auto operator<=>(const TileConfig&) const = default;
};

std::string to_string(const TileConfig& tile);

/// (X', Y') for a layer. Throws ValidationError if the stride does not divide
/// the padded extent.
std::pair<int, int> derive_output_dims(const LayerConfig& layer);

/// N*G*K*X'*Y'*C*R*S.
Count total_macs(const LayerConfig& layer);

/// Throws TileExceedsLayer (or ValidationError for non-positive entries).
void validate_tile(const LayerConfig& layer, const TileConfig& tile);

HardwareConfig parse_hardware_config(std::string_view text);
LayerConfig parse_layer_config(std::string_view text);
TileConfig parse_tile_config(std::string_view text);

std::string serialize(const HardwareConfig& hw);
std::string serialize(const LayerConfig& layer);
std::string serialize(const TileConfig& tile);

}  // namespace flexaccel
