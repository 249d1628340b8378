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
 * @file mapper.hpp
 * @brief Turns (hardware, layer, tile) into a MappingPlan.
 *
 * VN slot i occupies leaves [i*real_vn_size, (i+1)*real_vn_size). Lane j of a
 * slot (j < vn_size) holds filter position (dc, dr, ds) with
 * j = (dc*T_R + dr)*T_S + ds relative to the current fold's chunk origin;
 * when a forwarder is present it is the slot's last leaf.
 *
 * Schedule: tile origins are visited in (g, k, n, x', y') order; the valid
 * VNs of a tile are split into batches of n_vns_mapped and every batch runs
 * all of its folds back to back before the next batch starts.
 */

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

#include "flexaccel/config.hpp"
#include "flexaccel/fabric.hpp"
#include "flexaccel/memory.hpp"

namespace flexaccel {

struct MsAssignment {
  int vn = -1;  // slot index, -1 when idle
  int lane = -1;
  MsMode mode = MsMode::Idle;
};

struct ScheduleStep {
  int fold = 0;
  std::vector<std::int64_t> outputs;        // flat output offset per slot, -1 if unused
  std::vector<std::uint8_t> reload_weights; // per slot

  int active_slots() const;
};

struct FoldOrigin {
  int channel = 0;
  int row = 0;
  int col = 0;
};

struct MappingPlan {
  HardwareConfig hw;
  LayerConfig layer;
  TileConfig tile;
  Count vn_size = 0;
  Count real_vn_size = 0;
  Count folds = 1;
  Count n_vns_mapped = 0;
  int row_chunks = 1;
  int col_chunks = 1;
  int channel_chunks = 1;
  std::vector<MsAssignment> ms_assignment;
  std::vector<LeafRange> vn_leaves;
  RnConfig rn_config;
  std::vector<ScheduleStep> schedule;

  bool folding() const { return folds > 1; }
  bool has_forwarder() const { return real_vn_size > vn_size; }
  FoldOrigin fold_origin(int fold) const;
  Count mapped_ms() const { return n_vns_mapped * real_vn_size; }
};

struct TheoreticalUtilization {
  Count mapped_ms = 0;
  double fraction = 0.0;
};

/// ceil(R/T_R) * ceil(S/T_S) * ceil(C/T_C).
Count compute_folds(const LayerConfig& layer, const TileConfig& tile);

/// vn_size, plus one forwarder MS when folding under the roundtrip strategy.
Count real_vn_size(const HardwareConfig& hw, const LayerConfig& layer, const TileConfig& tile);

/// Largest number of back-to-back VNs of `real_vn_size` leaves the ART can
/// reduce concurrently (num_ms / real_vn_size except for single-leaf VNs).
Count routable_vn_capacity(int num_ms, Count real_vn_size);

/// Throws ValidationError, TileExceedsLayer, VnTooLarge.
MappingPlan build_mapping(const HardwareConfig& hw, const LayerConfig& layer, const TileConfig& tile);

TheoreticalUtilization theoretical_utilization(const HardwareConfig& hw, const MappingPlan& plan);

/// Configures the ART for contiguous VN leaf ranges (ascending, disjoint).
/// Throws UnroutableVN if some output port would be needed twice.
RnConfig generate_rn_config(int num_leaves, std::span<const LeafRange> vns);
RnConfig generate_rn_config(const MappingPlan& plan);

enum class OperandKind : std::uint8_t { Weight, Input, Psum };

/// One PB element multicast into one DN sub-tree.
struct DnRoute {
  OperandKind kind = OperandKind::Input;
  PbAddress source;
  std::vector<int> leaves;  // ascending
  DsRoute route;
};

/// Routes for every non-zero operand of a schedule step. An element needed by
/// several leaves of one sub-tree is read once and multicast; elements whose
/// filter or input coordinate falls outside the layer are implicit zeros.
std::vector<DnRoute> generate_dn_routes(const MappingPlan& plan, std::size_t step_index);

/// Same, reusing a prebuilt tree (the engine calls this per step).
std::vector<DnRoute> generate_dn_routes(const MappingPlan& plan, std::size_t step_index,
                                        const DistributionTree& tree);

nlohmann::json to_json(const MappingPlan& plan);

}  // namespace flexaccel
