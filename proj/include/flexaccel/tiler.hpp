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
 * @file tiler.hpp
 * @brief Exhaustive tile search over divisors of the layer dimensions.
 *
 * A candidate keeps every VN of the tile resident at once
 * (n_vns(T) <= routable_vn_capacity(num_ms, real_vn_size)).
 */

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"

#include "flexaccel/config.hpp"

namespace flexaccel {

inline constexpr std::size_t kDefaultTileLimit = 4096;

struct TileCandidate {
  TileConfig tile;
  double theoretical_utilization = 0.0;
  Count folds = 1;
  std::optional<Count> estimated_cycles;
};

/// Sorted by utilization (desc), folds (asc), tile (asc); at most `limit`.
/// Throws NoFeasibleTile when nothing qualifies.
std::vector<TileCandidate> enumerate_tiles(const HardwareConfig& hw, const LayerConfig& layer,
                                           std::size_t limit = kDefaultTileLimit);

/// Simulates the first `top_k` candidates on seeded random data, checks each
/// against the oracle, and orders them by cycles (asc), utilization (desc),
/// tile (asc). Throws Error if a candidate fails verification.
std::vector<TileCandidate> rank_by_simulation(std::vector<TileCandidate> candidates, const HardwareConfig& hw,
                                              const LayerConfig& layer, std::size_t top_k,
                                              std::uint64_t seed = 1);

nlohmann::json to_json(const TileCandidate& c);

}  // namespace flexaccel
