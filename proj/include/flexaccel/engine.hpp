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
 * @file engine.hpp
 * @brief Cycle-by-cycle layer simulation and statistics.
 *
 * Each cycle, in order: bus transfers land in the PB and the arbiters grant
 * new ones; the ART evaluates every AS that is due; the next schedule step
 * fires on the MS array if all of its operands arrived in an earlier cycle;
 * the DN delivers elements read in earlier cycles; each DN sub-tree reads at
 * most one element from its PB port for the steps inside the operand window.
 *
 * A psum becomes readable pb_write cycles after its PB write. Under
 * IdealLocalAccumulation the egress AS of each VN keeps the running sum
 * across folds and only the final value is written.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "flexaccel/config.hpp"
#include "flexaccel/mapper.hpp"
#include "flexaccel/memory.hpp"

namespace flexaccel {

struct SimStats {
  Count total_cycles = 0;
  double effective_ms_utilization = 0.0;
  double theoretical_utilization = 0.0;
  Count pb_reads = 0;
  Count pb_writes = 0;
  Count ds_traversals = 0;
  Count as_additions = 0;
  Count fifo_pushes = 0;
  Count fifo_pops = 0;
  Count cb_conflicts = 0;
  Count fold_roundtrips = 0;

  Count busy_ms_cycles = 0;
  Count ms_multiplications = 0;
  Count ms_forwards = 0;
  Count as_forwards = 0;
  Count lateral_transfers = 0;
  Count psum_reads = 0;
  Count psum_writes = 0;
  Count weight_reads = 0;
  Count input_reads = 0;
  Count steps = 0;
  Count fire_stall_cycles = 0;
  Count psum_wait_cycles = 0;
  Count cb_stall_cycles = 0;
  Count max_fifo_occupancy = 0;
  Count port_conflicts = 0;

  bool operator==(const SimStats&) const = default;
};

nlohmann::json to_json(const SimStats& s);
SimStats stats_from_json(const nlohmann::json& doc);

/// Adds b's counters to a (cycles add up as layers run back to back);
/// utilizations are recomputed by the caller.
SimStats& accumulate(SimStats& a, const SimStats& b);

using TraceSink = std::function<void(Cycle cycle, std::string_view unit, std::string_view event)>;

struct SimOptions {
  TraceSink trace;
  /// Test hook: the value written to this output offset is off by one.
  std::optional<std::size_t> fault_output;
  /// Abort if no unit makes progress for this many cycles.
  Cycle stall_limit = 1'000'000;
};

template <typename T>
class Simulator {
 public:
  Simulator(MappingPlan plan, PrefetchBuffer<T>& pb, SimOptions options = {});
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Runs to completion; the PB output region then holds the layer output.
  SimStats run();

  const MappingPlan& plan() const;
  /// Cycle at which each step's last result was written (or absorbed by the
  /// egress accumulator). Valid after run().
  const std::vector<Cycle>& step_done_cycles() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Builds the mapping and runs it on data already loaded into `pb`.
template <typename T>
SimStats simulate_layer(const HardwareConfig& hw, const LayerConfig& layer, const TileConfig& tile,
                        PrefetchBuffer<T>& pb, SimOptions options = {});

/// Cycles spent on fold `fold` of the first VN batch under `strategy`:
/// from the end of the previous fold (or cycle 0) to the last result of this
/// fold. Data values do not affect timing, so zeros are used.
Count run_fold_iteration(const MappingPlan& plan, int fold, FoldingStrategy strategy);

/// Derived ratios and closing totals from raw counters.
struct RawCounters {
  Count total_cycles = 0;
  Count busy_ms_cycles = 0;
  Count num_ms = 0;
  double theoretical = 0.0;
};
void collect_stats(SimStats& stats, const RawCounters& raw);

extern template class Simulator<std::int32_t>;
extern template class Simulator<float>;

}  // namespace flexaccel
