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

#include "flexaccel/engine.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <sstream>
#include <string>

#include "flexaccel/documents.hpp"
#include "flexaccel/fabric.hpp"

namespace flexaccel {

namespace {

constexpr Cycle kNever = std::numeric_limits<Cycle>::max();

const char* region_name(Region r) {
  switch (r) {
    case Region::Inputs: return "input";
    case Region::Weights: return "weight";
    case Region::Outputs: return "output";
    case Region::Psums: return "psum";
  }
  return "?";
}

}  // namespace

template <typename T>
struct Simulator<T>::Impl {
  struct StepState {
    std::size_t index = 0;
    std::vector<DnRoute> routes;
    std::vector<std::uint8_t> injected;
    std::vector<std::vector<std::size_t>> by_subtree;  // route indices per sub-tree
    std::vector<std::size_t> cursor;                   // first possibly pending entry per sub-tree
    Count leaves_pending = 0;
    Cycle ready_at = 0;
    std::vector<T> weight;
    std::vector<T> input;
  };

  Impl(MappingPlan p, PrefetchBuffer<T>& buffer, SimOptions o)
      : plan(std::move(p)),
        pb(buffer),
        opts(std::move(o)),
        lat(plan.hw.latency),
        tree(plan.hw.num_ms, plan.hw.dn_bw),
        dn(tree, std::max(1, lat.pb_read + lat.dn_traversal - 1)),
        mn(plan.hw.num_ms),
        art(plan.rn_config, lat),
        buses(plan.hw.num_ms - 1, plan.hw.rn_bw, lat.bus_grant),
        ideal(plan.hw.folding == FoldingStrategy::IdealLocalAccumulation),
        accumulators(static_cast<std::size_t>(plan.n_vns_mapped), T{}),
        psum_count(static_cast<std::size_t>(plan.layer.output_count()), 0),
        psum_ready(static_cast<std::size_t>(plan.layer.output_count()), kNever),
        step_done(plan.schedule.size(), 0) {
    for (int leaf = 0; leaf < plan.hw.num_ms; ++leaf) {
      const auto& a = plan.ms_assignment[leaf];
      mn.configure(leaf, a.mode, a.vn);
    }
  }

  void trace(Cycle t, std::string_view unit, const std::string& event) {
    if (opts.trace) opts.trace(t, unit, event);
  }

  void open_step(std::size_t s) {
    StepState st;
    st.index = s;
    st.routes = generate_dn_routes(plan, s, tree);
    st.injected.assign(st.routes.size(), 0);
    st.by_subtree.assign(static_cast<std::size_t>(tree.subtrees()), {});
    st.cursor.assign(static_cast<std::size_t>(tree.subtrees()), 0);
    for (std::size_t i = 0; i < st.routes.size(); ++i) {
      st.by_subtree[st.routes[i].route.subtree].push_back(i);
      st.leaves_pending += static_cast<Count>(st.routes[i].leaves.size());
    }
    st.weight.assign(static_cast<std::size_t>(plan.hw.num_ms), T{});
    st.input.assign(static_cast<std::size_t>(plan.hw.num_ms), T{});
    window.push_back(std::move(st));
  }

  bool psum_readable(const StepState& st, const DnRoute& r, Cycle t) const {
    const auto o = r.source.offset;
    return psum_count[o] == plan.schedule[st.index].fold && psum_ready[o] <= t;
  }

  void land_writes(const BusCycleResult<T>& res, Cycle t) {
    for (const auto& e : res.written) {
      const auto& a = e.write.address;
      last_activity = t;
      step_done[e.tag] = std::max(step_done[e.tag], t);
      if (a.region == Region::Psums) {
        ++psum_count[a.offset];
        psum_ready[a.offset] = t + lat.pb_write;
      }
      if (opts.trace) trace(t, "pb", std::string("write ") + region_name(a.region) + " " + std::to_string(a.offset));
    }
    if (opts.trace)
      for (const auto& e : res.granted)
        trace(t, "cb", std::string("grant ") + region_name(e.write.address.region) + " " +
                           std::to_string(e.write.address.offset));
  }

  void complete(const Completion<T>& c, Cycle t) {
    const auto s = static_cast<std::size_t>(c.wave_tag);
    const auto& step = plan.schedule[s];
    const auto o = step.outputs[static_cast<std::size_t>(c.vn)];
    const bool final = step.fold == plan.folds - 1;
    T value = c.value;
    if (ideal && plan.folds > 1) {
      auto& acc = accumulators[static_cast<std::size_t>(c.vn)];
      if (step.fold == 0) {
        acc = value;
      } else {
        acc = Arith<T>::add(acc, value);
        ++egress_additions;
      }
      value = acc;
      if (!final) {
        step_done[s] = std::max(step_done[s], t);
        last_activity = std::max(last_activity, t);
        if (opts.trace) trace(t, "as", "accumulate vn " + std::to_string(c.vn) + " at " + std::to_string(c.as));
        return;
      }
    }
    Region region = final ? Region::Outputs : Region::Psums;
    if (final && opts.fault_output && *opts.fault_output == static_cast<std::size_t>(o))
      value = Arith<T>::add(value, T{1});
    buses.push(c.as, {{{region, static_cast<std::size_t>(o)}, value}, s}, t);
    if (opts.trace)
      trace(t, "as", "egress vn " + std::to_string(c.vn) + " at " + std::to_string(c.as) + " -> " +
                         region_name(region) + " " + std::to_string(o));
  }

  bool try_fire(Cycle t) {
    if (window.empty()) return false;
    auto& st = window.front();
    if (st.leaves_pending > 0 || st.ready_at > t) {
      ++fire_stalls;
      return false;
    }
    const auto& step = plan.schedule[st.index];
    std::vector<MsOperand<T>> ops(static_cast<std::size_t>(plan.hw.num_ms));
    for (std::size_t slot = 0; slot < step.outputs.size(); ++slot) {
      if (step.outputs[slot] < 0) continue;
      const auto& r = plan.vn_leaves[slot];
      for (int leaf = r.begin; leaf < r.end; ++leaf) {
        auto& op = ops[leaf];
        op.active = true;
        op.input = st.input[leaf];
        if (plan.ms_assignment[leaf].mode == MsMode::Multiplier && step.reload_weights[slot])
          op.new_weight = st.weight[leaf];
      }
    }
    art.issue(mn.step(ops), t, st.index);
    if (opts.trace)
      trace(t, "ms", "fire step " + std::to_string(st.index) + " fold " + std::to_string(step.fold));
    window.pop_front();
    if (next_open < plan.schedule.size()) open_step(next_open++);
    ++fired;
    return true;
  }

  void deliver(Cycle t) {
    for (const auto& d : dn.deliver(t)) {
      const std::size_t s = d.tag >> 2;
      const auto kind = static_cast<OperandKind>(d.tag & 3);
      auto& st = window[s - window.front().index];
      (kind == OperandKind::Weight ? st.weight : st.input)[d.leaf] = d.value;
      --st.leaves_pending;
      st.ready_at = std::max(st.ready_at, t + 1);
    }
  }

  bool inject(Cycle t) {
    bool waiting_psum = false;
    std::vector<PbAddress> reads;
    std::vector<std::pair<StepState*, std::size_t>> picks;
    for (int sub = 0; sub < tree.subtrees(); ++sub) {
      bool picked = false;
      for (auto& st : window) {
        auto& list = st.by_subtree[sub];
        auto& cur = st.cursor[sub];
        while (cur < list.size() && st.injected[list[cur]]) ++cur;
        for (std::size_t i = cur; i < list.size(); ++i) {
          const auto ri = list[i];
          if (st.injected[ri]) continue;
          const auto& r = st.routes[ri];
          if (r.kind == OperandKind::Psum && !psum_readable(st, r, t)) {
            waiting_psum = true;
            continue;
          }
          picks.emplace_back(&st, ri);
          reads.push_back(r.source);
          picked = true;
          break;
        }
        if (picked) break;
      }
    }
    if (picks.empty()) {
      if (waiting_psum) ++psum_waits;
      return false;
    }
    auto res = pb.serve_reads(reads, t);
    if (!res.deferred.empty()) throw Error("PB refused a read within port capacity");
    for (std::size_t i = 0; i < picks.size(); ++i) {
      auto [st, ri] = picks[i];
      const auto& r = st->routes[ri];
      st->injected[ri] = 1;
      switch (r.kind) {
        case OperandKind::Weight: ++weight_reads; break;
        case OperandKind::Input: ++input_reads; break;
        case OperandKind::Psum: break;
      }
      dn.inject(r.route, res.values[i], (static_cast<std::uint64_t>(st->index) << 2) | static_cast<std::uint64_t>(r.kind), t);
      if (opts.trace)
        trace(t, "dn", std::string("read ") + region_name(r.source.region) + " " + std::to_string(r.source.offset) +
                           " subtree " + std::to_string(r.route.subtree) + " leaves " +
                           std::to_string(r.leaves.size()));
    }
    return true;
  }

  SimStats run() {
    const std::size_t total = plan.schedule.size();
    while (next_open < total && window.size() < static_cast<std::size_t>(std::max(1, lat.operand_depth)))
      open_step(next_open++);

    Cycle t = 0;
    Cycle last_progress = 0;
    for (;; ++t) {
      bool progress = false;
      auto bus = buses.arbitrate_and_write(pb, t);
      progress |= !bus.granted.empty() || !bus.written.empty();
      land_writes(bus, t);
      for (const auto& c : art.tick(t)) {
        complete(c, t);
        progress = true;
      }
      progress |= try_fire(t);
      deliver(t);
      progress |= inject(t);
      if (progress) last_progress = t;
      if (fired == total && art.idle() && buses.idle() && dn.idle()) break;
      if (t - last_progress > opts.stall_limit) throw Error("simulation made no progress for too long");
    }
    return stats();
  }

  SimStats stats() const {
    SimStats s;
    const auto& pbc = pb.counters();
    const auto& ac = art.counters();
    const auto& bc = buses.counters();
    s.pb_reads = pbc.reads;
    s.pb_writes = pbc.writes;
    s.psum_reads = pbc.psum_reads;
    s.psum_writes = pbc.psum_writes;
    s.ds_traversals = dn.traversals();
    s.as_additions = ac.additions + egress_additions;
    s.as_forwards = ac.forwards;
    s.lateral_transfers = ac.lateral_transfers;
    s.port_conflicts = ac.port_conflicts;
    s.fifo_pushes = bc.fifo_pushes;
    s.fifo_pops = bc.fifo_pops;
    s.cb_conflicts = bc.conflicts;
    s.cb_stall_cycles = bc.stall_cycles;
    s.max_fifo_occupancy = bc.max_fifo_occupancy;
    s.fold_roundtrips = pbc.psum_reads;
    s.ms_multiplications = mn.multiplications();
    s.ms_forwards = mn.forwards();
    s.weight_reads = weight_reads;
    s.input_reads = input_reads;
    s.steps = static_cast<Count>(plan.schedule.size());
    s.fire_stall_cycles = fire_stalls;
    s.psum_wait_cycles = psum_waits;
    collect_stats(s, {last_activity + 1, mn.busy_cycles(), plan.hw.num_ms,
                      theoretical_utilization(plan.hw, plan).fraction});
    return s;
  }

  MappingPlan plan;
  PrefetchBuffer<T>& pb;
  SimOptions opts;
  LatencyModel lat;
  DistributionTree tree;
  DistributionNetwork<T> dn;
  MultiplierNetwork<T> mn;
  ReductionNetwork<T> art;
  CollectorBuses<T> buses;
  bool ideal;
  std::vector<T> accumulators;
  std::vector<int> psum_count;
  std::vector<Cycle> psum_ready;
  std::vector<Cycle> step_done;
  std::deque<StepState> window;
  std::size_t next_open = 0;
  std::size_t fired = 0;
  Cycle last_activity = 0;
  Count egress_additions = 0;
  Count weight_reads = 0;
  Count input_reads = 0;
  Count fire_stalls = 0;
  Count psum_waits = 0;
};

template <typename T>
Simulator<T>::Simulator(MappingPlan plan, PrefetchBuffer<T>& pb, SimOptions options)
    : impl_(std::make_unique<Impl>(std::move(plan), pb, std::move(options))) {}

template <typename T>
Simulator<T>::~Simulator() = default;

template <typename T>
SimStats Simulator<T>::run() {
  return impl_->run();
}

template <typename T>
const MappingPlan& Simulator<T>::plan() const {
  return impl_->plan;
}

template <typename T>
const std::vector<Cycle>& Simulator<T>::step_done_cycles() const {
  return impl_->step_done;
}

template <typename T>
SimStats simulate_layer(const HardwareConfig& hw, const LayerConfig& layer, const TileConfig& tile,
                        PrefetchBuffer<T>& pb, SimOptions options) {
  Simulator<T> sim(build_mapping(hw, layer, tile), pb, std::move(options));
  return sim.run();
}

template SimStats simulate_layer<std::int32_t>(const HardwareConfig&, const LayerConfig&, const TileConfig&,
                                               PrefetchBuffer<std::int32_t>&, SimOptions);
template SimStats simulate_layer<float>(const HardwareConfig&, const LayerConfig&, const TileConfig&,
                                        PrefetchBuffer<float>&, SimOptions);

Count run_fold_iteration(const MappingPlan& plan, int fold, FoldingStrategy strategy) {
  if (fold < 0 || fold >= plan.folds) throw ValidationError("fold index out of range");
  MappingPlan p = plan;
  if (p.hw.folding != strategy) {
    auto hw = p.hw;
    hw.folding = strategy;
    p = build_mapping(hw, p.layer, p.tile);
  }
  PrefetchBuffer<std::int32_t> pb(p.hw);
  pb.load_layer_data(p.layer, Tensor<std::int32_t>(input_dims(p.layer)),
                     Tensor<std::int32_t>(weight_dims(p.layer)));
  Simulator<std::int32_t> sim(p, pb);
  sim.run();
  const auto& done = sim.step_done_cycles();
  Cycle end = done.at(static_cast<std::size_t>(fold));
  Cycle start = fold == 0 ? -1 : done.at(static_cast<std::size_t>(fold - 1));
  return end - start;
}

void collect_stats(SimStats& s, const RawCounters& raw) {
  s.total_cycles = raw.total_cycles;
  s.busy_ms_cycles = raw.busy_ms_cycles;
  s.theoretical_utilization = raw.theoretical;
  s.effective_ms_utilization =
      raw.total_cycles > 0 && raw.num_ms > 0
          ? static_cast<double>(raw.busy_ms_cycles) / (static_cast<double>(raw.num_ms) * raw.total_cycles)
          : 0.0;
}

#define FLEXACCEL_STATS_FIELDS(X)                                                                          \
  X(total_cycles) X(effective_ms_utilization) X(theoretical_utilization) X(pb_reads) X(pb_writes)          \
  X(ds_traversals) X(as_additions) X(fifo_pushes) X(fifo_pops) X(cb_conflicts) X(fold_roundtrips)           \
  X(busy_ms_cycles) X(ms_multiplications) X(ms_forwards) X(as_forwards) X(lateral_transfers) X(psum_reads) \
  X(psum_writes) X(weight_reads) X(input_reads) X(steps) X(fire_stall_cycles) X(psum_wait_cycles)          \
  X(cb_stall_cycles) X(max_fifo_occupancy) X(port_conflicts)

nlohmann::json to_json(const SimStats& s) {
  nlohmann::json j;
  j["version"] = kDocumentVersion;
#define X(f) j[#f] = s.f;
  FLEXACCEL_STATS_FIELDS(X)
#undef X
  return j;
}

SimStats stats_from_json(const nlohmann::json& j) {
  SimStats s;
  try {
#define X(f) s.f = j.at(#f).get<decltype(s.f)>();
    FLEXACCEL_STATS_FIELDS(X)
#undef X
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("stats document: ") + e.what());
  }
  return s;
}

SimStats& accumulate(SimStats& a, const SimStats& b) {
#define X(f) a.f += b.f;
  X(total_cycles) X(pb_reads) X(pb_writes) X(ds_traversals) X(as_additions) X(fifo_pushes) X(fifo_pops)
  X(cb_conflicts) X(fold_roundtrips) X(busy_ms_cycles) X(ms_multiplications) X(ms_forwards) X(as_forwards)
  X(lateral_transfers) X(psum_reads) X(psum_writes) X(weight_reads) X(input_reads) X(steps)
  X(fire_stall_cycles) X(psum_wait_cycles) X(cb_stall_cycles) X(port_conflicts)
#undef X
  a.max_fifo_occupancy = std::max(a.max_fifo_occupancy, b.max_fifo_occupancy);
  return a;
}

template class Simulator<std::int32_t>;
template class Simulator<float>;

}  // namespace flexaccel
