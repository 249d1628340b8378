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
 * @file fabric.hpp
 * @brief Cycle-level models of the three on-chip networks.
 *
 * Distribution network (DN): `dn_bw` binary trees of bufferless distribution
 * switches (DS), one per PB read port, each covering num_ms/dn_bw contiguous
 * multiplier switches. A DS forwards its input to the left child, the right
 * child or both according to a 2-bit vector set by the source.
 *
 * Multiplier network (MN): one multiplier switch (MS) per leaf, configured as
 * a multiplier, a psum forwarder, or idle.
 *
 * Reduction network (RN): an augmented reduction tree (ART) of adder switches
 * (AS) with lateral links between same-level neighbours that do not share a
 * parent, plus `rn_bw` collector buses into the PB write ports. AS heap index
 * h is attached to bus h % rn_bw and each bus has a round-robin arbiter.
 *
 * Heap layout for a tree with 2^D leaves: the root is 0, level L (leaves are
 * level 0) starts at 2^(D-L) - 1, children of h are 2h+1 and 2h+2.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <iterator>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "flexaccel/config.hpp"
#include "flexaccel/errors.hpp"
#include "flexaccel/memory.hpp"
#include "flexaccel/tensor.hpp"

namespace flexaccel {

// ---- distribution network ----------------------------------------------------

enum DsBit : std::uint8_t { kDsLeft = 1, kDsRight = 2 };

/// Routing control for one element injected into one sub-tree.
struct DsRoute {
  int subtree = 0;
  std::vector<std::uint8_t> ds_bits;  // heap order within the sub-tree
};

/// Geometry and routing of the DN. Stateless apart from its shape.
class DistributionTree {
 public:
  DistributionTree(int num_ms, int subtrees);

  int num_ms() const { return num_ms_; }
  int subtrees() const { return subtrees_; }
  int leaves_per_subtree() const { return leaves_per_subtree_; }
  int switches_per_subtree() const { return leaves_per_subtree_ - 1; }
  int subtree_of(int leaf) const { return leaf / leaves_per_subtree_; }

  /// Bit vectors that deliver to exactly `leaves` (global indices, all inside
  /// `subtree`): a DS output is asserted iff a destination lies below it.
  DsRoute route(int subtree, std::span<const int> leaves) const;

  /// Follows the bit vectors from the sub-tree root. Returns the reached
  /// leaves in ascending order; `traversals` is incremented once per DS hop.
  std::vector<int> walk(const DsRoute& route, Count* traversals = nullptr) const;

 private:
  int num_ms_;
  int subtrees_;
  int leaves_per_subtree_;
};

template <typename T>
struct Delivery {
  int leaf;
  T value;
  std::uint64_t tag;  // caller-defined
};

/// Pipelined DN: an element injected at cycle t reaches its leaves at the
/// end of cycle t + dn_traversal.
template <typename T>
class DistributionNetwork {
 public:
  DistributionNetwork(const DistributionTree& tree, int traversal_latency)
      : tree_(tree), latency_(traversal_latency) {}

  void inject(DsRoute route, T value, std::uint64_t tag, Cycle read_cycle) {
    in_flight_.push_back({std::move(route), value, tag, read_cycle + latency_});
  }

  /// dn_deliver: everything due at `cycle`, expanded to per-leaf values.
  std::vector<Delivery<T>> deliver(Cycle cycle) {
    std::vector<Delivery<T>> out;
    while (!in_flight_.empty() && in_flight_.front().arrival <= cycle) {
      auto& e = in_flight_.front();
      for (int leaf : tree_.walk(e.route, &traversals_)) out.push_back({leaf, e.value, e.tag});
      in_flight_.pop_front();
    }
    return out;
  }

  bool idle() const { return in_flight_.empty(); }
  Count traversals() const { return traversals_; }
  const DistributionTree& tree() const { return tree_; }

 private:
  struct InFlight {
    DsRoute route;
    T value;
    std::uint64_t tag;
    Cycle arrival;
  };
  DistributionTree tree_;
  int latency_;
  std::deque<InFlight> in_flight_;
  Count traversals_ = 0;
};

// ---- multiplier network ------------------------------------------------------

enum class MsMode : std::uint8_t { Idle, Multiplier, Forwarder };
std::string_view to_string(MsMode m);

template <typename T>
struct MultiplierSwitch {
  MsMode mode = MsMode::Idle;
  int vn = -1;
  T weight{};
  Count multiplications = 0;
  Count forwards = 0;
  Count busy_cycles = 0;
};

/// Operand presented to one MS for one firing. `input` is the activation for
/// a multiplier and the psum for a forwarder.
template <typename T>
struct MsOperand {
  bool active = false;
  std::optional<T> new_weight;  // replaces the held weight before multiplying
  T input{};
};

template <typename T>
class MultiplierNetwork {
 public:
  explicit MultiplierNetwork(int num_ms) : switches_(num_ms) {}

  void configure(int leaf, MsMode mode, int vn) {
    switches_.at(leaf).mode = mode;
    switches_.at(leaf).vn = vn;
  }

  /// ms_step: each active multiplier emits weight*input, each active
  /// forwarder emits its input unchanged; idle switches emit nothing.
  std::vector<std::optional<T>> step(std::span<const MsOperand<T>> operands) {
    std::vector<std::optional<T>> out(switches_.size());
    for (std::size_t i = 0; i < switches_.size(); ++i) {
      auto& ms = switches_[i];
      const auto& op = operands[i];
      if (!op.active || ms.mode == MsMode::Idle) continue;
      if (op.new_weight) ms.weight = *op.new_weight;
      ++ms.busy_cycles;
      if (ms.mode == MsMode::Multiplier) {
        out[i] = Arith<T>::mul(ms.weight, op.input);
        ++ms.multiplications;
      } else {
        out[i] = op.input;
        ++ms.forwards;
      }
    }
    return out;
  }

  const MultiplierSwitch<T>& at(int leaf) const { return switches_.at(leaf); }
  int size() const { return static_cast<int>(switches_.size()); }

  Count multiplications() const { return sum(&MultiplierSwitch<T>::multiplications); }
  Count forwards() const { return sum(&MultiplierSwitch<T>::forwards); }
  Count busy_cycles() const { return sum(&MultiplierSwitch<T>::busy_cycles); }

 private:
  Count sum(Count MultiplierSwitch<T>::*field) const {
    Count s = 0;
    for (const auto& ms : switches_) s += ms.*field;
    return s;
  }
  std::vector<MultiplierSwitch<T>> switches_;
};

// ---- reduction network (ART) -------------------------------------------------

enum class AsMode : std::uint8_t { Idle, Add2to1, Add3to1, Add1Fwd1, Fwd2to2 };
std::string_view to_string(AsMode m);

enum class AsOutput : std::uint8_t { None, Up, Lateral, Bus };
std::string_view to_string(AsOutput o);

enum AsInput : int { kInLeft = 0, kInRight = 1, kInLateral = 2 };

/// One reduction performed inside an AS: the inputs belonging to one VN and
/// the port that carries their sum.
struct AsGroup {
  int vn = -1;
  std::array<bool, 3> inputs{};  // left, right, lateral
  AsOutput output = AsOutput::None;

  int input_count() const { return int(inputs[0]) + int(inputs[1]) + int(inputs[2]); }
};

struct AdderSwitchConfig {
  int level = 1;
  int index = 0;
  AsMode mode = AsMode::Idle;
  int group_count = 0;
  std::array<AsGroup, 2> groups{};
  int lateral_peer = -1;  // heap index of the augmented-link neighbour, -1 if none

  std::span<const AsGroup> active_groups() const { return {groups.data(), std::size_t(group_count)}; }
};

struct LeafRange {
  int begin = 0;
  int end = 0;  // exclusive
  int size() const { return end - begin; }
  bool operator==(const LeafRange&) const = default;
};

/// Static configuration of the whole ART, produced by the mapper.
struct RnConfig {
  int num_leaves = 0;
  int depth = 0;
  std::vector<AdderSwitchConfig> switches;  // heap order
  std::vector<int> leaf_vn;                 // -1 for leaves outside every VN
  std::vector<int> egress;                  // per VN: heap index of the completing AS

  static int heap_index(int level, int index, int depth) { return (1 << (depth - level)) - 1 + index; }
  int heap_index(int level, int index) const { return heap_index(level, index, depth); }
  int vn_count() const { return static_cast<int>(egress.size()); }
};

template <typename T>
struct Completion {
  int vn;
  int as;  // heap index of the egress AS
  T value;
  std::uint64_t wave_tag;
};

struct ArtCounters {
  Count additions = 0;
  Count forwards = 0;
  Count lateral_transfers = 0;
  Count port_conflicts = 0;  // an output port driven twice in one wave, or a VN-tag mix
};

/// Pipelined ART. Each AS fires for a wave at a fixed offset after the MS
/// firing cycle (children ready + art_level, lateral input + art_level +
/// lateral_extra, leaves + multiply), so successive waves never collide.
template <typename T>
class ReductionNetwork {
 public:
  ReductionNetwork(RnConfig config, const LatencyModel& latency)
      : cfg_(std::move(config)), offsets_(cfg_.switches.size(), -1) {
    compute_offsets(latency);
  }

  const RnConfig& config() const { return cfg_; }

  /// Cycles from MS firing until the VN's sum is available at its egress AS.
  int completion_offset(int vn) const { return offsets_.at(cfg_.egress.at(vn)); }
  int max_offset() const { return static_cast<int>(by_offset_.size()) - 1; }

  /// Starts a reduction wave from MS outputs produced at `fire_cycle`.
  void issue(std::vector<std::optional<T>> leaf_values, Cycle fire_cycle, std::uint64_t wave_tag) {
    Wave w;
    w.fire = fire_cycle;
    w.tag = wave_tag;
    w.leaves = std::move(leaf_values);
    w.up.assign(cfg_.switches.size(), std::nullopt);
    w.lateral.assign(cfg_.switches.size(), std::nullopt);
    w.port_use.assign(cfg_.switches.size(), {});
    waves_.push_back(std::move(w));
  }

  /// art_step: evaluates every AS due at `cycle`; returns completed VN sums.
  std::vector<Completion<T>> tick(Cycle cycle) {
    std::vector<Completion<T>> done;
    for (auto& w : waves_) {
      Cycle age = cycle - w.fire;
      if (age < 1 || age >= static_cast<Cycle>(by_offset_.size())) continue;
      for (int h : by_offset_[age]) evaluate(w, h, done);
    }
    while (!waves_.empty() && cycle - waves_.front().fire >= max_offset()) waves_.pop_front();
    return done;
  }

  /// Runs one wave to completion in isolation (test and inspection helper).
  std::vector<Completion<T>> reduce(std::vector<std::optional<T>> leaf_values) {
    issue(std::move(leaf_values), 0, 0);
    std::vector<Completion<T>> all;
    for (Cycle c = 1; c <= max_offset(); ++c) {
      auto d = tick(c);
      all.insert(all.end(), d.begin(), d.end());
    }
    return all;
  }

  bool idle() const { return waves_.empty(); }
  const ArtCounters& counters() const { return counters_; }

 private:
  struct Tagged {
    T value;
    int vn;
  };
  struct Wave {
    Cycle fire = 0;
    std::uint64_t tag = 0;
    std::vector<std::optional<T>> leaves;
    std::vector<std::optional<Tagged>> up;
    std::vector<std::optional<Tagged>> lateral;
    std::vector<std::array<std::uint8_t, 3>> port_use;  // up, lateral, bus
  };

  std::pair<int, int> children(int h) const { return {2 * h + 1, 2 * h + 2}; }

  std::optional<Tagged> input_of(const Wave& w, int h, int port) const {
    const auto& as = cfg_.switches[h];
    if (port == kInLateral) return as.lateral_peer >= 0 ? w.lateral[as.lateral_peer] : std::nullopt;
    if (as.level == 1) {
      int leaf = 2 * as.index + port;
      if (!w.leaves[leaf]) return std::nullopt;
      return Tagged{*w.leaves[leaf], cfg_.leaf_vn[leaf]};
    }
    auto [l, r] = children(h);
    return w.up[port == kInLeft ? l : r];
  }

  void evaluate(Wave& w, int h, std::vector<Completion<T>>& done) {
    const auto& as = cfg_.switches[h];
    for (const auto& g : as.active_groups()) {
      std::optional<T> acc;
      int seen = 0;
      for (int p = 0; p < 3; ++p) {
        if (!g.inputs[p]) continue;
        auto in = input_of(w, h, p);
        if (!in) continue;
        if (in->vn != g.vn) ++counters_.port_conflicts;
        acc = acc ? Arith<T>::add(*acc, in->value) : in->value;
        ++seen;
      }
      if (!acc) continue;
      if (seen > 1)
        counters_.additions += seen - 1;
      else
        ++counters_.forwards;
      int port = g.output == AsOutput::Up ? 0 : g.output == AsOutput::Lateral ? 1 : 2;
      if (++w.port_use[h][port] > 1) ++counters_.port_conflicts;
      switch (g.output) {
        case AsOutput::Up: w.up[h] = Tagged{*acc, g.vn}; break;
        case AsOutput::Lateral:
          w.lateral[h] = Tagged{*acc, g.vn};
          ++counters_.lateral_transfers;
          break;
        case AsOutput::Bus: done.push_back({g.vn, h, *acc, w.tag}); break;
        case AsOutput::None: break;
      }
    }
  }

  void compute_offsets(const LatencyModel& lat) {
    // Bottom-up; lateral senders never receive, so one pass per level followed
    // by the lateral fix-up is exact.
    for (int level = 1; level <= cfg_.depth; ++level) {
      int count = 1 << (cfg_.depth - level);
      for (int i = 0; i < count; ++i) {
        int h = cfg_.heap_index(level, i);
        const auto& as = cfg_.switches[h];
        int off = -1;
        for (const auto& g : as.active_groups()) {
          for (int p = 0; p < 2; ++p) {
            if (!g.inputs[p]) continue;
            int from = level == 1 ? lat.multiply : offsets_[children(h).first + p] + lat.art_level;
            off = std::max(off, from);
          }
        }
        offsets_[h] = off;
      }
      for (int i = 0; i < count; ++i) {
        int h = cfg_.heap_index(level, i);
        const auto& as = cfg_.switches[h];
        for (const auto& g : as.active_groups())
          if (g.inputs[kInLateral])
            offsets_[h] = std::max(offsets_[h], offsets_[as.lateral_peer] + lat.art_level + lat.lateral_extra);
      }
    }
    int max_off = 0;
    for (int o : offsets_) max_off = std::max(max_off, o);
    by_offset_.assign(max_off + 1, {});
    for (std::size_t h = 0; h < offsets_.size(); ++h)
      if (offsets_[h] > 0) by_offset_[offsets_[h]].push_back(static_cast<int>(h));
  }

  RnConfig cfg_;
  std::vector<int> offsets_;
  std::vector<std::vector<int>> by_offset_;
  std::deque<Wave> waves_;
  ArtCounters counters_;
};

// ---- collector buses ---------------------------------------------------------

/// Round-robin over a fixed set of requesters; the pointer moves past the
/// last grant so every persistent requester is served within n grants.
class RoundRobinArbiter {
 public:
  explicit RoundRobinArbiter(int requesters) : n_(requesters) {}

  std::optional<int> grant(std::span<const std::uint8_t> requests) {
    for (int i = 0; i < n_; ++i) {
      int idx = (pointer_ + i) % n_;
      if (requests[idx]) {
        pointer_ = (idx + 1) % n_;
        return idx;
      }
    }
    return std::nullopt;
  }

  int pointer() const { return pointer_; }

 private:
  int n_;
  int pointer_ = 0;
};

struct BusCounters {
  Count grants = 0;
  Count conflicts = 0;    // requests - grants, summed over bus-cycles
  Count stall_cycles = 0; // bus-cycles with at least one losing request
  Count fifo_pushes = 0;
  Count fifo_pops = 0;
  Count max_fifo_occupancy = 0;
};

template <typename T>
struct BusEntry {
  PbWrite<T> write;
  std::uint64_t tag = 0;  // caller-defined, carried to the PB
};

template <typename T>
struct BusCycleResult {
  std::vector<BusEntry<T>> granted;  // entered a bus this cycle
  std::vector<BusEntry<T>> written;  // landed in the PB this cycle
};

/// Output FIFOs of every AS, the collector buses and their arbiters.
template <typename T>
class CollectorBuses {
 public:
  CollectorBuses(int num_as, int buses, int grant_latency)
      : fifos_(num_as), attached_(buses), arbiters_(), grant_latency_(grant_latency) {
    for (int h = 0; h < num_as; ++h) attached_[h % buses].push_back(h);
    for (const auto& a : attached_) arbiters_.emplace_back(static_cast<int>(a.size()));
  }

  int bus_of(int as) const { return as % static_cast<int>(attached_.size()); }

  void push(int as, BusEntry<T> entry, Cycle cycle) {
    fifos_.at(as).push_back({entry, cycle});
    ++counters_.fifo_pushes;
    counters_.max_fifo_occupancy =
        std::max<Count>(counters_.max_fifo_occupancy, static_cast<Count>(fifos_[as].size()));
  }

  /// Lands bus transfers that are due in the PB (retrying any the PB defers),
  /// then grants one FIFO head per bus among entries pushed before `cycle`.
  BusCycleResult<T> arbitrate_and_write(PrefetchBuffer<T>& pb, Cycle cycle) {
    BusCycleResult<T> result;
    std::vector<BusEntry<T>> due;
    while (!on_bus_.empty() && on_bus_.front().due <= cycle) {
      due.push_back(on_bus_.front().entry);
      on_bus_.pop_front();
    }
    if (!due.empty()) {
      std::vector<PbWrite<T>> writes;
      for (const auto& e : due) writes.push_back(e.write);
      auto wr = pb.serve_writes(writes, cycle);
      std::vector<bool> deferred(due.size(), false);
      for (auto i : wr.deferred) deferred[i] = true;
      for (std::size_t i = due.size(); i-- > 0;) {
        if (deferred[i])
          on_bus_.push_front({due[i], cycle + 1});
      }
      for (std::size_t i = 0; i < due.size(); ++i)
        if (!deferred[i]) result.written.push_back(due[i]);
    }

    for (std::size_t b = 0; b < attached_.size(); ++b) {
      const auto& ases = attached_[b];
      std::vector<std::uint8_t> req(ases.size());
      int requests = 0;
      for (std::size_t j = 0; j < ases.size(); ++j) {
        const auto& f = fifos_[ases[j]];
        req[j] = !f.empty() && f.front().pushed < cycle;
        requests += req[j];
      }
      if (requests == 0) continue;
      auto g = arbiters_[b].grant(req);
      auto& f = fifos_[ases[*g]];
      auto w = f.front().entry;
      f.pop_front();
      ++counters_.fifo_pops;
      ++counters_.grants;
      counters_.conflicts += requests - 1;
      if (requests > 1) ++counters_.stall_cycles;
      result.granted.push_back(w);
      insert_on_bus({w, cycle + grant_latency_});
    }
    return result;
  }

  bool idle() const {
    if (!on_bus_.empty()) return false;
    for (const auto& f : fifos_)
      if (!f.empty()) return false;
    return true;
  }

  const BusCounters& counters() const { return counters_; }
  std::size_t fifo_size(int as) const { return fifos_.at(as).size(); }

 private:
  struct Entry {
    BusEntry<T> entry;
    Cycle pushed;
  };
  struct Transfer {
    BusEntry<T> entry;
    Cycle due;
  };

  void insert_on_bus(Transfer t) {
    auto it = on_bus_.end();
    while (it != on_bus_.begin() && std::prev(it)->due > t.due) --it;
    on_bus_.insert(it, t);
  }

  std::vector<std::deque<Entry>> fifos_;
  std::vector<std::vector<int>> attached_;
  std::vector<RoundRobinArbiter> arbiters_;
  std::deque<Transfer> on_bus_;
  int grant_latency_;
  BusCounters counters_;
};

}  // namespace flexaccel
