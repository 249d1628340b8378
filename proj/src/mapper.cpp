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

#include "flexaccel/mapper.hpp"

#include <algorithm>
#include <bit>
#include <string>
#include <unordered_map>

#include "flexaccel/documents.hpp"

namespace flexaccel {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

struct OutputCoord {
  int n, g, k, x, y;
};

OutputCoord decode_output(const LayerConfig& l, std::int64_t o) {
  const std::int64_t xo = l.out_rows(), yo = l.out_cols();
  OutputCoord c{};
  c.y = static_cast<int>(o % yo);
  o /= yo;
  c.x = static_cast<int>(o % xo);
  o /= xo;
  c.k = static_cast<int>(o % l.filters);
  o /= l.filters;
  c.g = static_cast<int>(o % l.groups);
  c.n = static_cast<int>(o / l.groups);
  return c;
}

std::int64_t encode_output(const LayerConfig& l, int n, int g, int k, int x, int y) {
  return (((std::int64_t{n} * l.groups + g) * l.filters + k) * l.out_rows() + x) * l.out_cols() + y;
}

std::vector<ScheduleStep> build_schedule(const MappingPlan& p) {
  const auto& l = p.layer;
  const auto& t = p.tile;
  const int xo = l.out_rows(), yo = l.out_cols();
  const auto slots = static_cast<std::size_t>(p.n_vns_mapped);
  std::vector<ScheduleStep> steps;
  std::vector<std::int64_t> last_key(slots, -1);
  std::vector<std::int64_t> vns;

  auto emit_batch = [&](std::span<const std::int64_t> batch) {
    for (int f = 0; f < p.folds; ++f) {
      ScheduleStep s;
      s.fold = f;
      s.outputs.assign(slots, -1);
      s.reload_weights.assign(slots, 0);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        auto c = decode_output(l, batch[i]);
        std::int64_t key = (std::int64_t{c.g} * l.filters + c.k) * p.folds + f;
        s.outputs[i] = batch[i];
        if (key != last_key[i]) {
          s.reload_weights[i] = 1;
          last_key[i] = key;
        }
      }
      steps.push_back(std::move(s));
    }
  };

  for (int g0 = 0; g0 < l.groups; g0 += t.groups)
    for (int k0 = 0; k0 < l.filters; k0 += t.filters)
      for (int n0 = 0; n0 < l.batch; n0 += t.batch)
        for (int x0 = 0; x0 < xo; x0 += t.out_rows)
          for (int y0 = 0; y0 < yo; y0 += t.out_cols) {
            vns.clear();
            for (int g = g0; g < std::min(g0 + t.groups, l.groups); ++g)
              for (int k = k0; k < std::min(k0 + t.filters, l.filters); ++k)
                for (int n = n0; n < std::min(n0 + t.batch, l.batch); ++n)
                  for (int x = x0; x < std::min(x0 + t.out_rows, xo); ++x)
                    for (int y = y0; y < std::min(y0 + t.out_cols, yo); ++y)
                      vns.push_back(encode_output(l, n, g, k, x, y));
            for (std::size_t b = 0; b < vns.size(); b += slots)
              emit_batch(std::span(vns).subspan(b, std::min(slots, vns.size() - b)));
          }
  return steps;
}

// ART configuration builder.
class RnBuilder {
 public:
  RnBuilder(int num_leaves) {
    if (num_leaves < 2 || !std::has_single_bit(static_cast<unsigned>(num_leaves)))
      throw UnroutableVN("reduction tree needs a power-of-two leaf count >= 2");
    cfg_.num_leaves = num_leaves;
    cfg_.depth = std::countr_zero(static_cast<unsigned>(num_leaves));
    cfg_.switches.resize(static_cast<std::size_t>(num_leaves - 1));
    cfg_.leaf_vn.assign(static_cast<std::size_t>(num_leaves), -1);
    for (int level = 1; level <= cfg_.depth; ++level)
      for (int i = 0; i < (1 << (cfg_.depth - level)); ++i) {
        auto& as = cfg_.switches[cfg_.heap_index(level, i)];
        as.level = level;
        as.index = i;
      }
  }

  RnConfig build(std::span<const LeafRange> vns) {
    struct Run {
      int vn, s, e;
    };
    std::vector<Run> runs;
    cfg_.egress.assign(vns.size(), -1);
    int prev_end = 0;
    for (std::size_t v = 0; v < vns.size(); ++v) {
      const auto& r = vns[v];
      if (r.begin < prev_end || r.end <= r.begin || r.end > cfg_.num_leaves)
        throw UnroutableVN("VN leaf ranges must be non-empty, ascending and disjoint");
      prev_end = r.end;
      const int vn = static_cast<int>(v);
      for (int leaf = r.begin; leaf < r.end; ++leaf) {
        cfg_.leaf_vn[leaf] = vn;
        add_input(cfg_.heap_index(1, leaf / 2), vn, leaf % 2);
      }
      runs.push_back({vn, r.begin / 2, (r.end - 1) / 2});
    }

    for (int level = 1; level <= cfg_.depth; ++level) {
      std::vector<Run> next;
      for (auto run : runs) {
        if (run.s < run.e && run.s % 2 == 1) {
          lateral(level, run.vn, run.s, run.s + 1);
          ++run.s;
        }
        if (run.s < run.e && run.e % 2 == 0) {
          lateral(level, run.vn, run.e, run.e - 1);
          --run.e;
        }
        if (run.s == run.e) {
          int h = cfg_.heap_index(level, run.s);
          if (!port_taken(h, AsOutput::Bus)) {
            set_output(h, run.vn, AsOutput::Bus);
            cfg_.egress[run.vn] = h;
            continue;
          }
          if (level == cfg_.depth) throw UnroutableVN("no egress left for VN " + std::to_string(run.vn));
        }
        for (int n = run.s; n <= run.e; ++n) {
          set_output(cfg_.heap_index(level, n), run.vn, AsOutput::Up);
          add_input(cfg_.heap_index(level + 1, n / 2), run.vn, n % 2);
        }
        next.push_back({run.vn, run.s / 2, run.e / 2});
      }
      runs = std::move(next);
    }
    if (!runs.empty()) throw UnroutableVN("reduction did not complete");
    for (auto& as : cfg_.switches) as.mode = mode_of(as);
    return std::move(cfg_);
  }

 private:
  AsGroup& group(int h, int vn, bool create) {
    auto& as = cfg_.switches[h];
    for (int i = 0; i < as.group_count; ++i)
      if (as.groups[i].vn == vn) return as.groups[i];
    if (!create) throw UnroutableVN("VN " + std::to_string(vn) + " has no group at AS " + std::to_string(h));
    if (as.group_count == 2) throw UnroutableVN("AS " + std::to_string(h) + " would serve three VNs");
    auto& g = as.groups[as.group_count++];
    g.vn = vn;
    return g;
  }

  void add_input(int h, int vn, int port) {
    for (const auto& g : cfg_.switches[h].active_groups())
      if (g.inputs[port]) throw UnroutableVN("AS " + std::to_string(h) + " input port used twice");
    group(h, vn, true).inputs[port] = true;
  }

  bool port_taken(int h, AsOutput out) const {
    for (const auto& g : cfg_.switches[h].active_groups())
      if (g.output == out) return true;
    return false;
  }

  void set_output(int h, int vn, AsOutput out) {
    if (port_taken(h, out))
      throw UnroutableVN("AS " + std::to_string(h) + " output " + std::string(to_string(out)) + " used twice");
    auto& g = group(h, vn, false);
    if (g.output != AsOutput::None) throw UnroutableVN("VN group routed to two outputs");
    g.output = out;
  }

  void lateral(int level, int vn, int from, int to) {
    int hf = cfg_.heap_index(level, from), ht = cfg_.heap_index(level, to);
    set_output(hf, vn, AsOutput::Lateral);
    add_input(ht, vn, kInLateral);
    cfg_.switches[ht].lateral_peer = hf;
  }

  static AsMode mode_of(const AdderSwitchConfig& as) {
    if (as.group_count == 0) return AsMode::Idle;
    int a = as.groups[0].input_count();
    int b = as.group_count > 1 ? as.groups[1].input_count() : 0;
    if (a + b == 3 && as.group_count == 1) return AsMode::Add3to1;
    if (as.group_count == 1 && a == 2) return AsMode::Add2to1;
    if (a >= 2 || b >= 2) return AsMode::Add1Fwd1;
    return AsMode::Fwd2to2;
  }

  RnConfig cfg_;
};

}  // namespace

int ScheduleStep::active_slots() const {
  return static_cast<int>(std::count_if(outputs.begin(), outputs.end(), [](auto o) { return o >= 0; }));
}

FoldOrigin MappingPlan::fold_origin(int fold) const {
  FoldOrigin o;
  o.col = (fold % col_chunks) * tile.filter_cols;
  fold /= col_chunks;
  o.row = (fold % row_chunks) * tile.filter_rows;
  o.channel = (fold / row_chunks) * tile.channels;
  return o;
}

Count compute_folds(const LayerConfig& layer, const TileConfig& tile) {
  return Count{ceil_div(layer.filter_rows, tile.filter_rows)} * ceil_div(layer.filter_cols, tile.filter_cols) *
         ceil_div(layer.channels, tile.channels);
}

Count real_vn_size(const HardwareConfig& hw, const LayerConfig& layer, const TileConfig& tile) {
  bool forwarder = compute_folds(layer, tile) > 1 && hw.folding == FoldingStrategy::ForwarderRoundtrip;
  return tile.vn_size() + (forwarder ? 1 : 0);
}

MappingPlan build_mapping(const HardwareConfig& hw, const LayerConfig& layer, const TileConfig& tile) {
  hw.validate();
  layer.validate();
  validate_tile(layer, tile);

  MappingPlan p;
  p.hw = hw;
  p.layer = layer;
  p.tile = tile;
  p.vn_size = tile.vn_size();
  p.folds = compute_folds(layer, tile);
  p.real_vn_size = real_vn_size(hw, layer, tile);
  p.row_chunks = ceil_div(layer.filter_rows, tile.filter_rows);
  p.col_chunks = ceil_div(layer.filter_cols, tile.filter_cols);
  p.channel_chunks = ceil_div(layer.channels, tile.channels);
  if (p.real_vn_size > hw.num_ms)
    throw VnTooLarge("VN needs " + std::to_string(p.real_vn_size) + " multipliers but only " +
                     std::to_string(hw.num_ms) + " exist");
  p.n_vns_mapped = std::min<Count>(tile.n_vns(), routable_vn_capacity(hw.num_ms, p.real_vn_size));
  if (p.n_vns_mapped < 1) throw InfeasibleTile("tile maps no virtual neuron");

  p.ms_assignment.assign(static_cast<std::size_t>(hw.num_ms), {});
  for (int v = 0; v < p.n_vns_mapped; ++v) {
    int begin = static_cast<int>(v * p.real_vn_size);
    p.vn_leaves.push_back({begin, begin + static_cast<int>(p.real_vn_size)});
    for (int j = 0; j < p.real_vn_size; ++j)
      p.ms_assignment[begin + j] = {v, j, j < p.vn_size ? MsMode::Multiplier : MsMode::Forwarder};
  }
  p.rn_config = generate_rn_config(p);
  p.schedule = build_schedule(p);
  return p;
}

TheoreticalUtilization theoretical_utilization(const HardwareConfig& hw, const MappingPlan& plan) {
  TheoreticalUtilization u;
  u.mapped_ms = plan.mapped_ms();
  u.fraction = static_cast<double>(u.mapped_ms) / hw.num_ms;
  return u;
}

RnConfig generate_rn_config(int num_leaves, std::span<const LeafRange> vns) {
  return RnBuilder(num_leaves).build(vns);
}

Count routable_vn_capacity(int num_ms, Count real_vn_size) {
  if (real_vn_size < 1 || real_vn_size > num_ms) return 0;
  std::vector<LeafRange> vns;
  for (Count v = 0; v < num_ms / real_vn_size; ++v)
    vns.push_back({static_cast<int>(v * real_vn_size), static_cast<int>((v + 1) * real_vn_size)});
  // The ART has num_ms - 1 egress ports; drop trailing VNs it cannot drain.
  while (!vns.empty()) {
    try {
      generate_rn_config(num_ms, vns);
      break;
    } catch (const UnroutableVN&) {
      vns.pop_back();
    }
  }
  return static_cast<Count>(vns.size());
}

RnConfig generate_rn_config(const MappingPlan& plan) {
  return generate_rn_config(plan.hw.num_ms, plan.vn_leaves);
}

std::vector<DnRoute> generate_dn_routes(const MappingPlan& plan, std::size_t step_index) {
  return generate_dn_routes(plan, step_index, DistributionTree(plan.hw.num_ms, plan.hw.dn_bw));
}

std::vector<DnRoute> generate_dn_routes(const MappingPlan& plan, std::size_t step_index,
                                        const DistributionTree& tree) {
  const auto& step = plan.schedule.at(step_index);
  const auto& l = plan.layer;
  const auto& t = plan.tile;
  const auto origin = plan.fold_origin(step.fold);
  const int plane = t.filter_rows * t.filter_cols;

  std::array<std::vector<DnRoute>, 3> by_kind;
  std::unordered_map<std::uint64_t, std::size_t> index;
  auto add = [&](OperandKind kind, Region region, std::size_t offset, int leaf) {
    int sub = tree.subtree_of(leaf);
    std::uint64_t key = (static_cast<std::uint64_t>(offset) * 3 + static_cast<std::uint64_t>(kind)) *
                            static_cast<std::uint64_t>(tree.subtrees()) +
                        static_cast<std::uint64_t>(sub);
    auto& list = by_kind[static_cast<int>(kind)];
    auto [it, fresh] = index.try_emplace(key, list.size());
    if (fresh) {
      DnRoute r;
      r.kind = kind;
      r.source = {region, offset};
      r.route.subtree = sub;
      list.push_back(std::move(r));
    }
    list[it->second].leaves.push_back(leaf);
  };

  for (std::size_t slot = 0; slot < step.outputs.size(); ++slot) {
    const auto o = step.outputs[slot];
    if (o < 0) continue;
    const auto c = decode_output(l, o);
    const int base = static_cast<int>(slot * plan.real_vn_size);
    for (int j = 0; j < plan.vn_size; ++j) {
      const int ch = origin.channel + j / plane;
      const int r = origin.row + (j % plane) / t.filter_cols;
      const int s = origin.col + j % t.filter_cols;
      if (ch >= l.channels || r >= l.filter_rows || s >= l.filter_cols) continue;
      if (step.reload_weights[slot]) {
        auto w = (((static_cast<std::size_t>(c.g) * l.filters + c.k) * l.channels + ch) * l.filter_rows + r) *
                     l.filter_cols + s;
        add(OperandKind::Weight, Region::Weights, w, base + j);
      }
      const int x = c.x * l.stride + r - l.padding;
      const int y = c.y * l.stride + s - l.padding;
      if (x < 0 || y < 0 || x >= l.in_rows || y >= l.in_cols) continue;
      auto i = (((static_cast<std::size_t>(c.n) * l.groups + c.g) * l.channels + ch) * l.in_rows + x) * l.in_cols + y;
      add(OperandKind::Input, Region::Inputs, i, base + j);
    }
    if (plan.has_forwarder() && step.fold > 0)
      add(OperandKind::Psum, Region::Psums, static_cast<std::size_t>(o), base + static_cast<int>(plan.vn_size));
  }

  std::vector<DnRoute> out;
  for (auto& list : by_kind)
    for (auto& r : list) {
      r.route = tree.route(r.route.subtree, r.leaves);
      out.push_back(std::move(r));
    }
  return out;
}

nlohmann::json to_json(const MappingPlan& p) {
  using nlohmann::json;
  json ms = json::array();
  for (const auto& a : p.ms_assignment)
    ms.push_back({{"vn", a.vn}, {"lane", a.lane}, {"mode", std::string(to_string(a.mode))}});

  json switches = json::array();
  for (std::size_t h = 0; h < p.rn_config.switches.size(); ++h) {
    const auto& as = p.rn_config.switches[h];
    if (as.mode == AsMode::Idle) continue;
    json groups = json::array();
    for (const auto& g : as.active_groups()) {
      json inputs = json::array();
      if (g.inputs[kInLeft]) inputs.push_back("left");
      if (g.inputs[kInRight]) inputs.push_back("right");
      if (g.inputs[kInLateral]) inputs.push_back("lateral");
      groups.push_back({{"vn", g.vn}, {"inputs", inputs}, {"output", std::string(to_string(g.output))}});
    }
    switches.push_back({{"heap", h},
                        {"level", as.level},
                        {"index", as.index},
                        {"mode", std::string(to_string(as.mode))},
                        {"groups", groups}});
  }

  json steps = json::array();
  for (const auto& s : p.schedule)
    steps.push_back({{"fold", s.fold}, {"outputs", s.outputs}, {"reload_weights", s.reload_weights}});

  json vns = json::array();
  for (const auto& r : p.vn_leaves) vns.push_back({r.begin, r.end});

  return {{"version", kDocumentVersion},
          {"hardware", to_json(p.hw)},
          {"layer", to_json(p.layer)},
          {"tile", to_json(p.tile)},
          {"vn_size", p.vn_size},
          {"real_vn_size", p.real_vn_size},
          {"folds", p.folds},
          {"n_vns_mapped", p.n_vns_mapped},
          {"theoretical_utilization", theoretical_utilization(p.hw, p).fraction},
          {"vn_leaves", vns},
          {"ms_assignment", ms},
          {"rn_config", {{"egress", p.rn_config.egress}, {"switches", switches}}},
          {"schedule", steps}};
}

}  // namespace flexaccel
