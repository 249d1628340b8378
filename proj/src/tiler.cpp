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

#include "flexaccel/tiler.hpp"

#include <algorithm>

#include "flexaccel/documents.hpp"
#include "flexaccel/engine.hpp"
#include "flexaccel/mapper.hpp"
#include "flexaccel/oracle.hpp"
#include "flexaccel/tensor_io.hpp"

namespace flexaccel {

namespace {

std::vector<int> divisors(int n) {
  std::vector<int> d;
  for (int i = 1; i <= n; ++i)
    if (n % i == 0) d.push_back(i);
  return d;
}

bool static_order(const TileCandidate& a, const TileCandidate& b) {
  if (a.theoretical_utilization != b.theoretical_utilization)
    return a.theoretical_utilization > b.theoretical_utilization;
  if (a.folds != b.folds) return a.folds < b.folds;
  return a.tile < b.tile;
}

}  // namespace

std::vector<TileCandidate> enumerate_tiles(const HardwareConfig& hw, const LayerConfig& layer, std::size_t limit) {
  hw.validate();
  layer.validate();
  std::vector<TileCandidate> out;
  const auto dr = divisors(layer.filter_rows), ds = divisors(layer.filter_cols), dc = divisors(layer.channels);
  const auto dg = divisors(layer.groups), dk = divisors(layer.filters), dn = divisors(layer.batch);
  const auto dx = divisors(layer.out_rows()), dy = divisors(layer.out_cols());

  for (int tr : dr)
    for (int ts : ds)
      for (int tc : dc) {
        TileConfig t{tr, ts, tc, 1, 1, 1, 1, 1};
        const Count real = real_vn_size(hw, layer, t);
        if (real > hw.num_ms) continue;
        const Count cap = routable_vn_capacity(hw.num_ms, real);
        const Count folds = compute_folds(layer, t);
        for (int tg : dg)
          for (int tk : dk) {
            if (Count{tg} * tk > cap) break;
            for (int tn : dn) {
              if (Count{tg} * tk * tn > cap) break;
              for (int tx : dx) {
                if (Count{tg} * tk * tn * tx > cap) break;
                for (int ty : dy) {
                  const Count vns = Count{tg} * tk * tn * tx * ty;
                  if (vns > cap) break;
                  TileCandidate c;
                  c.tile = {tr, ts, tc, tg, tk, tn, tx, ty};
                  c.folds = folds;
                  c.theoretical_utilization = static_cast<double>(vns * real) / hw.num_ms;
                  out.push_back(c);
                }
              }
            }
          }
      }
  std::sort(out.begin(), out.end(), static_order);
  if (out.size() > limit) out.resize(limit);
  if (out.empty()) throw NoFeasibleTile("no tile of this layer fits " + std::to_string(hw.num_ms) + " multipliers");
  return out;
}

std::vector<TileCandidate> rank_by_simulation(std::vector<TileCandidate> candidates, const HardwareConfig& hw,
                                              const LayerConfig& layer, std::size_t top_k, std::uint64_t seed) {
  if (candidates.size() > top_k) candidates.resize(top_k);
  const auto data = random_layer_data<std::int32_t>(layer, seed);
  const auto expected = conv_reference(layer, data.inputs, data.weights);
  for (auto& c : candidates) {
    PrefetchBuffer<std::int32_t> pb(hw);
    pb.load_layer_data(layer, data.inputs, data.weights);
    auto stats = simulate_layer(hw, layer, c.tile, pb);
    auto verdict = compare(pb.outputs(), expected.output);
    if (!verdict.pass) throw Error("tile " + to_string(c.tile) + " failed verification: " + verdict.report);
    c.estimated_cycles = stats.total_cycles;
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const TileCandidate& a, const TileCandidate& b) {
    if (*a.estimated_cycles != *b.estimated_cycles) return *a.estimated_cycles < *b.estimated_cycles;
    return static_order(a, b);
  });
  return candidates;
}

nlohmann::json to_json(const TileCandidate& c) {
  nlohmann::json j{{"tile", to_json(c.tile)},
                   {"theoretical_utilization", c.theoretical_utilization},
                   {"folds", c.folds}};
  j["estimated_cycles"] = c.estimated_cycles ? nlohmann::json(*c.estimated_cycles) : nlohmann::json(nullptr);
  return j;
}

}  // namespace flexaccel
