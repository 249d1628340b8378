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

#include <catch_amalgamated.hpp>

#include <random>

#include "flexaccel/engine.hpp"
#include "test_support.hpp"

using namespace flexaccel;
using namespace flexaccel::testing;

TEST_CASE("simulated outputs equal the oracle", "[engine][property]") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 120; ++trial) {
    auto t = random_triple(rng);
    auto run = run_checked(t.hw, t.layer, t.tile, 100 + trial);
    INFO("layer " << serialize(t.layer) << " tile " << to_string(t.tile) << " hw " << serialize(t.hw));
    REQUIRE(run.verdict.pass);
    REQUIRE(run.stats.port_conflicts == 0);
  }
}

TEST_CASE("float elements stay within tolerance", "[engine][property]") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    auto t = random_triple(rng, 20000);
    auto run = run_checked<float>(t.hw, t.layer, t.tile, 300 + trial);
    REQUIRE(run.verdict.pass);
  }
}

TEST_CASE("counters follow the mapping", "[engine][property]") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 80; ++trial) {
    auto t = random_triple(rng);
    auto plan = build_mapping(t.hw, t.layer, t.tile);
    const auto s = run_checked(t.hw, t.layer, t.tile).stats;
    const Count outputs = t.layer.output_count();
    const Count folds = plan.folds, vn = plan.vn_size, real = plan.real_vn_size;
    const bool roundtrip = t.hw.folding == FoldingStrategy::ForwarderRoundtrip && folds > 1;
    INFO("layer " << serialize(t.layer) << " tile " << to_string(t.tile) << " hw " << serialize(t.hw));

    REQUIRE(s.ms_multiplications == outputs * folds * vn);
    REQUIRE(s.ms_forwards == (roundtrip ? outputs * folds : 0));
    REQUIRE(s.busy_ms_cycles == s.ms_multiplications + s.ms_forwards);
    if (roundtrip) {
      REQUIRE(s.as_additions == outputs * folds * (real - 1));
      REQUIRE(s.psum_reads == outputs * (folds - 1));
      REQUIRE(s.psum_writes == outputs * (folds - 1));
      REQUIRE(s.pb_writes == outputs * folds);
    } else {
      REQUIRE(s.as_additions == outputs * (folds * (vn - 1) + folds - 1));
      REQUIRE(s.psum_reads == 0);
      REQUIRE(s.pb_writes == outputs);
    }
    REQUIRE(s.fold_roundtrips == s.psum_reads);
    REQUIRE(s.fifo_pushes == s.pb_writes);
    REQUIRE(s.fifo_pops == s.pb_writes);
    REQUIRE(s.steps == static_cast<Count>(plan.schedule.size()));
    REQUIRE(s.effective_ms_utilization <= s.theoretical_utilization + 1e-12);
    REQUIRE(s.busy_ms_cycles <= t.hw.num_ms * s.total_cycles);
    REQUIRE(s.pb_reads == s.weight_reads + s.input_reads + s.psum_reads);
  }
}

TEST_CASE("runs are deterministic", "[engine]") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    auto t = random_triple(rng);
    auto a = run_checked(t.hw, t.layer, t.tile, 5);
    auto b = run_checked(t.hw, t.layer, t.tile, 5);
    REQUIRE(a.stats == b.stats);
    REQUIRE(to_json(a.stats).dump() == to_json(b.stats).dump());
    REQUIRE(a.output == b.output);
  }
}

TEST_CASE("roundtrip folding never beats local accumulation", "[engine][property]") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 60; ++trial) {
    auto t = random_triple(rng);
    // Full bandwidth: the forwarder leaf shifts VNs across DN sub-trees, which
    // changes port contention independently of the folding strategy.
    t.hw.dn_bw = t.hw.rn_bw = t.hw.num_ms;
    auto rt = t.hw, ideal = t.hw;
    rt.folding = FoldingStrategy::ForwarderRoundtrip;
    ideal.folding = FoldingStrategy::IdealLocalAccumulation;
    if (real_vn_size(rt, t.layer, t.tile) > rt.num_ms) continue;
    const auto a = run_checked(rt, t.layer, t.tile).stats;
    const auto b = run_checked(ideal, t.layer, t.tile).stats;
    INFO("layer " << serialize(t.layer) << " tile " << to_string(t.tile) << " hw " << serialize(t.hw));
    if (compute_folds(t.layer, t.tile) == 1) {
      REQUIRE(a == b);
    } else {
      REQUIRE(a.total_cycles >= b.total_cycles);
    }
  }
}

TEST_CASE("utilization does not grow as bandwidth shrinks", "[engine]") {
  for (const auto& layer : {tiny(), late_synthetic()}) {
    double prev = 2.0;
    Count prev_cycles = 0;
    for (int bw : {64, 32, 16, 8, 4}) {
      auto run = run_checked(hardware(64, bw), layer, validation_tile());
      REQUIRE(run.verdict.pass);
      REQUIRE(run.stats.effective_ms_utilization <= prev + 1e-12);
      REQUIRE(run.stats.total_cycles >= prev_cycles);
      prev = run.stats.effective_ms_utilization;
      prev_cycles = run.stats.total_cycles;
    }
  }
}

TEST_CASE("TINY on 32 multipliers with bandwidth 4", "[engine]") {
  auto run = run_checked(hardware(32, 4), tiny(), validation_tile());
  REQUIRE(run.verdict.pass);
  const auto& s = run.stats;
  REQUIRE(s.theoretical_utilization == Catch::Approx(30.0 / 32));
  REQUIRE(s.ms_multiplications == 54 * 54);
  REQUIRE(s.fold_roundtrips == 54 * 5);
  REQUIRE(s.pb_writes == 54 * 6);
  REQUIRE(s.effective_ms_utilization == Catch::Approx(double(s.busy_ms_cycles) / (32.0 * s.total_cycles)));
}

TEST_CASE("fold iteration latency", "[engine]") {
  SECTION("bandwidth-bound batch") {
    auto plan = build_mapping(hardware(32, 4), tiny(), validation_tile());
    Count rt = 0, ideal = 0;
    for (int f = 0; f < plan.folds; ++f) {
      rt += run_fold_iteration(plan, f, FoldingStrategy::ForwarderRoundtrip);
      ideal += run_fold_iteration(plan, f, FoldingStrategy::IdealLocalAccumulation);
    }
    REQUIRE(rt >= ideal);
    REQUIRE_THROWS(run_fold_iteration(plan, 6, FoldingStrategy::ForwarderRoundtrip));
  }
  SECTION("single VN serializes on the psum") {
    const auto hw = hardware(32, 32);
    auto plan = build_mapping(hw, tiny(), TileConfig{3, 3, 1, 1, 1, 1, 1, 1});
    REQUIRE(plan.folds == 6);
    REQUIRE(plan.n_vns_mapped == 1);
    const auto& lat = hw.latency;
    // Ten leaves need at least four adder levels.
    const Count roundtrip = 4 * lat.art_level + lat.pb_write + lat.pb_read + lat.dn_traversal - 1;
    Count rt_total = 0, ideal_total = 0;
    for (int f = 0; f < plan.folds; ++f) {
      const Count rt = run_fold_iteration(plan, f, FoldingStrategy::ForwarderRoundtrip);
      const Count ideal = run_fold_iteration(plan, f, FoldingStrategy::IdealLocalAccumulation);
      REQUIRE(ideal > 0);
      if (f > 0) {
        REQUIRE(rt >= roundtrip);
        REQUIRE(rt > ideal);
      }
      rt_total += rt;
      ideal_total += ideal;
    }
    REQUIRE(rt_total >= 6 * roundtrip);
    REQUIRE(rt_total > ideal_total);
  }
  SECTION("single fold") {
    auto plan = build_mapping(hardware(32, 4), conv(3, 3, 2, 2, 4, 4), TileConfig{3, 3, 2, 1, 1, 1, 1, 1});
    REQUIRE(run_fold_iteration(plan, 0, FoldingStrategy::ForwarderRoundtrip) ==
            run_fold_iteration(plan, 0, FoldingStrategy::IdealLocalAccumulation));
  }
}

TEST_CASE("derived statistics", "[engine]") {
  SimStats s;
  collect_stats(s, {100, 3200, 32, 1.0});
  REQUIRE(s.effective_ms_utilization == 1.0);
  REQUIRE(s.total_cycles == 100);
  collect_stats(s, {100, 1600, 32, 0.5});
  REQUIRE(s.effective_ms_utilization == 0.5);
  REQUIRE(s.theoretical_utilization == 0.5);
  collect_stats(s, {0, 0, 32, 0.5});
  REQUIRE(s.effective_ms_utilization == 0.0);
}

TEST_CASE("stats document round trip", "[engine]") {
  auto s = run_checked(hardware(32, 4), tiny(), validation_tile()).stats;
  auto doc = to_json(s);
  REQUIRE(doc["version"] == 1);
  REQUIRE(stats_from_json(doc) == s);
  REQUIRE(stats_from_json(nlohmann::json::parse(doc.dump())) == s);
  SimStats sum;
  accumulate(sum, s);
  accumulate(sum, s);
  REQUIRE(sum.total_cycles == 2 * s.total_cycles);
  REQUIRE(sum.pb_writes == 2 * s.pb_writes);
}

TEST_CASE("fault hook corrupts exactly one output", "[engine]") {
  SimOptions opts;
  opts.fault_output = 5;
  auto run = run_checked(hardware(32, 4), tiny(), validation_tile(), 7, opts);
  REQUIRE_FALSE(run.verdict.pass);
  REQUIRE(run.verdict.mismatches == 1);
  REQUIRE(run.verdict.first_mismatch == run.expected.unravel(5));
}

TEST_CASE("tracing does not change results", "[engine]") {
  std::size_t events = 0;
  Cycle last = -1;
  bool ordered = true;
  SimOptions opts;
  opts.trace = [&](Cycle c, std::string_view, std::string_view) {
    ++events;
    ordered = ordered && c >= last;
    last = c;
  };
  auto traced = run_checked(hardware(32, 4), tiny(), validation_tile(), 7, opts);
  auto plain = run_checked(hardware(32, 4), tiny(), validation_tile(), 7);
  REQUIRE(events > 0);
  REQUIRE(ordered);
  REQUIRE(last < traced.stats.total_cycles);
  REQUIRE(traced.stats == plain.stats);
}

TEST_CASE("simulator exposes per-step completion", "[engine]") {
  const auto layer = tiny();
  auto data = random_layer_data<std::int32_t>(layer, 3);
  PrefetchBuffer<std::int32_t> pb(hardware(32, 4));
  pb.load_layer_data(layer, data.inputs, data.weights);
  Simulator<std::int32_t> sim(build_mapping(hardware(32, 4), layer, validation_tile()), pb);
  auto stats = sim.run();
  const auto& done = sim.step_done_cycles();
  REQUIRE(done.size() == sim.plan().schedule.size());
  REQUIRE(std::is_sorted(done.begin(), done.end()));
  REQUIRE(done.back() + 1 == stats.total_cycles);
}
