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

#include "flexaccel/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "flexaccel/config.hpp"
#include "flexaccel/documents.hpp"
#include "flexaccel/engine.hpp"
#include "flexaccel/errors.hpp"
#include "flexaccel/mapper.hpp"
#include "flexaccel/model.hpp"
#include "flexaccel/oracle.hpp"
#include "flexaccel/tensor_io.hpp"
#include "flexaccel/tiler.hpp"

namespace flexaccel {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

std::string document_text(const json& doc) { return doc.dump(2) + "\n"; }

int classify(std::exception_ptr ep, std::ostream& err) {
  try {
    std::rethrow_exception(ep);
  } catch (const LayerFailure& e) {
    err << "error: " << e.what() << "\n";
    std::ostringstream sink;
    return e.cause() ? classify(e.cause(), sink) : kExitFailure;
  } catch (const SyntaxError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ValidationError& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kExitParse;
  } catch (const ShapeMismatch& e) {
    err << "invalid data: " << e.what() << "\n";
    return kExitParse;
  } catch (const DimsMismatch& e) {
    err << "invalid data: " << e.what() << "\n";
    return kExitParse;
  } catch (const MappingError& e) {
    err << "mapping error: " << e.what() << "\n";
    return kExitMapping;
  } catch (const NoFeasibleTile& e) {
    err << "mapping error: " << e.what() << "\n";
    return kExitMapping;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

struct Common {
  std::string hw_file;
  std::string strategy;
  std::uint64_t seed = 1;

  HardwareConfig hardware() const {
    auto hw = parse_hardware_config(read_text(hw_file));
    if (!strategy.empty()) hw.folding = parse_folding_strategy(strategy);
    return hw;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--hw", c.hw_file, "hardware document")->required();
  cmd->add_option("--seed", c.seed, "random data seed");
  cmd->add_option("--strategy", c.strategy, "folding strategy override")
      ->check(CLI::IsMember({"roundtrip", "ideal"}));
}

struct LayerArgs {
  Common common;
  std::string layer_file;
  std::string tile_file;
  std::string element = "int32";
  std::string stats_out;
  std::string plan_out;
  std::string output_out;
  std::string inputs_file;
  std::string weights_file;
  std::string trace_out;
  bool trace = false;
  bool no_verify = false;
  std::optional<std::size_t> fault;
  int trials = 50;
};

template <typename T>
int run_layer_typed(const LayerArgs& a, std::ostream& out) {
  const auto hw = a.common.hardware();
  const auto layer = parse_layer_config(read_text(a.layer_file));
  const auto tile = parse_tile_config(read_text(a.tile_file));
  auto plan = build_mapping(hw, layer, tile);
  if (!a.plan_out.empty()) write_text(a.plan_out, document_text(to_json(plan)));

  auto data = random_layer_data<T>(layer, a.common.seed);
  if (!a.inputs_file.empty()) data.inputs = read_tensor<T>(a.inputs_file, input_dims(layer));
  if (!a.weights_file.empty()) data.weights = read_tensor<T>(a.weights_file, weight_dims(layer));

  PrefetchBuffer<T> pb(hw);
  pb.load_layer_data(layer, data.inputs, data.weights);

  SimOptions opts;
  opts.fault_output = a.fault;
  std::ofstream trace_file;
  std::ostream* trace_stream = &out;
  if (!a.trace_out.empty()) {
    trace_file.open(a.trace_out);
    if (!trace_file) throw ValidationError("cannot write " + a.trace_out);
    trace_stream = &trace_file;
  }
  if (a.trace)
    opts.trace = [trace_stream](Cycle t, std::string_view unit, std::string_view event) {
      *trace_stream << t << ' ' << unit << ' ' << event << '\n';
    };

  Simulator<T> sim(std::move(plan), pb, opts);
  const auto stats = sim.run();
  if (!a.output_out.empty()) write_tensor(a.output_out, pb.outputs());

  const std::string doc = document_text(to_json(stats));
  if (!a.stats_out.empty()) write_text(a.stats_out, doc);

  int code = kExitOk;
  out << "total_cycles: " << stats.total_cycles << "\n";
  out << "effective_ms_utilization: " << stats.effective_ms_utilization << "\n";
  if (!a.no_verify) {
    auto ref = conv_reference(layer, data.inputs, data.weights);
    auto verdict = compare(pb.outputs(), ref.output, 1e-3);
    out << "verification: " << (verdict.pass ? "PASS" : "FAIL") << " (" << verdict.report << ")\n";
    if (!verdict.pass) code = kExitVerification;
  } else {
    out << "verification: skipped\n";
  }
  if (a.stats_out.empty()) out << doc;
  return code;
}

template <typename T>
int verify_typed(const LayerArgs& a, std::ostream& out) {
  const auto hw = a.common.hardware();
  const auto layer = parse_layer_config(read_text(a.layer_file));
  const auto tile = parse_tile_config(read_text(a.tile_file));
  const auto plan = build_mapping(hw, layer, tile);
  int passed = 0;
  for (int i = 0; i < a.trials; ++i) {
    const std::uint64_t seed = a.common.seed + static_cast<std::uint64_t>(i);
    auto data = random_layer_data<T>(layer, seed);
    PrefetchBuffer<T> pb(hw);
    pb.load_layer_data(layer, data.inputs, data.weights);
    SimOptions opts;
    opts.fault_output = a.fault;
    Simulator<T> sim(plan, pb, opts);
    sim.run();
    auto verdict = compare(pb.outputs(), conv_reference(layer, data.inputs, data.weights).output, 1e-3);
    if (verdict.pass)
      ++passed;
    else
      out << "trial " << i << " (seed " << seed << "): FAIL " << verdict.report << "\n";
  }
  out << "verify: " << passed << "/" << a.trials << " passed\n";
  return passed == a.trials ? kExitOk : kExitVerification;
}

struct ModelArgs {
  Common common;
  std::string model_file;
  std::string stats_out;
  std::string output_out;
  bool no_verify = false;
};

template <typename T>
int run_model_typed(const ModelArgs& a, const ModelSpec& spec, std::ostream& out) {
  const auto hw = a.common.hardware();
  auto result = run_model<T>(hw, spec, a.common.seed, !a.no_verify);
  const std::string doc = document_text(to_json(result));
  if (!a.stats_out.empty()) write_text(a.stats_out, doc);
  if (!a.output_out.empty()) write_tensor(a.output_out, result.output);
  for (const auto& l : result.layers) {
    out << l.name << ": " << l.stats.total_cycles << " cycles, tile " << to_string(l.tile);
    if (l.verdict) out << ", " << (l.verdict->pass ? "PASS" : "FAIL");
    out << "\n";
  }
  out << "total_cycles: " << result.totals.total_cycles << "\n";
  if (result.oracle_output)
    out << "verification: " << (result.verified ? "PASS" : "FAIL") << " (chained oracle)\n";
  if (a.stats_out.empty()) out << doc;
  return result.verified ? kExitOk : kExitVerification;
}

struct SearchArgs {
  Common common;
  std::string layer_file;
  std::string out_file;
  std::size_t limit = kDefaultTileLimit;
  std::optional<std::size_t> top_k;
};

int search_tile(const SearchArgs& a, std::ostream& out) {
  const auto hw = a.common.hardware();
  const auto layer = parse_layer_config(read_text(a.layer_file));
  auto candidates = enumerate_tiles(hw, layer, a.limit);
  if (a.top_k) candidates = rank_by_simulation(std::move(candidates), hw, layer, *a.top_k, a.common.seed);
  json list = json::array();
  for (const auto& c : candidates) list.push_back(to_json(c));
  const std::string doc = document_text({{"version", kDocumentVersion}, {"candidates", list}});
  if (a.out_file.empty())
    out << doc;
  else
    write_text(a.out_file, doc);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cycle-level simulator of a flexible DNN accelerator", "flexaccel"};
  app.require_subcommand(1);

  LayerArgs layer_args;
  auto* run_layer_cmd = app.add_subcommand("run-layer", "simulate one layer and check it against the oracle");
  add_common(run_layer_cmd, layer_args.common);
  run_layer_cmd->add_option("--layer", layer_args.layer_file, "layer document")->required();
  run_layer_cmd->add_option("--tile", layer_args.tile_file, "tile document")->required();
  run_layer_cmd->add_option("--element", layer_args.element, "element type")
      ->check(CLI::IsMember({"int32", "float32"}));
  run_layer_cmd->add_option("--stats-out", layer_args.stats_out, "write the stats document here");
  run_layer_cmd->add_option("--plan-out", layer_args.plan_out, "write the mapping plan here");
  run_layer_cmd->add_option("--output-out", layer_args.output_out, "write the output tensor here");
  run_layer_cmd->add_option("--inputs", layer_args.inputs_file, "input tensor file");
  run_layer_cmd->add_option("--weights", layer_args.weights_file, "weight tensor file");
  run_layer_cmd->add_flag("--trace", layer_args.trace, "emit a per-cycle event trace");
  run_layer_cmd->add_option("--trace-out", layer_args.trace_out, "trace destination (default stdout)");
  run_layer_cmd->add_flag("--no-verify", layer_args.no_verify, "skip the oracle check");
  run_layer_cmd->add_option("--inject-fault", layer_args.fault)->group("");

  LayerArgs verify_args;
  auto* verify_cmd = app.add_subcommand("verify", "run randomized trials against the oracle");
  add_common(verify_cmd, verify_args.common);
  verify_cmd->add_option("--layer", verify_args.layer_file, "layer document")->required();
  verify_cmd->add_option("--tile", verify_args.tile_file, "tile document")->required();
  verify_cmd->add_option("--trials", verify_args.trials, "number of trials")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--element", verify_args.element, "element type")
      ->check(CLI::IsMember({"int32", "float32"}));
  verify_cmd->add_option("--inject-fault", verify_args.fault)->group("");

  ModelArgs model_args;
  auto* model_cmd = app.add_subcommand("run-model", "run a model file layer by layer");
  add_common(model_cmd, model_args.common);
  model_cmd->add_option("--model", model_args.model_file, "model document")->required();
  model_cmd->add_option("--stats-out", model_args.stats_out, "write the stats document here");
  model_cmd->add_option("--output-out", model_args.output_out, "write the final tensor here");
  model_cmd->add_flag("--no-verify", model_args.no_verify, "skip the oracle checks");

  SearchArgs search_args;
  auto* search_cmd = app.add_subcommand("search-tile", "enumerate and rank tiles for a layer");
  add_common(search_cmd, search_args.common);
  search_cmd->add_option("--layer", search_args.layer_file, "layer document")->required();
  search_cmd->add_option("--top-k", search_args.top_k, "re-rank the best k by simulation");
  search_cmd->add_option("--limit", search_args.limit, "candidate cap");
  search_cmd->add_option("--out", search_args.out_file, "write the candidate list here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitParse;
  }

  try {
    if (*run_layer_cmd)
      return layer_args.element == "int32" ? run_layer_typed<std::int32_t>(layer_args, out)
                                           : run_layer_typed<float>(layer_args, out);
    if (*verify_cmd)
      return verify_args.element == "int32" ? verify_typed<std::int32_t>(verify_args, out)
                                            : verify_typed<float>(verify_args, out);
    if (*model_cmd) {
      auto spec = parse_model(read_text(model_args.model_file), fs::path(model_args.model_file).parent_path());
      return spec.element == "int32" ? run_model_typed<std::int32_t>(model_args, spec, out)
                                     : run_model_typed<float>(model_args, spec, out);
    }
    if (*search_cmd) return search_tile(search_args, out);
  } catch (...) {
    return classify(std::current_exception(), err);
  }
  return kExitFailure;
}

}  // namespace flexaccel
