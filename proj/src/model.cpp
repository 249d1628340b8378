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

#include "flexaccel/model.hpp"

#include <set>

#include "flexaccel/documents.hpp"
#include "flexaccel/memory.hpp"
#include "flexaccel/tensor_io.hpp"
#include "flexaccel/tiler.hpp"

namespace flexaccel {

namespace {

using nlohmann::json;

std::size_t per_sample(const std::vector<std::size_t>& dims) {
  std::size_t p = 1;
  for (std::size_t i = 1; i < dims.size(); ++i) p *= dims[i];
  return p;
}

}  // namespace

ModelSpec parse_model(std::string_view text, const std::filesystem::path& base_dir) {
  auto doc = parse_document(text, "model");
  ModelSpec spec;
  try {
    if (!doc.is_object()) throw ValidationError("model: document must be an object");
    for (auto it = doc.begin(); it != doc.end(); ++it)
      if (it.key() != "version" && it.key() != "element" && it.key() != "layers")
        throw ValidationError("model: unknown key '" + it.key() + "'");
    if (doc.contains("version") && doc["version"] != kDocumentVersion)
      throw ValidationError("model: unsupported version");
    spec.element = doc.value("element", std::string("int32"));
    if (spec.element != "int32" && spec.element != "float32")
      throw ValidationError("model: element must be int32 or float32");
    const auto& layers = doc.at("layers");
    if (!layers.is_array() || layers.empty()) throw ValidationError("model: layers must be a non-empty array");
    std::set<std::string> names;
    for (const auto& e : layers) {
      ModelLayerSpec l;
      l.name = e.at("name").get<std::string>();
      if (!names.insert(l.name).second) throw ValidationError("model: duplicate layer name '" + l.name + "'");
      l.layer = layer_from_json(e.at("layer"));
      if (e.contains("tile")) {
        const auto& t = e["tile"];
        if (t.is_string()) {
          if (t != "search") throw ValidationError("model: layer '" + l.name + "' tile must be an object or \"search\"");
        } else {
          l.tile = tile_from_json(t);
          validate_tile(l.layer, *l.tile);
        }
      }
      if (e.contains("data")) {
        const auto& d = e["data"];
        if (d.contains("seed")) l.seed = d["seed"].get<std::uint64_t>();
        if (d.contains("weights")) l.weights_file = base_dir / d["weights"].get<std::string>();
        if (d.contains("inputs")) l.inputs_file = base_dir / d["inputs"].get<std::string>();
      }
      spec.layers.push_back(std::move(l));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model: ") + e.what());
  }

  for (std::size_t i = 1; i < spec.layers.size(); ++i) {
    const auto& prev = spec.layers[i - 1];
    const auto& cur = spec.layers[i];
    auto out = output_dims(prev.layer);
    auto in = input_dims(cur.layer);
    if (out[0] != in[0] || per_sample(out) != per_sample(in))
      throw ValidationError("model: output of layer '" + prev.name + "' " + Tensor<int>(out).dims_string() +
                            " does not chain into input of layer '" + cur.name + "' " +
                            Tensor<int>(in).dims_string());
    if (cur.inputs_file)
      throw ValidationError("model: layer '" + cur.name + "' takes its inputs from layer '" + prev.name + "'");
  }
  return spec;
}

template <typename T>
ModelResult<T> run_model(const HardwareConfig& hw, const ModelSpec& model, std::uint64_t seed, bool verify,
                         double tolerance) {
  ModelResult<T> result;
  Tensor<T> current;
  Tensor<T> oracle_current;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& spec = model.layers[i];
    const auto& layer = spec.layer;
    const std::uint64_t layer_seed = spec.seed.value_or(seed + i);
    try {
      auto data = random_layer_data<T>(layer, layer_seed);
      if (spec.weights_file) data.weights = read_tensor<T>(*spec.weights_file, weight_dims(layer));
      if (i == 0) {
        if (spec.inputs_file) data.inputs = read_tensor<T>(*spec.inputs_file, input_dims(layer));
        oracle_current = data.inputs;
      } else {
        data.inputs = current.reshaped(input_dims(layer));
        if (verify) oracle_current = oracle_current.reshaped(input_dims(layer));
      }

      TileConfig tile = spec.tile ? *spec.tile : enumerate_tiles(hw, layer).front().tile;
      PrefetchBuffer<T> pb(hw);
      pb.load_layer_data(layer, data.inputs, data.weights);
      LayerRun run;
      run.name = spec.name;
      run.tile = tile;
      run.stats = simulate_layer(hw, layer, tile, pb);
      current = pb.take_outputs();
      if (verify) {
        auto same_input = conv_reference(layer, data.inputs, data.weights);
        run.verdict = compare(current, same_input.output, tolerance);
        result.verified = result.verified && run.verdict->pass;
        oracle_current = conv_reference(layer, oracle_current, data.weights).output;
      }
      accumulate(result.totals, run.stats);
      result.layers.push_back(std::move(run));
    } catch (const Error& e) {
      throw LayerFailure(spec.name, e.what(), std::current_exception());
    }
  }
  result.totals.effective_ms_utilization =
      result.totals.total_cycles > 0
          ? static_cast<double>(result.totals.busy_ms_cycles) / (double(hw.num_ms) * result.totals.total_cycles)
          : 0.0;
  double weighted = 0.0;
  for (const auto& l : result.layers) weighted += l.stats.theoretical_utilization * l.stats.total_cycles;
  result.totals.theoretical_utilization =
      result.totals.total_cycles > 0 ? weighted / result.totals.total_cycles : 0.0;
  result.output = std::move(current);
  if (verify) {
    auto final_check = compare(result.output, oracle_current, tolerance);
    result.verified = result.verified && final_check.pass;
    result.oracle_output = std::move(oracle_current);
  }
  return result;
}

template <typename T>
json to_json(const ModelResult<T>& r) {
  json layers = json::array();
  for (const auto& l : r.layers) {
    json e{{"name", l.name}, {"tile", to_json(l.tile)}, {"stats", to_json(l.stats)}};
    if (l.verdict) e["verified"] = l.verdict->pass;
    layers.push_back(std::move(e));
  }
  json doc{{"version", kDocumentVersion}, {"layers", layers}, {"totals", to_json(r.totals)}};
  if (r.oracle_output) doc["verified"] = r.verified;
  return doc;
}

template ModelResult<std::int32_t> run_model<std::int32_t>(const HardwareConfig&, const ModelSpec&, std::uint64_t,
                                                           bool, double);
template ModelResult<float> run_model<float>(const HardwareConfig&, const ModelSpec&, std::uint64_t, bool, double);
template json to_json(const ModelResult<std::int32_t>&);
template json to_json(const ModelResult<float>&);

}  // namespace flexaccel
