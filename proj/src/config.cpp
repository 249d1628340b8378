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

#include "flexaccel/config.hpp"

#include <array>
#include <bit>
#include <set>
#include <sstream>

#include "flexaccel/documents.hpp"
#include "flexaccel/errors.hpp"

namespace flexaccel {

using nlohmann::json;

namespace {

bool is_power_of_two(int v) { return v > 0 && std::has_single_bit(static_cast<unsigned>(v)); }

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void reject_unknown_keys(const json& doc, std::initializer_list<std::string_view> known,
                         std::string_view what) {
  if (!doc.is_object()) throw ValidationError(std::string(what) + " document must be an object");
  for (const auto& [key, _] : doc.items()) {
    bool found = false;
    for (auto k : known) found = found || key == k;
    if (!found) throw ValidationError("unknown key '" + key + "' in " + std::string(what));
  }
}

int read_int(const json& doc, const char* key, std::string_view what) {
  auto it = doc.find(key);
  if (it == doc.end())
    throw ValidationError("missing key '" + std::string(key) + "' in " + std::string(what));
  if (!it->is_number_integer())
    throw ValidationError("key '" + std::string(key) + "' in " + std::string(what) +
                          " must be an integer");
  auto v = it->get<long long>();
  if (v < INT32_MIN || v > INT32_MAX)
    throw ValidationError("key '" + std::string(key) + "' out of range");
  return static_cast<int>(v);
}

int read_int_or(const json& doc, const char* key, int fallback, std::string_view what) {
  return doc.contains(key) ? read_int(doc, key, what) : fallback;
}

void check_version(const json& doc, std::string_view what) {
  if (!doc.contains("version")) return;
  if (read_int(doc, "version", what) != kDocumentVersion)
    throw ValidationError("unsupported " + std::string(what) + " version");
}

}  // namespace

std::string_view to_string(FoldingStrategy s) {
  return s == FoldingStrategy::ForwarderRoundtrip ? "roundtrip" : "ideal";
}

FoldingStrategy parse_folding_strategy(std::string_view text) {
  if (text == "roundtrip") return FoldingStrategy::ForwarderRoundtrip;
  if (text == "ideal") return FoldingStrategy::IdealLocalAccumulation;
  throw ValidationError("folding strategy must be 'roundtrip' or 'ideal', got '" +
                        std::string(text) + "'");
}

void HardwareConfig::validate() const {
  require(num_ms >= 2 && is_power_of_two(num_ms), "num_ms must be a power of two >= 2");
  require(dn_bw >= 1 && dn_bw <= num_ms, "dn_bw must be in [1, num_ms]");
  require(is_power_of_two(dn_bw), "dn_bw must be a power of two");
  require(rn_bw >= 1 && rn_bw <= num_ms, "rn_bw must be in [1, num_ms]");
  const auto& l = latency;
  require(l.pb_read >= 1 && l.dn_traversal >= 1 && l.multiply >= 1 && l.art_level >= 1 &&
              l.bus_grant >= 1 && l.pb_write >= 1,
          "latencies must be >= 1");
  require(l.lateral_extra >= 0, "lateral_extra must be >= 0");
  require(l.operand_depth >= 1, "operand_depth must be >= 1");
}

void LayerConfig::validate() const {
  require(filter_rows >= 1 && filter_cols >= 1 && channels >= 1 && groups >= 1 && filters >= 1 &&
              batch >= 1 && in_rows >= 1 && in_cols >= 1,
          "all layer dimensions must be >= 1");
  require(stride >= 1, "stride must be >= 1");
  require(padding >= 0, "padding must be >= 0");
  require(in_rows + 2 * padding >= filter_rows, "filter rows exceed padded input rows");
  require(in_cols + 2 * padding >= filter_cols, "filter cols exceed padded input cols");
  require((in_rows + 2 * padding - filter_rows) % stride == 0,
          "stride does not divide (X + 2*padding - R)");
  require((in_cols + 2 * padding - filter_cols) % stride == 0,
          "stride does not divide (Y + 2*padding - S)");
  if (kind == LayerKind::FullyConnected) {
    require(groups == 1, "fully-connected layers have G = 1");
    require(in_rows == filter_rows && in_cols == filter_cols && stride == 1 && padding == 0,
            "fully-connected layers have X = R, Y = S, stride 1, no padding");
  }
}

int LayerConfig::out_rows() const { return derive_output_dims(*this).first; }
int LayerConfig::out_cols() const { return derive_output_dims(*this).second; }

Count LayerConfig::output_count() const {
  auto [xo, yo] = derive_output_dims(*this);
  return Count{batch} * groups * filters * xo * yo;
}

LayerConfig make_fully_connected(int rows, int cols, int channels, int outputs, int batch) {
  LayerConfig l;
  l.kind = LayerKind::FullyConnected;
  l.filter_rows = rows;
  l.filter_cols = cols;
  l.channels = channels;
  l.groups = 1;
  l.filters = outputs;
  l.batch = batch;
  l.in_rows = rows;
  l.in_cols = cols;
  return l;
}

std::pair<int, int> derive_output_dims(const LayerConfig& layer) {
  layer.validate();
  int xo = (layer.in_rows + 2 * layer.padding - layer.filter_rows) / layer.stride + 1;
  int yo = (layer.in_cols + 2 * layer.padding - layer.filter_cols) / layer.stride + 1;
  return {xo, yo};
}

Count total_macs(const LayerConfig& layer) {
  return layer.output_count() * layer.filter_size();
}

void validate_tile(const LayerConfig& layer, const TileConfig& tile) {
  auto [xo, yo] = derive_output_dims(layer);
  const std::array<std::tuple<const char*, int, int>, 8> checks{{
      {"R", tile.filter_rows, layer.filter_rows},
      {"S", tile.filter_cols, layer.filter_cols},
      {"C", tile.channels, layer.channels},
      {"G", tile.groups, layer.groups},
      {"K", tile.filters, layer.filters},
      {"N", tile.batch, layer.batch},
      {"X'", tile.out_rows, xo},
      {"Y'", tile.out_cols, yo},
  }};
  for (auto [name, t, d] : checks) {
    if (t < 1) throw ValidationError(std::string("tile T_") + name + " must be >= 1");
    if (t > d) throw TileExceedsLayer(name);
  }
}

std::string to_string(const TileConfig& t) {
  std::ostringstream os;
  os << "Tile(" << t.filter_rows << ',' << t.filter_cols << ',' << t.channels << ',' << t.groups
     << ',' << t.filters << ',' << t.batch << ',' << t.out_rows << ',' << t.out_cols << ')';
  return os.str();
}

// ---- documents ---------------------------------------------------------------

json parse_document(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SyntaxError(std::string(what) + ": " + e.what());
  }
}

HardwareConfig hardware_from_json(const json& doc) {
  constexpr std::string_view what = "hardware config";
  reject_unknown_keys(doc, {"version", "num_ms", "dn_bw", "rn_bw", "folding", "latency"}, what);
  check_version(doc, what);
  HardwareConfig hw;
  hw.num_ms = read_int(doc, "num_ms", what);
  hw.dn_bw = read_int(doc, "dn_bw", what);
  hw.rn_bw = read_int(doc, "rn_bw", what);
  if (auto it = doc.find("folding"); it != doc.end()) {
    if (!it->is_string()) throw ValidationError("'folding' must be a string");
    hw.folding = parse_folding_strategy(it->get<std::string>());
  }
  if (auto it = doc.find("latency"); it != doc.end()) {
    constexpr std::string_view lw = "latency block";
    reject_unknown_keys(*it,
                        {"pb_read", "dn_traversal", "multiply", "art_level", "lateral_extra",
                         "bus_grant", "pb_write", "operand_depth"},
                        lw);
    auto& l = hw.latency;
    l.pb_read = read_int_or(*it, "pb_read", l.pb_read, lw);
    l.dn_traversal = read_int_or(*it, "dn_traversal", l.dn_traversal, lw);
    l.multiply = read_int_or(*it, "multiply", l.multiply, lw);
    l.art_level = read_int_or(*it, "art_level", l.art_level, lw);
    l.lateral_extra = read_int_or(*it, "lateral_extra", l.lateral_extra, lw);
    l.bus_grant = read_int_or(*it, "bus_grant", l.bus_grant, lw);
    l.pb_write = read_int_or(*it, "pb_write", l.pb_write, lw);
    l.operand_depth = read_int_or(*it, "operand_depth", l.operand_depth, lw);
  }
  hw.validate();
  return hw;
}

LayerConfig layer_from_json(const json& doc) {
  constexpr std::string_view what = "layer config";
  reject_unknown_keys(doc, {"version", "kind", "R", "S", "C", "G", "K", "N", "X", "Y", "stride",
                            "padding"},
                      what);
  check_version(doc, what);
  LayerConfig l;
  if (auto it = doc.find("kind"); it != doc.end()) {
    auto k = it->is_string() ? it->get<std::string>() : std::string{};
    if (k == "conv")
      l.kind = LayerKind::Convolution;
    else if (k == "fc")
      l.kind = LayerKind::FullyConnected;
    else
      throw ValidationError("layer 'kind' must be 'conv' or 'fc'");
  }
  l.filter_rows = read_int(doc, "R", what);
  l.filter_cols = read_int(doc, "S", what);
  l.channels = read_int(doc, "C", what);
  l.filters = read_int(doc, "K", what);
  l.groups = read_int_or(doc, "G", 1, what);
  l.batch = read_int_or(doc, "N", 1, what);
  l.stride = read_int_or(doc, "stride", 1, what);
  l.padding = read_int_or(doc, "padding", 0, what);
  if (l.kind == LayerKind::FullyConnected) {
    l.in_rows = read_int_or(doc, "X", l.filter_rows, what);
    l.in_cols = read_int_or(doc, "Y", l.filter_cols, what);
  } else {
    l.in_rows = read_int(doc, "X", what);
    l.in_cols = read_int(doc, "Y", what);
  }
  l.validate();
  return l;
}

TileConfig tile_from_json(const json& doc) {
  constexpr std::string_view what = "tile config";
  reject_unknown_keys(doc, {"version", "T_R", "T_S", "T_C", "T_G", "T_K", "T_N", "T_X", "T_Y"},
                      what);
  check_version(doc, what);
  TileConfig t;
  t.filter_rows = read_int(doc, "T_R", what);
  t.filter_cols = read_int(doc, "T_S", what);
  t.channels = read_int(doc, "T_C", what);
  t.groups = read_int(doc, "T_G", what);
  t.filters = read_int(doc, "T_K", what);
  t.batch = read_int(doc, "T_N", what);
  t.out_rows = read_int(doc, "T_X", what);
  t.out_cols = read_int(doc, "T_Y", what);
  return t;
}

json to_json(const HardwareConfig& hw) {
  const auto& l = hw.latency;
  return json{{"version", kDocumentVersion},
              {"num_ms", hw.num_ms},
              {"dn_bw", hw.dn_bw},
              {"rn_bw", hw.rn_bw},
              {"folding", std::string(to_string(hw.folding))},
              {"latency",
               {{"pb_read", l.pb_read},
                {"dn_traversal", l.dn_traversal},
                {"multiply", l.multiply},
                {"art_level", l.art_level},
                {"lateral_extra", l.lateral_extra},
                {"bus_grant", l.bus_grant},
                {"pb_write", l.pb_write},
                {"operand_depth", l.operand_depth}}}};
}

json to_json(const LayerConfig& l) {
  return json{{"version", kDocumentVersion},
              {"kind", l.kind == LayerKind::Convolution ? "conv" : "fc"},
              {"R", l.filter_rows},
              {"S", l.filter_cols},
              {"C", l.channels},
              {"G", l.groups},
              {"K", l.filters},
              {"N", l.batch},
              {"X", l.in_rows},
              {"Y", l.in_cols},
              {"stride", l.stride},
              {"padding", l.padding}};
}

json to_json(const TileConfig& t) {
  return json{{"version", kDocumentVersion}, {"T_R", t.filter_rows}, {"T_S", t.filter_cols},
              {"T_C", t.channels},           {"T_G", t.groups},      {"T_K", t.filters},
              {"T_N", t.batch},              {"T_X", t.out_rows},    {"T_Y", t.out_cols}};
}

HardwareConfig parse_hardware_config(std::string_view text) {
  return hardware_from_json(parse_document(text, "hardware config"));
}

LayerConfig parse_layer_config(std::string_view text) {
  return layer_from_json(parse_document(text, "layer config"));
}

TileConfig parse_tile_config(std::string_view text) {
  return tile_from_json(parse_document(text, "tile config"));
}

std::string serialize(const HardwareConfig& hw) { return to_json(hw).dump(2) + "\n"; }
std::string serialize(const LayerConfig& layer) { return to_json(layer).dump(2) + "\n"; }
std::string serialize(const TileConfig& tile) { return to_json(tile).dump(2) + "\n"; }

}  // namespace flexaccel
