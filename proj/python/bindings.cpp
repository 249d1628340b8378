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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "flexaccel/cli.hpp"
#include "flexaccel/config.hpp"
#include "flexaccel/documents.hpp"
#include "flexaccel/engine.hpp"
#include "flexaccel/errors.hpp"
#include "flexaccel/mapper.hpp"
#include "flexaccel/oracle.hpp"
#include "flexaccel/tensor_io.hpp"
#include "flexaccel/tiler.hpp"

namespace py = pybind11;
using namespace flexaccel;

namespace {

using IntArray = py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>;

Tensor<std::int32_t> to_tensor(const IntArray& a) {
  std::vector<std::size_t> dims(a.shape(), a.shape() + a.ndim());
  std::vector<std::int32_t> data(a.data(), a.data() + a.size());
  return Tensor<std::int32_t>(std::move(dims), std::move(data));
}

IntArray to_array(const Tensor<std::int32_t>& t) {
  std::vector<py::ssize_t> shape(t.dims().begin(), t.dims().end());
  IntArray a(shape);
  std::copy(t.data().begin(), t.data().end(), a.mutable_data());
  return a;
}

py::tuple simulate(const std::string& hw_text, const std::string& layer_text, const std::string& tile_text,
                   std::uint64_t seed, std::optional<IntArray> inputs, std::optional<IntArray> weights,
                   bool verify) {
  const auto hw = parse_hardware_config(hw_text);
  const auto layer = parse_layer_config(layer_text);
  const auto tile = parse_tile_config(tile_text);
  auto data = random_layer_data<std::int32_t>(layer, seed);
  if (inputs) data.inputs = to_tensor(*inputs);
  if (weights) data.weights = to_tensor(*weights);
  PrefetchBuffer<std::int32_t> pb(hw);
  pb.load_layer_data(layer, data.inputs, data.weights);
  SimStats stats;
  {
    py::gil_scoped_release release;
    stats = simulate_layer(hw, layer, tile, pb);
  }
  py::object verdict = py::none();
  if (verify) {
    auto r = compare(pb.outputs(), conv_reference(layer, data.inputs, data.weights).output);
    verdict = py::make_tuple(r.pass, r.report);
  }
  return py::make_tuple(to_json(stats).dump(), to_array(pb.outputs()), verdict);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cycle-level simulator of a flexible DNN accelerator";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<SyntaxError>(m, "ConfigSyntaxError", validation.ptr());
  py::register_exception<ShapeMismatch>(m, "ShapeMismatch", base.ptr());
  auto mapping = py::register_exception<MappingError>(m, "MappingError", base.ptr());
  py::register_exception<VnTooLarge>(m, "VnTooLarge", mapping.ptr());
  py::register_exception<NoFeasibleTile>(m, "NoFeasibleTile", base.ptr());

  m.def("compute_folds", [](const std::string& layer, const std::string& tile) {
    return compute_folds(parse_layer_config(layer), parse_tile_config(tile));
  });
  m.def("build_mapping", [](const std::string& hw, const std::string& layer, const std::string& tile) {
    return to_json(build_mapping(parse_hardware_config(hw), parse_layer_config(layer), parse_tile_config(tile)))
        .dump();
  });
  m.def("simulate_layer", &simulate, py::arg("hw"), py::arg("layer"), py::arg("tile"), py::arg("seed") = 1,
        py::arg("inputs") = py::none(), py::arg("weights") = py::none(), py::arg("verify") = true);
  m.def("conv_reference", [](const std::string& layer, const IntArray& inputs, const IntArray& weights) {
    return to_array(conv_reference(parse_layer_config(layer), to_tensor(inputs), to_tensor(weights)).output);
  });
  m.def("random_layer_data", [](const std::string& layer, std::uint64_t seed) {
    auto d = random_layer_data<std::int32_t>(parse_layer_config(layer), seed);
    return py::make_tuple(to_array(d.inputs), to_array(d.weights));
  });
  m.def(
      "enumerate_tiles",
      [](const std::string& hw, const std::string& layer, std::size_t limit) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& c : enumerate_tiles(parse_hardware_config(hw), parse_layer_config(layer), limit))
          list.push_back(to_json(c));
        return list.dump();
      },
      py::arg("hw"), py::arg("layer"), py::arg("limit") = kDefaultTileLimit);
  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  });
}
