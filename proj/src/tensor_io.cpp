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

#include "flexaccel/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "json.hpp"

#include "flexaccel/documents.hpp"
#include "flexaccel/memory.hpp"

namespace flexaccel {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string dims_text(const std::vector<std::size_t>& d) { return Tensor<int>(d).dims_string(); }

}  // namespace

template <typename T>
Tensor<T> random_tensor(std::vector<std::size_t> dims, std::uint64_t seed) {
  Tensor<T> t(std::move(dims));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(-8, 8);
  for (auto& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
LayerData<T> random_layer_data(const LayerConfig& layer, std::uint64_t seed) {
  return {random_tensor<T>(input_dims(layer), seed), random_tensor<T>(weight_dims(layer), seed + 1)};
}

template <typename T>
Tensor<T> read_tensor(const std::filesystem::path& path, const std::vector<std::size_t>& expected) {
  const std::string text = read_file(path);
  if (path.extension() == ".bin") {
    Tensor<T> t(expected);
    if (text.size() != t.size() * sizeof(T))
      throw ShapeMismatch(path.string() + ": " + std::to_string(text.size()) + " bytes, expected " +
                          std::to_string(t.size() * sizeof(T)) + " for " + dims_text(expected));
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b)
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(text[i * 4 + b])) << (8 * b);
      std::memcpy(&t[i], &bits, sizeof(T));
    }
    return t;
  }
  auto doc = parse_document(text, path.string());
  try {
    auto dims = doc.at("dims").get<std::vector<std::size_t>>();
    auto dtype = doc.at("dtype").get<std::string>();
    if (dtype != Arith<T>::name)
      throw ValidationError(path.string() + ": dtype " + dtype + " but " + Arith<T>::name + " expected");
    if (dims != expected)
      throw ShapeMismatch(path.string() + ": dims " + dims_text(dims) + " but layer needs " + dims_text(expected));
    return Tensor<T>(std::move(dims), doc.at("data").get<std::vector<T>>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

template <typename T>
std::string tensor_to_text(const Tensor<T>& t) {
  nlohmann::json doc{{"dims", std::vector<std::size_t>(t.dims().begin(), t.dims().end())},
                     {"dtype", Arith<T>::name},
                     {"data", std::vector<T>(t.data().begin(), t.data().end())}};
  return doc.dump() + "\n";
}

template <typename T>
void write_tensor(const std::filesystem::path& path, const Tensor<T>& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  if (path.extension() == ".bin") {
    for (T v : t.data()) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int b = 0; b < 4; ++b) out.put(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
  } else {
    out << tensor_to_text(t);
  }
}

#define FLEXACCEL_INSTANTIATE(T)                                                                   \
  template Tensor<T> random_tensor<T>(std::vector<std::size_t>, std::uint64_t);                  \
  template LayerData<T> random_layer_data<T>(const LayerConfig&, std::uint64_t);                 \
  template Tensor<T> read_tensor<T>(const std::filesystem::path&, const std::vector<std::size_t>&); \
  template void write_tensor<T>(const std::filesystem::path&, const Tensor<T>&);                 \
  template std::string tensor_to_text<T>(const Tensor<T>&);

FLEXACCEL_INSTANTIATE(std::int32_t)
FLEXACCEL_INSTANTIATE(float)

}  // namespace flexaccel
