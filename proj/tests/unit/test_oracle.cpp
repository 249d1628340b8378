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

#include <filesystem>
#include <random>

#include "flexaccel/errors.hpp"
#include "flexaccel/oracle.hpp"
#include "flexaccel/tensor_io.hpp"
#include "test_support.hpp"

using namespace flexaccel;
using namespace flexaccel::testing;

namespace {

using I32 = std::int32_t;

Tensor<I32> filled(std::vector<std::size_t> dims, I32 v) { return Tensor<I32>(std::move(dims), v); }

}  // namespace

TEST_CASE("pointwise convolution", "[oracle]") {
  const auto layer = conv(1, 1, 3, 2, 2, 2);
  Tensor<I32> in({1, 1, 3, 2, 2}, std::vector<I32>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  Tensor<I32> w({1, 2, 3, 1, 1}, std::vector<I32>{1, 0, 0, 1, 1, 1});
  auto r = conv_reference(layer, in, w);
  REQUIRE(r.output == Tensor<I32>({1, 1, 2, 2, 2}, std::vector<I32>{1, 2, 3, 4, 15, 18, 21, 24}));
  REQUIRE(r.mac_count == total_macs(layer));
}

TEST_CASE("all-ones inputs count the window", "[oracle]") {
  const auto layer = tiny();
  auto r = conv_reference(layer, filled(input_dims(layer), 1), filled(weight_dims(layer), 1));
  for (auto v : r.output.data()) REQUIRE(v == 54);
  REQUIRE(r.output.size() == 54u);

  SECTION("padding drops out-of-bounds taps") {
    const auto padded = conv(3, 3, 1, 1, 4, 4, 1, 1, 1, 1);
    auto p = conv_reference(padded, filled(input_dims(padded), 1), filled(weight_dims(padded), 1));
    REQUIRE(p.output.dims()[3] == 4);
    REQUIRE(p.output.at({0, 0, 0, 0, 0}) == 4);
    REQUIRE(p.output.at({0, 0, 0, 0, 1}) == 6);
    REQUIRE(p.output.at({0, 0, 0, 1, 1}) == 9);
    REQUIRE(p.output.at({0, 0, 0, 3, 3}) == 4);
  }
  SECTION("stride skips windows") {
    const auto strided = conv(2, 2, 1, 1, 6, 6, 1, 1, 2);
    Tensor<I32> in(input_dims(strided));
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = static_cast<I32>(i);
    auto s = conv_reference(strided, in, filled(weight_dims(strided), 1));
    REQUIRE(s.output.dims()[3] == 3);
    REQUIRE(s.output.at({0, 0, 0, 0, 0}) == 0 + 1 + 6 + 7);
    REQUIRE(s.output.at({0, 0, 0, 1, 1}) == 14 + 15 + 20 + 21);
  }
}

TEST_CASE("groups are independent", "[oracle]") {
  const auto layer = conv(2, 2, 2, 3, 4, 4, 2, 2);
  auto data = random_layer_data<I32>(layer, 21);
  auto base = conv_reference(layer, data.inputs, data.weights).output;
  auto in = data.inputs;
  // Perturb every group-0 input of sample 1.
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t y = 0; y < 4; ++y) in.at({1, 0, c, x, y}) += 3;
  auto moved = conv_reference(layer, in, data.weights).output;
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto idx = base.unravel(i);
    const bool touched = idx[0] == 1 && idx[1] == 0;
    if (!touched) REQUIRE(moved[i] == base[i]);
  }
  REQUIRE(moved != base);
}

TEST_CASE("convolution is linear in the inputs", "[oracle][property]") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    auto t = random_triple(rng, 20000);
    auto a = random_layer_data<I32>(t.layer, trial);
    auto b = random_tensor<I32>(input_dims(t.layer), 1000 + trial);
    Tensor<I32> sum = a.inputs;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = Arith<I32>::add(sum[i], b[i]);
    auto ra = conv_reference(t.layer, a.inputs, a.weights).output;
    auto rb = conv_reference(t.layer, b, a.weights).output;
    auto rs = conv_reference(t.layer, sum, a.weights).output;
    for (std::size_t i = 0; i < rs.size(); ++i) REQUIRE(rs[i] == Arith<I32>::add(ra[i], rb[i]));

    Tensor<I32> zeros(weight_dims(t.layer));
    auto rz = conv_reference(t.layer, a.inputs, zeros);
    for (auto v : rz.output.data()) REQUIRE(v == 0);
  }
}

TEST_CASE("shape checks", "[oracle]") {
  const auto layer = tiny();
  REQUIRE_THROWS_AS(conv_reference(layer, filled({1, 1, 6, 5, 4}, 1), filled(weight_dims(layer), 1)),
                    ShapeMismatch);
  REQUIRE_THROWS_AS(conv_reference(layer, filled(input_dims(layer), 1), filled({1, 6, 6, 3}, 1)), ShapeMismatch);
}

TEST_CASE("comparing outputs", "[oracle]") {
  Tensor<I32> a({2, 3}, std::vector<I32>{1, 2, 3, 4, 5, 6});
  REQUIRE(compare(a, a).pass);
  auto b = a;
  b.at({1, 2}) = 7;
  b.at({1, 0}) = 0;
  auto r = compare(b, a);
  REQUIRE_FALSE(r.pass);
  REQUIRE(r.mismatches == 2);
  REQUIRE(r.max_abs_diff == 4.0);
  REQUIRE(r.first_mismatch == std::vector<std::size_t>{1, 0});
  REQUIRE_FALSE(r.report.empty());
  REQUIRE_FALSE(compare(b, a, 10.0).pass);  // integers are always exact
  REQUIRE_THROWS_AS(compare(a, Tensor<I32>({3, 2})), DimsMismatch);

  Tensor<float> f({2}, std::vector<float>{1.0f, 2.0f});
  Tensor<float> g({2}, std::vector<float>{1.0f, 2.0005f});
  REQUIRE(compare(g, f, 1e-3).pass);
  REQUIRE_FALSE(compare(g, f, 1e-4).pass);
}

TEST_CASE("seeded tensors", "[oracle]") {
  auto a = random_tensor<I32>({4, 5, 6}, 9);
  REQUIRE(a == random_tensor<I32>({4, 5, 6}, 9));
  REQUIRE(a != random_tensor<I32>({4, 5, 6}, 10));
  for (auto v : a.data()) REQUIRE((v >= -8 && v <= 8));
  auto d = random_layer_data<I32>(tiny(), 9);
  REQUIRE(d.inputs == random_tensor<I32>(input_dims(tiny()), 9));
  REQUIRE(d.weights == random_tensor<I32>(weight_dims(tiny()), 10));
}

TEST_CASE("tensor files round trip", "[oracle]") {
  const auto dir = std::filesystem::temp_directory_path() / "flexaccel_test_oracle";
  std::filesystem::create_directories(dir);
  auto a = random_tensor<I32>({2, 3, 4}, 5);
  write_tensor(dir / "a.json", a);
  write_tensor(dir / "a.bin", a);
  REQUIRE(read_tensor<I32>(dir / "a.json", {2, 3, 4}) == a);
  REQUIRE(read_tensor<I32>(dir / "a.bin", {2, 3, 4}) == a);
  REQUIRE_THROWS_AS(read_tensor<I32>(dir / "a.json", {2, 3, 5}), ShapeMismatch);
  REQUIRE_THROWS_AS(read_tensor<I32>(dir / "a.bin", {2, 3, 5}), ShapeMismatch);
  auto f = random_tensor<float>({3}, 5);
  write_tensor(dir / "f.json", f);
  REQUIRE(read_tensor<float>(dir / "f.json", {3}) == f);
  std::filesystem::remove_all(dir);
}
