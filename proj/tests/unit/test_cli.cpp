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
#include <fstream>
#include <sstream>

#include "flexaccel/cli.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace flexaccel;
using namespace flexaccel::testing;

namespace {

namespace fs = std::filesystem;

const std::string kConfigs = FLEXACCEL_CONFIGS;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string cfg(const std::string& name) { return kConfigs + "/" + name; }

fs::path scratch() {
  auto dir = fs::temp_directory_path() / "flexaccel_test_cli";
  fs::create_directories(dir);
  return dir;
}

std::string write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p.string();
}

std::string tile_doc(int r, int s, int c) {
  return serialize(TileConfig{r, s, c, 1, 1, 1, 1, 1});
}

std::vector<std::string> tiny_args(const std::string& cmd) {
  return {cmd, "--hw", cfg("hw_32ms_bw4.json"), "--layer", cfg("layer_tiny.json"), "--tile",
          cfg("tile_validation.json")};
}

}  // namespace

TEST_CASE("run-layer succeeds on the validation point", "[cli]") {
  auto r = cli(tiny_args("run-layer"));
  REQUIRE(r.code == kExitOk);
  REQUIRE(r.out.find("verification: PASS") != std::string::npos);
  REQUIRE(r.out.find("total_cycles: 1738") != std::string::npos);
}

TEST_CASE("stats files are byte-identical across runs", "[cli]") {
  const auto dir = scratch();
  auto args = tiny_args("run-layer");
  auto a = args, b = args;
  a.insert(a.end(), {"--stats-out", (dir / "a.json").string(), "--plan-out", (dir / "plan.json").string()});
  b.insert(b.end(), {"--stats-out", (dir / "b.json").string()});
  REQUIRE(cli(a).code == 0);
  REQUIRE(cli(b).code == 0);
  const auto sa = read_file((dir / "a.json").string());
  REQUIRE(!sa.empty());
  REQUIRE(sa == read_file((dir / "b.json").string()));
  auto stats = stats_from_json(nlohmann::json::parse(sa));
  REQUIRE(stats == run_checked(hardware(32, 4), tiny(), validation_tile(), 1).stats);
  auto plan = nlohmann::json::parse(read_file((dir / "plan.json").string()));
  REQUIRE(plan["folds"] == 6);
}

TEST_CASE("output tensor and explicit data files", "[cli]") {
  const auto dir = scratch();
  auto data = random_layer_data<std::int32_t>(tiny(), 77);
  write_tensor(dir / "in.json", data.inputs);
  write_tensor(dir / "w.bin", data.weights);
  auto args = tiny_args("run-layer");
  args.insert(args.end(), {"--inputs", (dir / "in.json").string(), "--weights", (dir / "w.bin").string(),
                           "--output-out", (dir / "out.json").string()});
  REQUIRE(cli(args).code == 0);
  auto out = read_tensor<std::int32_t>(dir / "out.json", output_dims(tiny()));
  REQUIRE(out == conv_reference(tiny(), data.inputs, data.weights).output);
}

TEST_CASE("exit codes", "[cli]") {
  const auto dir = scratch();
  SECTION("usage and parse errors") {
    REQUIRE(cli({"run-layer"}).code == kExitParse);
    REQUIRE(cli({"no-such-command"}).code == kExitParse);
    auto args = tiny_args("run-layer");
    args[2] = write(dir / "broken.json", "{ \"num_ms\": 32,");
    auto r = cli(args);
    REQUIRE(r.code == kExitParse);
    REQUIRE(!r.err.empty());
    args[2] = write(dir / "bad_ms.json", R"({"num_ms": 24, "dn_bw": 4, "rn_bw": 4})");
    REQUIRE(cli(args).code == kExitParse);
    args[2] = (dir / "missing.json").string();
    REQUIRE(cli(args).code != kExitOk);
  }
  SECTION("tile larger than the layer") {
    auto args = tiny_args("run-layer");
    args[6] = write(dir / "big.json", tile_doc(4, 3, 1));
    auto r = cli(args);
    REQUIRE(r.code == kExitParse);
    REQUIRE(r.err.find("dimension R") != std::string::npos);
  }
  SECTION("VN larger than the array") {
    auto args = tiny_args("run-layer");
    args[6] = write(dir / "vn.json", tile_doc(3, 3, 6));
    auto r = cli(args);
    REQUIRE(r.code == kExitMapping);
    REQUIRE(r.err.find("multipliers") != std::string::npos);
  }
  SECTION("verification failure") {
    auto args = tiny_args("run-layer");
    args.insert(args.end(), {"--inject-fault", "3"});
    auto r = cli(args);
    REQUIRE(r.code == kExitVerification);
    REQUIRE(r.out.find("FAIL") != std::string::npos);
  }
}

TEST_CASE("verify runs seeded trials", "[cli]") {
  auto r = cli(tiny_args("verify"));
  REQUIRE(r.code == 0);
  REQUIRE(r.out.find("verify: 50/50 passed") != std::string::npos);

  auto args = tiny_args("verify");
  args.insert(args.end(), {"--trials", "3", "--inject-fault", "0", "--seed", "40"});
  auto bad = cli(args);
  REQUIRE(bad.code == kExitVerification);
  REQUIRE(bad.out.find("trial 0 (seed 40): FAIL") != std::string::npos);
  REQUIRE(bad.out.find("verify: 0/3 passed") != std::string::npos);
}

TEST_CASE("run-model chains layers", "[cli]") {
  const auto dir = scratch();
  auto r = cli({"run-model", "--hw", cfg("hw_32ms_bw4.json"), "--model", cfg("model_toy3.json"), "--seed", "3",
                "--output-out", (dir / "final.json").string(), "--stats-out", (dir / "model.json").string()});
  REQUIRE(r.code == 0);
  auto doc = nlohmann::json::parse(read_file((dir / "model.json").string()));
  REQUIRE(doc["layers"].size() == 3);
  REQUIRE(doc["verified"] == true);
  Count cycles = 0;
  for (const auto& l : doc["layers"]) cycles += l["stats"]["total_cycles"].get<Count>();
  REQUIRE(doc["totals"]["total_cycles"] == cycles);
  REQUIRE(fs::exists(dir / "final.json"));

  SECTION("without verification") {
    auto quick = cli({"run-model", "--hw", cfg("hw_32ms_bw4.json"), "--model", cfg("model_toy3.json"), "--seed",
                      "3", "--no-verify", "--output-out", (dir / "quick.json").string()});
    REQUIRE(quick.code == 0);
    REQUIRE(read_file((dir / "quick.json").string()) == read_file((dir / "final.json").string()));
  }
  SECTION("mismatched chaining is rejected") {
    auto model = nlohmann::json::parse(read_file(cfg("model_toy3.json")));
    model["layers"][1]["layer"]["C"] = 3;
    auto path = write(dir / "bad_model.json", model.dump());
    auto bad = cli({"run-model", "--hw", cfg("hw_32ms_bw4.json"), "--model", path});
    REQUIRE(bad.code == kExitParse);
    REQUIRE(bad.err.find("conv1") != std::string::npos);
    REQUIRE(bad.err.find("conv2") != std::string::npos);
  }
  SECTION("layer failures name the layer") {
    auto model = nlohmann::json::parse(read_file(cfg("model_toy3.json")));
    model["layers"][2]["tile"] = nlohmann::json::parse(tile_doc(4, 4, 4));
    auto path = write(dir / "vn_model.json", model.dump());
    auto bad = cli({"run-model", "--hw", cfg("hw_32ms_bw4.json"), "--model", path});
    REQUIRE(bad.code == kExitMapping);
    REQUIRE(bad.err.find("conv3") != std::string::npos);
  }
}

TEST_CASE("search-tile lists candidates", "[cli]") {
  const auto dir = scratch();
  auto r = cli({"search-tile", "--hw", cfg("hw_32ms_bw4.json"), "--layer", cfg("layer_tiny.json"), "--top-k", "3",
                "--out", (dir / "tiles.json").string()});
  REQUIRE(r.code == 0);
  auto doc = nlohmann::json::parse(read_file((dir / "tiles.json").string()));
  REQUIRE(doc.is_object());
  REQUIRE(doc["candidates"].size() == 3);
  for (const auto& c : doc["candidates"]) REQUIRE(c["estimated_cycles"].is_number());

  auto none = cli({"search-tile", "--hw", cfg("hw_32ms_bw4.json"), "--layer", cfg("layer_tiny.json"), "--limit",
                   "0"});
  REQUIRE(none.code == kExitMapping);
}
