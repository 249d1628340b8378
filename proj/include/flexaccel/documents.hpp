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

// JSON-object level conversions for every document the tools read or write.
// The string-level entry points in config.hpp are thin wrappers over these.

#pragma once

#include <string_view>

#include "json.hpp"

#include "flexaccel/config.hpp"

namespace flexaccel {

inline constexpr int kDocumentVersion = 1;

/// Parses text as JSON, mapping parser failures to SyntaxError.
nlohmann::json parse_document(std::string_view text, std::string_view what);

HardwareConfig hardware_from_json(const nlohmann::json& doc);
LayerConfig layer_from_json(const nlohmann::json& doc);
TileConfig tile_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const HardwareConfig& hw);
nlohmann::json to_json(const LayerConfig& layer);
nlohmann::json to_json(const TileConfig& tile);

}  // namespace flexaccel
