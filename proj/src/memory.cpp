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

#include "flexaccel/memory.hpp"

namespace flexaccel {

std::vector<std::size_t> input_dims(const LayerConfig& l) {
  l.validate();
  return {std::size_t(l.batch), std::size_t(l.groups), std::size_t(l.channels),
          std::size_t(l.in_rows), std::size_t(l.in_cols)};
}

std::vector<std::size_t> weight_dims(const LayerConfig& l) {
  l.validate();
  return {std::size_t(l.groups), std::size_t(l.filters), std::size_t(l.channels),
          std::size_t(l.filter_rows), std::size_t(l.filter_cols)};
}

std::vector<std::size_t> output_dims(const LayerConfig& l) {
  auto [xo, yo] = derive_output_dims(l);
  return {std::size_t(l.batch), std::size_t(l.groups), std::size_t(l.filters), std::size_t(xo),
          std::size_t(yo)};
}

}  // namespace flexaccel
