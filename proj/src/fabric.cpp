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

#include "flexaccel/fabric.hpp"

#include <bit>
#include <functional>
#include <string>

namespace flexaccel {

std::string_view to_string(MsMode m) {
  switch (m) {
    case MsMode::Idle: return "idle";
    case MsMode::Multiplier: return "multiplier";
    case MsMode::Forwarder: return "forwarder";
  }
  return "?";
}

std::string_view to_string(AsMode m) {
  switch (m) {
    case AsMode::Idle: return "idle";
    case AsMode::Add2to1: return "add_2to1";
    case AsMode::Add3to1: return "add_3to1";
    case AsMode::Add1Fwd1: return "add_1to1_fwd_1to1";
    case AsMode::Fwd2to2: return "fwd_2to2";
  }
  return "?";
}

std::string_view to_string(AsOutput o) {
  switch (o) {
    case AsOutput::None: return "none";
    case AsOutput::Up: return "up";
    case AsOutput::Lateral: return "lateral";
    case AsOutput::Bus: return "bus";
  }
  return "?";
}

DistributionTree::DistributionTree(int num_ms, int subtrees) : num_ms_(num_ms), subtrees_(subtrees) {
  if (num_ms < 1 || subtrees < 1 || !std::has_single_bit(static_cast<unsigned>(num_ms)) ||
      !std::has_single_bit(static_cast<unsigned>(subtrees)) || subtrees > num_ms)
    throw ValidationError("distribution tree needs power-of-two num_ms >= subtrees >= 1");
  leaves_per_subtree_ = num_ms / subtrees;
}

DsRoute DistributionTree::route(int subtree, std::span<const int> leaves) const {
  if (subtree < 0 || subtree >= subtrees_) throw ValidationError("sub-tree index out of range");
  DsRoute r;
  r.subtree = subtree;
  r.ds_bits.assign(static_cast<std::size_t>(switches_per_subtree()), 0);
  const int base = subtree * leaves_per_subtree_;
  for (int leaf : leaves) {
    int local = leaf - base;
    if (local < 0 || local >= leaves_per_subtree_)
      throw ValidationError("leaf " + std::to_string(leaf) + " is not in sub-tree " + std::to_string(subtree));
    int node = 0, lo = 0, size = leaves_per_subtree_;
    while (size > 1) {
      int half = size / 2;
      if (local < lo + half) {
        r.ds_bits[node] |= kDsLeft;
        node = 2 * node + 1;
      } else {
        r.ds_bits[node] |= kDsRight;
        node = 2 * node + 2;
        lo += half;
      }
      size = half;
    }
  }
  return r;
}

std::vector<int> DistributionTree::walk(const DsRoute& route, Count* traversals) const {
  std::vector<int> reached;
  const int base = route.subtree * leaves_per_subtree_;
  if (leaves_per_subtree_ == 1) {
    reached.push_back(base);
    return reached;
  }
  std::function<void(int, int, int)> visit = [&](int node, int lo, int size) {
    if (traversals) ++*traversals;
    int half = size / 2;
    for (int side = 0; side < 2; ++side) {
      if (!(route.ds_bits[node] & (side ? kDsRight : kDsLeft))) continue;
      int child_lo = lo + side * half;
      if (half == 1)
        reached.push_back(base + child_lo);
      else
        visit(2 * node + 1 + side, child_lo, half);
    }
  };
  visit(0, 0, leaves_per_subtree_);
  return reached;
}

}  // namespace flexaccel
