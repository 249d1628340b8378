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

/**
 * @file memory.hpp
 * @brief Prefetch buffer (PB): the on-chip global buffer feeding the fabric.
 *
 * The PB holds four regions: inputs (N,G,C,X,Y), weights (G,K,C,R,S),
 * outputs (N,G,K,X',Y') and a psum store keyed by output offset. Reads are
 * limited to `read_ports` elements per cycle and writes to `write_ports`;
 * requests beyond that are handed back to the caller for retry. Two writes to
 * the same address in one cycle serialize. Capacity is unbounded.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "flexaccel/config.hpp"
#include "flexaccel/errors.hpp"
#include "flexaccel/tensor.hpp"

namespace flexaccel {

using Cycle = std::int64_t;

std::vector<std::size_t> input_dims(const LayerConfig& layer);
std::vector<std::size_t> weight_dims(const LayerConfig& layer);
std::vector<std::size_t> output_dims(const LayerConfig& layer);

enum class Region : std::uint8_t { Inputs, Weights, Outputs, Psums };

struct PbAddress {
  Region region = Region::Inputs;
  std::size_t offset = 0;

  bool operator==(const PbAddress&) const = default;
};

template <typename T>
struct PbWrite {
  PbAddress address;
  T value{};
};

struct PbCounters {
  Count reads = 0;
  Count writes = 0;
  Count psum_reads = 0;
  Count psum_writes = 0;
  Count read_stall_cycles = 0;   // cycles in which some read request was deferred
  Count write_stall_cycles = 0;  // cycles in which some write request was deferred
  Count write_conflicts = 0;     // deferred write requests
  Count max_reads_per_cycle = 0;
  Count max_writes_per_cycle = 0;
};

template <typename T>
struct ReadResult {
  std::vector<T> values;               // served requests, in request order
  std::vector<std::size_t> deferred;   // indices of requests to retry
};

struct WriteResult {
  std::size_t served = 0;
  std::vector<std::size_t> deferred;   // indices of requests to retry
};

template <typename T>
class PrefetchBuffer {
 public:
  PrefetchBuffer(int read_ports, int write_ports) : read_ports_(read_ports), write_ports_(write_ports) {
    if (read_ports < 1 || write_ports < 1) throw ValidationError("PB needs at least one port of each kind");
  }

  explicit PrefetchBuffer(const HardwareConfig& hw) : PrefetchBuffer(hw.dn_bw, hw.rn_bw) {}

  int read_ports() const { return read_ports_; }
  int write_ports() const { return write_ports_; }

  void load_layer_data(const LayerConfig& layer, Tensor<T> inputs, Tensor<T> weights) {
    check_dims(inputs, input_dims(layer), "inputs");
    check_dims(weights, weight_dims(layer), "weights");
    inputs_ = std::move(inputs);
    weights_ = std::move(weights);
    outputs_ = Tensor<T>(output_dims(layer));
    psums_.clear();
    counters_ = {};
    cycle_ = -1;
    reads_this_cycle_ = writes_this_cycle_ = 0;
    written_this_cycle_.clear();
  }

  /// Serves at most the remaining read-port capacity of `cycle`, in request order.
  ReadResult<T> serve_reads(std::span<const PbAddress> requests, Cycle cycle) {
    for (const auto& a : requests) check_address(a, /*for_read=*/true);
    advance_to(cycle);
    ReadResult<T> result;
    for (std::size_t i = 0; i < requests.size(); ++i) {
      if (reads_this_cycle_ < read_ports_) {
        result.values.push_back(load(requests[i]));
        ++reads_this_cycle_;
        ++counters_.reads;
        if (requests[i].region == Region::Psums) ++counters_.psum_reads;
      } else {
        result.deferred.push_back(i);
      }
    }
    if (!result.deferred.empty()) mark_read_stall();
    counters_.max_reads_per_cycle = std::max<Count>(counters_.max_reads_per_cycle, reads_this_cycle_);
    return result;
  }

  /// Serves at most the remaining write-port capacity of `cycle`; a second
  /// write to an address already written this cycle is deferred.
  WriteResult serve_writes(std::span<const PbWrite<T>> requests, Cycle cycle) {
    for (const auto& w : requests) check_address(w.address, /*for_read=*/false);
    advance_to(cycle);
    WriteResult result;
    for (std::size_t i = 0; i < requests.size(); ++i) {
      const auto& w = requests[i];
      bool dup = std::find(written_this_cycle_.begin(), written_this_cycle_.end(), w.address) !=
                 written_this_cycle_.end();
      if (writes_this_cycle_ < write_ports_ && !dup) {
        store(w.address, w.value);
        written_this_cycle_.push_back(w.address);
        ++writes_this_cycle_;
        ++result.served;
        ++counters_.writes;
        if (w.address.region == Region::Psums) ++counters_.psum_writes;
      } else {
        result.deferred.push_back(i);
      }
    }
    if (!result.deferred.empty()) {
      counters_.write_conflicts += static_cast<Count>(result.deferred.size());
      mark_write_stall();
    }
    counters_.max_writes_per_cycle =
        std::max<Count>(counters_.max_writes_per_cycle, writes_this_cycle_);
    return result;
  }

  /// Uncounted access for setup/inspection (not a simulated port access).
  T peek(const PbAddress& a) const {
    check_address(a, true);
    return load(a);
  }
  bool has_psum(std::size_t output_offset) const { return psums_.contains(output_offset); }

  const Tensor<T>& inputs() const { return inputs_; }
  const Tensor<T>& weights() const { return weights_; }
  const Tensor<T>& outputs() const { return outputs_; }
  Tensor<T> take_outputs() { return std::move(outputs_); }
  const PbCounters& counters() const { return counters_; }

 private:
  static void check_dims(const Tensor<T>& t, const std::vector<std::size_t>& expect, const char* what) {
    if (!std::equal(t.dims().begin(), t.dims().end(), expect.begin(), expect.end())) {
      Tensor<T> shape_only(expect);
      throw ShapeMismatch(std::string(what) + " dims " + t.dims_string() + " do not match layer dims " +
                          shape_only.dims_string());
    }
  }

  void check_address(const PbAddress& a, bool for_read) const {
    std::size_t limit = 0;
    switch (a.region) {
      case Region::Inputs: limit = inputs_.size(); break;
      case Region::Weights: limit = weights_.size(); break;
      case Region::Outputs:
      case Region::Psums: limit = outputs_.size(); break;
    }
    if (a.offset >= limit) throw AddressOutOfRange("PB address " + std::to_string(a.offset) + " out of range");
    if (for_read && a.region == Region::Psums && !psums_.contains(a.offset))
      throw AddressOutOfRange("no psum stored for output " + std::to_string(a.offset));
  }

  T load(const PbAddress& a) const {
    switch (a.region) {
      case Region::Inputs: return inputs_[a.offset];
      case Region::Weights: return weights_[a.offset];
      case Region::Outputs: return outputs_[a.offset];
      case Region::Psums: return psums_.at(a.offset);
    }
    return T{};
  }

  void store(const PbAddress& a, T v) {
    switch (a.region) {
      case Region::Inputs: inputs_[a.offset] = v; break;
      case Region::Weights: weights_[a.offset] = v; break;
      case Region::Outputs: outputs_[a.offset] = v; break;
      case Region::Psums: psums_[a.offset] = v; break;
    }
  }

  void advance_to(Cycle cycle) {
    if (cycle != cycle_) {
      cycle_ = cycle;
      reads_this_cycle_ = writes_this_cycle_ = 0;
      read_stalled_ = write_stalled_ = false;
      written_this_cycle_.clear();
    }
  }
  void mark_read_stall() {
    if (!read_stalled_) ++counters_.read_stall_cycles;
    read_stalled_ = true;
  }
  void mark_write_stall() {
    if (!write_stalled_) ++counters_.write_stall_cycles;
    write_stalled_ = true;
  }

  int read_ports_;
  int write_ports_;
  Tensor<T> inputs_;
  Tensor<T> weights_;
  Tensor<T> outputs_;
  std::unordered_map<std::size_t, T> psums_;
  PbCounters counters_;
  Cycle cycle_ = -1;
  int reads_this_cycle_ = 0;
  int writes_this_cycle_ = 0;
  bool read_stalled_ = false;
  bool write_stalled_ = false;
  std::vector<PbAddress> written_this_cycle_;
};

}  // namespace flexaccel
