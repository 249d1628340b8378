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

#pragma once

#include <exception>
#include <stdexcept>
#include <string>

namespace flexaccel {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration document is not well-formed text.
class SyntaxError : public Error {
 public:
  using Error::Error;
};

/// A configuration parsed but violates an invariant (message names it).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class TileExceedsLayer : public ValidationError {
 public:
  explicit TileExceedsLayer(std::string dimension)
      : ValidationError("tile exceeds layer in dimension " + dimension),
        dimension_(std::move(dimension)) {}

  const std::string& dimension() const noexcept { return dimension_; }

 private:
  std::string dimension_;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class AddressOutOfRange : public Error {
 public:
  using Error::Error;
};

class DimsMismatch : public Error {
 public:
  using Error::Error;
};

/// Base for failures while turning (hardware, layer, tile) into a plan.
class MappingError : public Error {
 public:
  using Error::Error;
};

class VnTooLarge : public MappingError {
 public:
  using MappingError::MappingError;
};

class InfeasibleTile : public MappingError {
 public:
  using MappingError::MappingError;
};

/// Reduction-tree configuration could not route a virtual neuron. Should be
/// unreachable for contiguous leaf assignments.
class UnroutableVN : public MappingError {
 public:
  using MappingError::MappingError;
};

class NoFeasibleTile : public Error {
 public:
  using Error::Error;
};

/// A model layer failed; `cause()` holds the original error.
class LayerFailure : public Error {
 public:
  LayerFailure(std::string layer, const std::string& message, std::exception_ptr cause)
      : Error("layer '" + layer + "': " + message), layer_(std::move(layer)), cause_(std::move(cause)) {}

  const std::string& layer() const noexcept { return layer_; }
  std::exception_ptr cause() const noexcept { return cause_; }

 private:
  std::string layer_;
  std::exception_ptr cause_;
};

}  // namespace flexaccel
