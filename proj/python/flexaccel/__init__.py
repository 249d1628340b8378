# Copyright 2026 The flexaccel Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Python front end of the flexaccel simulator.

Configurations are plain dicts using the same keys as the JSON documents.
"""

import json

from . import _core
from ._core import (
    ConfigSyntaxError,
    Error,
    MappingError,
    NoFeasibleTile,
    ShapeMismatch,
    ValidationError,
    VnTooLarge,
)

__all__ = [
    "ConfigSyntaxError",
    "Error",
    "MappingError",
    "NoFeasibleTile",
    "ShapeMismatch",
    "ValidationError",
    "VnTooLarge",
    "build_mapping",
    "compute_folds",
    "conv_reference",
    "enumerate_tiles",
    "random_layer_data",
    "run_cli",
    "simulate_layer",
]


def _doc(d):
    return d if isinstance(d, str) else json.dumps(d)


def compute_folds(layer, tile):
    return _core.compute_folds(_doc(layer), _doc(tile))


def build_mapping(hw, layer, tile):
    """Mapping plan as a dict (VN layout, ART configuration, schedule)."""
    return json.loads(_core.build_mapping(_doc(hw), _doc(layer), _doc(tile)))


def simulate_layer(hw, layer, tile, *, seed=1, inputs=None, weights=None, verify=True):
    """Simulate one layer on int32 data.

    Returns a dict with ``stats`` (dict), ``output`` (numpy array shaped
    N, G, K, X', Y') and ``verified`` (bool, or None when skipped).
    """
    stats, output, verdict = _core.simulate_layer(
        _doc(hw), _doc(layer), _doc(tile), seed, inputs, weights, verify)
    result = {"stats": json.loads(stats), "output": output, "verified": None}
    if verdict is not None:
        result["verified"], result["report"] = verdict
    return result


def conv_reference(layer, inputs, weights):
    return _core.conv_reference(_doc(layer), inputs, weights)


def random_layer_data(layer, seed=1):
    return _core.random_layer_data(_doc(layer), seed)


def enumerate_tiles(hw, layer, limit=4096):
    return json.loads(_core.enumerate_tiles(_doc(hw), _doc(layer), limit))


def run_cli(args):
    """Run a CLI command in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])
