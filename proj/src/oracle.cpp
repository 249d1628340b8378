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

#include "flexaccel/oracle.hpp"

#include <cmath>
#include <sstream>

namespace flexaccel {

namespace {

template <typename T>
void expect_shape(const Tensor<T>& t, std::initializer_list<long> shape, const char* what) {
  auto d = t.dims();
  bool ok = d.size() == shape.size();
  std::size_t i = 0;
  for (long v : shape) {
    if (!ok) break;
    ok = static_cast<long>(d[i++]) == v;
  }
  if (!ok) throw ShapeMismatch(std::string("oracle: ") + what + " has dims " + t.dims_string());
}

}  // namespace

template <typename T>
OracleResult<T> conv_reference(const LayerConfig& L, const Tensor<T>& inputs, const Tensor<T>& weights) {
  const long N = L.batch, G = L.groups, K = L.filters, C = L.channels;
  const long R = L.filter_rows, S = L.filter_cols, X = L.in_rows, Y = L.in_cols;
  const long st = L.stride, pad = L.padding;
  const long XO = (X + 2 * pad - R) / st + 1;
  const long YO = (Y + 2 * pad - S) / st + 1;
  expect_shape(inputs, {N, G, C, X, Y}, "inputs");
  expect_shape(weights, {G, K, C, R, S}, "weights");

  OracleResult<T> res;
  res.output = Tensor<T>({std::size_t(N), std::size_t(G), std::size_t(K), std::size_t(XO), std::size_t(YO)});
  const T* in = inputs.data().data();
  const T* w = weights.data().data();
  T* out = res.output.data().data();

  for (long n = 0; n < N; ++n)
    for (long g = 0; g < G; ++g)
      for (long k = 0; k < K; ++k)
        for (long xo = 0; xo < XO; ++xo)
          for (long yo = 0; yo < YO; ++yo) {
            T acc{};
            for (long c = 0; c < C; ++c)
              for (long r = 0; r < R; ++r)
                for (long s = 0; s < S; ++s) {
                  ++res.mac_count;
                  long x = xo * st + r - pad, y = yo * st + s - pad;
                  if (x < 0 || x >= X || y < 0 || y >= Y) continue;
                  T a = in[(((n * G + g) * C + c) * X + x) * Y + y];
                  T b = w[(((g * K + k) * C + c) * R + r) * S + s];
                  acc = Arith<T>::add(acc, Arith<T>::mul(a, b));
                }
            out[(((n * G + g) * K + k) * XO + xo) * YO + yo] = acc;
          }
  return res;
}

template <typename T>
CompareResult compare(const Tensor<T>& sim, const Tensor<T>& ref, double tolerance) {
  if (!std::equal(sim.dims().begin(), sim.dims().end(), ref.dims().begin(), ref.dims().end()))
    throw DimsMismatch("compare: " + sim.dims_string() + " vs " + ref.dims_string());
  CompareResult r;
  std::size_t first = 0;
  for (std::size_t i = 0; i < sim.size(); ++i) {
    double diff = std::fabs(static_cast<double>(sim[i]) - static_cast<double>(ref[i]));
    bool bad = std::is_integral_v<T> ? sim[i] != ref[i] : !(diff <= tolerance);
    r.max_abs_diff = std::max(r.max_abs_diff, diff);
    if (bad && r.mismatches++ == 0) first = i;
  }
  r.pass = r.mismatches == 0;
  std::ostringstream os;
  if (r.pass) {
    os << "match: " << sim.size() << " elements";
  } else {
    r.first_mismatch = ref.unravel(first);
    os << r.mismatches << " of " << sim.size() << " elements differ; first at (";
    for (std::size_t d = 0; d < r.first_mismatch->size(); ++d) os << (d ? "," : "") << (*r.first_mismatch)[d];
    os << "): simulated " << sim[first] << ", expected " << ref[first];
  }
  r.report = os.str();
  return r;
}

template OracleResult<std::int32_t> conv_reference(const LayerConfig&, const Tensor<std::int32_t>&,
                                                   const Tensor<std::int32_t>&);
template OracleResult<float> conv_reference(const LayerConfig&, const Tensor<float>&, const Tensor<float>&);
template CompareResult compare(const Tensor<std::int32_t>&, const Tensor<std::int32_t>&, double);
template CompareResult compare(const Tensor<float>&, const Tensor<float>&, double);

}  // namespace flexaccel
