// Copyright 2026 The Mango Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MANGO_TENSOR_TRAIN_H_
#define MANGO_TENSOR_TRAIN_H_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mango/exec.h"
#include "mango/random.h"

namespace mango {

// A point of the discrete search grid: one digit per mode.
using LatentIndex = std::vector<int>;

// One three-way core of shape (left_rank, mode, right_rank), stored row-major.
struct TtCore {
  int left_rank = 1;
  int mode = 2;
  int right_rank = 1;
  std::vector<double> values;

  TtCore() = default;
  TtCore(int left, int n, int right, double fill = 0.0)
      : left_rank(left), mode(n), right_rank(right),
        values(static_cast<std::size_t>(left) * n * right, fill) {}

  std::size_t Offset(int a, int k, int b) const {
    return (static_cast<std::size_t>(a) * mode + k) * right_rank + b;
  }
  double& operator()(int a, int k, int b) { return values[Offset(a, k, b)]; }
  double operator()(int a, int k, int b) const { return values[Offset(a, k, b)]; }

  bool operator==(const TtCore&) const = default;
};

// Gradient with respect to every core entry; same layout as the cores.
using CoreGradient = std::vector<std::vector<double>>;

// Tensor Train over a grid of shape (n_1, ..., n_d). Values are immutable
// after construction; updates produce a new train.
class TensorTrain {
 public:
  TensorTrain() = default;
  // Throws InputError unless the boundary ranks are 1, neighbouring ranks
  // agree, every mode is >= 2 and every value is finite.
  explicit TensorTrain(std::vector<TtCore> cores);

  int dimension() const { return static_cast<int>(cores_.size()); }
  std::vector<int> shape() const;
  // d + 1 entries, boundary ranks included.
  std::vector<int> ranks() const;
  const std::vector<TtCore>& cores() const { return cores_; }
  const TtCore& core(int i) const { return cores_[static_cast<std::size_t>(i)]; }
  std::size_t parameter_count() const;

  // Returns cores + step * gradient.
  TensorTrain Updated(const CoreGradient& gradient, double step) const;
  // Returns a copy with every entry raised to at least `floor`.
  TensorTrain ClampedBelow(double floor) const;

  bool operator==(const TensorTrain&) const = default;

 private:
  std::vector<TtCore> cores_;
};

// Constant-core train: every index evaluates to the same positive value.
// Internal ranks are clipped to the largest rank the shape can support.
TensorTrain TtUniform(std::span<const int> shape, int rank);

// Train with entries drawn uniformly from [lo, hi).
TensorTrain TtRandom(std::span<const int> shape, int rank, Rng& rng,
                     double lo = 0.0, double hi = 1.0);

double TtEval(const TensorTrain& tt, std::span<const int> index);

// Sum over the whole grid by contracting mode-summed cores, O(d n r^2).
double TtSum(const TensorTrain& tt);

// Floor applied to sampling weights and to densities inside logarithms.
inline constexpr double kDensityFloor = 1e-12;

// Sequential conditional sampling. The caller's stream is advanced once;
// sample j then uses its own derived stream, so serial and parallel
// execution return identical draws.
std::vector<LatentIndex> TtSample(const TensorTrain& tt, int count, Rng& rng,
                                  Exec exec = Exec::kParallel);

struct LogLikelihood {
  double value = 0.0;
  CoreGradient gradient;
};

// Value and gradient of (1/M) sum_i w_i log(max(p(x_i), eps) / |Z|), where
// p is the train and Z = TtSum. Empty `weights` means w_i = 1.
LogLikelihood TtLogLikelihood(const TensorTrain& tt,
                              std::span<const LatentIndex> indices,
                              std::span<const double> weights = {},
                              Exec exec = Exec::kParallel);

double GradientNorm(const CoreGradient& gradient);

// Splits each mode n_i = q^{k_i} into k_i modes of size q. Digit order within
// a mode is big-endian (most significant first).
class QuantizationMap {
 public:
  // Throws InputError if any mode is not a positive power of `factor`.
  QuantizationMap(std::vector<int> base_shape, int factor);

  const std::vector<int>& base_shape() const { return base_shape_; }
  int factor() const { return factor_; }
  const std::vector<int>& digits_per_mode() const { return digits_per_mode_; }
  std::vector<int> quantized_shape() const;

  LatentIndex Quantize(std::span<const int> index) const;
  LatentIndex Dequantize(std::span<const int> qindex) const;

 private:
  std::vector<int> base_shape_;
  int factor_;
  std::vector<int> digits_per_mode_;
};

// Binary checkpoint; layout in docs/file_formats.md.
void WriteTensorTrain(std::ostream& out, const TensorTrain& tt);
TensorTrain ReadTensorTrain(std::istream& in);
void SaveTensorTrain(const std::string& path, const TensorTrain& tt);
TensorTrain LoadTensorTrain(const std::string& path);

}  // namespace mango

#endif  // MANGO_TENSOR_TRAIN_H_
