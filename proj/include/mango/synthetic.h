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

#ifndef MANGO_SYNTHETIC_H_
#define MANGO_SYNTHETIC_H_

// Synthetic discrete objectives with known optima, used by the optimizer
// benchmark (`mango bench`) and the acceptance suite.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mango/tensor_train.h"

namespace mango {

struct SyntheticObjective {
  std::string name;
  std::vector<int> shape;
  std::function<double(std::span<const int>)> f;  // to be maximized
};

enum class PeakNorm { kL1, kL2 };

// Negated distance (in digit units) to a hidden index.
SyntheticObjective HiddenPeak(std::string name, std::vector<int> shape,
                              LatentIndex hidden, PeakNorm norm);

// Sum of per-mode digit scores drawn from U[0, 1).
SyntheticObjective Separable(std::string name, std::vector<int> shape,
                             std::uint64_t seed);

// Sum of per-mode Gaussian profiles with random centre, width and weight.
SyntheticObjective SmoothSeparable(std::string name, std::vector<int> shape,
                                   std::uint64_t seed);

// A local trap of height 0.8 and a wider global bump of height 1 placed
// at a distant point; coordinates are scaled to [0, 1] per mode.
SyntheticObjective DeceptiveTwoPeak(std::string name, std::vector<int> shape,
                                    std::uint64_t seed);

// The ten objectives over [8]^6 and [4]^6 used for optimizer comparison.
std::vector<SyntheticObjective> BenchmarkSuite();

// Exhaustive maximum over the grid (first index in row-major order on ties).
struct GridOptimum {
  LatentIndex index;
  double value = 0.0;
};
GridOptimum BruteForceMaximum(const SyntheticObjective& objective);

}  // namespace mango

#endif  // MANGO_SYNTHETIC_H_
