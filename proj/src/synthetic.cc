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

#include "mango/synthetic.h"

#include <cmath>
#include <limits>

#include "mango/error.h"
#include "mango/random.h"

namespace mango {
namespace {

LatentIndex RandomIndex(Rng& rng, const std::vector<int>& shape) {
  LatentIndex x(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) x[i] = UniformInt(rng, shape[i]);
  return x;
}

double ScaledSquaredDistance(std::span<const int> x, const LatentIndex& c,
                             const std::vector<int>& shape) {
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i] - c[i]) / (shape[i] - 1);
    sq += d * d;
  }
  return sq;
}

}  // namespace

SyntheticObjective HiddenPeak(std::string name, std::vector<int> shape,
                              LatentIndex hidden, PeakNorm norm) {
  MANGO_REQUIRE(hidden.size() == shape.size(), "hidden index does not match shape");
  auto f = [hidden, norm](std::span<const int> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = std::abs(x[i] - hidden[i]);
      acc += norm == PeakNorm::kL1 ? d : d * d;
    }
    return norm == PeakNorm::kL1 ? -acc : -std::sqrt(acc);
  };
  return {std::move(name), std::move(shape), std::move(f)};
}

SyntheticObjective Separable(std::string name, std::vector<int> shape,
                             std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> table;
  for (int n : shape) {
    std::vector<double> row(static_cast<std::size_t>(n));
    for (double& v : row) v = UniformUnit(rng);
    table.push_back(std::move(row));
  }
  auto f = [table](std::span<const int> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += table[i][static_cast<std::size_t>(x[i])];
    return acc;
  };
  return {std::move(name), std::move(shape), std::move(f)};
}

SyntheticObjective SmoothSeparable(std::string name, std::vector<int> shape,
                                   std::uint64_t seed) {
  Rng rng(seed);
  struct Profile {
    double center, width, weight;
  };
  std::vector<Profile> profiles;
  for (int n : shape) {
    const double span = n - 1;
    profiles.push_back({span * UniformUnit(rng), span * (0.25 + 0.35 * UniformUnit(rng)),
                        0.5 + 0.5 * UniformUnit(rng)});
  }
  auto f = [profiles](std::span<const int> x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Profile& p = profiles[i];
      const double z = (x[i] - p.center) / p.width;
      acc += p.weight * std::exp(-0.5 * z * z);
    }
    return acc;
  };
  return {std::move(name), std::move(shape), std::move(f)};
}

SyntheticObjective DeceptiveTwoPeak(std::string name, std::vector<int> shape,
                                    std::uint64_t seed) {
  Rng rng(seed);
  const LatentIndex local = RandomIndex(rng, shape);
  // Put the global peak on the far side of every mode from the local one.
  LatentIndex global(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const int half = shape[i] / 2;
    global[i] = local[i] < half ? half + UniformInt(rng, shape[i] - half)
                                : UniformInt(rng, half);
  }
  auto f = [local, global, shape](std::span<const int> x) {
    constexpr double kTrapWidth = 0.2;
    constexpr double kPeakWidth = 0.35;
    const double trap = 0.8 * std::exp(-ScaledSquaredDistance(x, local, shape) /
                                       (2 * kTrapWidth * kTrapWidth));
    const double peak = std::exp(-ScaledSquaredDistance(x, global, shape) /
                                 (2 * kPeakWidth * kPeakWidth));
    return std::max(trap, peak);
  };
  return {std::move(name), std::move(shape), std::move(f)};
}

std::vector<SyntheticObjective> BenchmarkSuite() {
  const std::vector<int> big(6, 8);
  const std::vector<int> small(6, 4);
  Rng rng(20240601);
  std::vector<SyntheticObjective> suite;
  suite.push_back(HiddenPeak("peak_l2_8", big, RandomIndex(rng, big), PeakNorm::kL2));
  suite.push_back(HiddenPeak("peak_l2_4", small, RandomIndex(rng, small), PeakNorm::kL2));
  suite.push_back(HiddenPeak("peak_l1_8", big, RandomIndex(rng, big), PeakNorm::kL1));
  suite.push_back(HiddenPeak("peak_l1_4", small, RandomIndex(rng, small), PeakNorm::kL1));
  suite.push_back(SmoothSeparable("separable_8a", big, 101));
  suite.push_back(SmoothSeparable("separable_8b", big, 102));
  suite.push_back(SmoothSeparable("separable_4a", small, 103));
  suite.push_back(DeceptiveTwoPeak("deceptive_8a", big, 201));
  suite.push_back(DeceptiveTwoPeak("deceptive_8b", big, 202));
  suite.push_back(DeceptiveTwoPeak("deceptive_4a", small, 203));
  return suite;
}

GridOptimum BruteForceMaximum(const SyntheticObjective& objective) {
  const std::vector<int>& shape = objective.shape;
  LatentIndex x(shape.size(), 0);
  GridOptimum best{x, -std::numeric_limits<double>::infinity()};
  while (true) {
    const double v = objective.f(x);
    if (v > best.value) best = {x, v};
    std::size_t i = shape.size();
    while (i > 0) {
      --i;
      if (++x[i] < shape[i]) break;
      x[i] = 0;
      if (i == 0) return best;
    }
  }
}

}  // namespace mango
