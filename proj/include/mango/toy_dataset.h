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


#ifndef MANGO_TOY_DATASET_H_
#define MANGO_TOY_DATASET_H_

// Procedural 8x8 grayscale classification task: horizontal bar, vertical
// bar, diagonal bar and a round blob, each jittered by up to one pixel and
// corrupted with Gaussian pixel noise.

#include <cstdint>
#include <string>
#include <vector>

#include "mango/snn.h"

namespace mango {

inline constexpr int kToyClasses = 4;
inline constexpr int kToySide = 8;

struct ToyDatasetSpec {
  int samples = 200;
  double held_out_fraction = 0.25;
  double noise = 0.1;
  std::uint64_t seed = 1234;
};

struct ToyDataset {
  std::vector<Example> train;
  std::vector<Example> test;
};

// Balanced classes (sample i has label i mod 4), shuffled before the split.
ToyDataset MakeToyDataset(const ToyDatasetSpec& spec);

std::string ToyClassName(int label);

}  // namespace mango

#endif  // MANGO_TOY_DATASET_H_
