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


#include "mango/toy_dataset.h"

#include <algorithm>
#include <cmath>

#include "mango/error.h"
#include "mango/random.h"

namespace mango {
namespace {

std::vector<double> Pattern(int label, Rng& rng, double noise) {
  std::vector<double> img(kToySide * kToySide, 0.0);
  auto at = [&](int y, int x) -> double& { return img[static_cast<std::size_t>(y * kToySide + x)]; };
  const int shift = UniformInt(rng, 3) - 1;
  const int mid = kToySide / 2 - 1;
  switch (label) {
    case 0:  // horizontal bar, two rows
      for (int x = 0; x < kToySide; ++x) at(mid + shift, x) = at(mid + shift + 1, x) = 1.0;
      break;
    case 1:  // vertical bar, two columns
      for (int y = 0; y < kToySide; ++y) at(y, mid + shift) = at(y, mid + shift + 1) = 1.0;
      break;
    case 2:  // main diagonal, two pixels thick
      for (int y = 0; y < kToySide; ++y) {
        for (int x = 0; x < kToySide; ++x) {
          const int off = x - y - shift;
          if (off == 0 || off == 1) at(y, x) = 1.0;
        }
      }
      break;
    default: {  // blob
      const double cy = 3.5 + shift;
      const double cx = 3.5 + UniformInt(rng, 3) - 1;
      for (int y = 0; y < kToySide; ++y) {
        for (int x = 0; x < kToySide; ++x) {
          const double r2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
          at(y, x) = std::exp(-r2 / (2.0 * 1.5 * 1.5));
        }
      }
    }
  }
  for (double& v : img) v = std::clamp(v + noise * StandardNormal(rng), 0.0, 1.0);
  return img;
}

}  // namespace

ToyDataset MakeToyDataset(const ToyDatasetSpec& spec) {
  MANGO_REQUIRE(spec.samples >= 2, "toy dataset needs >= 2 samples");
  MANGO_REQUIRE(spec.held_out_fraction > 0.0 && spec.held_out_fraction < 1.0,
                "held-out fraction must be in (0, 1)");
  MANGO_REQUIRE(spec.noise >= 0.0, "noise must be >= 0");
  Rng rng(spec.seed);
  std::vector<Example> all;
  all.reserve(static_cast<std::size_t>(spec.samples));
  for (int i = 0; i < spec.samples; ++i) {
    const int label = i % kToyClasses;
    all.push_back(Example{Pattern(label, rng, spec.noise), label});
  }
  for (std::size_t i = all.size(); i > 1; --i) {
    std::swap(all[i - 1], all[static_cast<std::size_t>(UniformInt(rng, static_cast<int>(i)))]);
  }
  const auto held = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(spec.held_out_fraction * spec.samples)));
  MANGO_REQUIRE(held < all.size(), "held-out split leaves no training data");
  ToyDataset data;
  data.test.assign(all.begin(), all.begin() + static_cast<long>(held));
  data.train.assign(all.begin() + static_cast<long>(held), all.end());
  return data;
}

std::string ToyClassName(int label) {
  static const char* kNames[] = {"horizontal", "vertical", "diagonal", "blob"};
  MANGO_REQUIRE(label >= 0 && label < kToyClasses, "toy class out of range");
  return kNames[label];
}

}  // namespace mango
