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


#ifndef MANGO_ANALYSIS_H_
#define MANGO_ANALYSIS_H_

// Post-hoc analysis of most exciting inputs: class entropy, the
// selectivity verdict, labile neurons, latent distances and compression
// complexity.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mango/stimulus.h"
#include "mango/tensor_train.h"

namespace mango {

struct NeuronId {
  int layer = 0;
  int neuron = 0;
  auto operator<=>(const NeuronId&) const = default;
};

struct MeiRecord {
  NeuronId neuron;
  std::string method;
  int epoch = 0;
  LatentIndex latent;
  std::vector<double> coordinates;
  double activation = 0.0;
  std::vector<double> class_probs;
  std::int64_t evaluations = 0;

  bool operator==(const MeiRecord&) const = default;
};

// -sum p ln p / ln C; 0 ln 0 = 0.
double NormalizedEntropy(std::span<const double> probs);

inline constexpr double kSelectivityThreshold = 0.75;

struct SelectivityVerdict {
  NeuronId neuron;
  int epoch = 0;
  bool selective = false;
  std::optional<int> cls;  // set when selective
  bool stability = false;  // same argmax class for every method
  bool confidence = false;
  bool activation = false;

  bool operator==(const SelectivityVerdict&) const = default;
};

// Records of one neuron at one epoch. Thresholds are inclusive. Stability
// also needs a record from each of the three PROTES presets; without them
// it is false.
SelectivityVerdict Verdict(std::span<const MeiRecord> records,
                           double threshold = kSelectivityThreshold);

struct LabileNeuron {
  NeuronId neuron;
  std::map<int, int> first_epoch;  // class -> first epoch it was selective for it

  bool operator==(const LabileNeuron&) const = default;
};

// Neurons selective for two or more different classes across epochs.
std::vector<LabileNeuron> LabileNeurons(std::span<const SelectivityVerdict> verdicts);

struct LatentDistanceSummary {
  double mean_euclidean = 0.0;
  double mean_cosine = 0.0;  // cosine similarity
  int pairs = 0;
  int cosine_pairs = 0;  // pairs without a zero vector
};

// Means over all unordered pairs of the records' coordinate vectors.
LatentDistanceSummary LatentDistances(std::span<const MeiRecord> records);

inline constexpr int kCompressionLevel = 9;
inline constexpr int kFastCompressionLevel = 1;

// Deflate (zlib) size of the 8-bit quantized pixels over the raw size.
double CompressionRatio(const Stimulus& stimulus, int level = kCompressionLevel);

}  // namespace mango

#endif  // MANGO_ANALYSIS_H_
