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


#include "mango/analysis.h"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "mango/error.h"

namespace mango {
namespace {

int Argmax(const std::vector<double>& p) {
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

void CheckRecord(const MeiRecord& r) {
  MANGO_REQUIRE(!r.class_probs.empty(), "record has no class probabilities");
  double total = 0.0;
  for (double p : r.class_probs) total += p;
  MANGO_REQUIRE(std::abs(total - 1.0) <= 1e-9, "record class probabilities do not sum to 1");
  MANGO_REQUIRE(r.activation >= 0.0 && r.activation <= 1.0, "record activation outside [0, 1]");
}

}  // namespace

double NormalizedEntropy(std::span<const double> probs) {
  MANGO_REQUIRE(probs.size() >= 2, "entropy needs at least two classes");
  double total = 0.0;
  double h = 0.0;
  for (double p : probs) {
    MANGO_REQUIRE(p >= 0.0 && std::isfinite(p), "probabilities must be finite and >= 0");
    total += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  MANGO_REQUIRE(std::abs(total - 1.0) <= 1e-9, "probabilities do not sum to 1");
  return std::clamp(h / std::log(static_cast<double>(probs.size())), 0.0, 1.0);
}

SelectivityVerdict Verdict(std::span<const MeiRecord> records, double threshold) {
  MANGO_REQUIRE(!records.empty(), "selectivity verdict needs at least one record");
  SelectivityVerdict v;
  v.neuron = records.front().neuron;
  v.epoch = records.front().epoch;
  std::set<std::string> methods;
  std::set<int> classes;
  v.confidence = true;
  v.activation = true;
  for (const MeiRecord& r : records) {
    CheckRecord(r);
    MANGO_REQUIRE(r.neuron == v.neuron && r.epoch == v.epoch,
                  "verdict records must share one neuron and epoch");
    methods.insert(r.method);
    classes.insert(Argmax(r.class_probs));
    v.confidence = v.confidence &&
                   *std::max_element(r.class_probs.begin(), r.class_probs.end()) >= threshold;
    v.activation = v.activation && r.activation >= threshold;
  }
  const bool all_presets = methods.count("protes") && methods.count("protes_s") &&
                           methods.count("protes_b");
  v.stability = all_presets && classes.size() == 1;
  v.selective = v.stability && v.confidence && v.activation;
  if (v.selective) v.cls = *classes.begin();
  return v;
}

std::vector<LabileNeuron> LabileNeurons(std::span<const SelectivityVerdict> verdicts) {
  std::set<int> epochs;
  for (const SelectivityVerdict& v : verdicts) epochs.insert(v.epoch);
  MANGO_REQUIRE(epochs.size() >= 2, "labile-neuron tracking needs verdicts from >= 2 epochs");
  std::map<NeuronId, std::map<int, int>> seen;
  for (const SelectivityVerdict& v : verdicts) {
    if (!v.selective || !v.cls) continue;
    auto& first = seen[v.neuron];
    auto [it, inserted] = first.emplace(*v.cls, v.epoch);
    if (!inserted) it->second = std::min(it->second, v.epoch);
  }
  std::vector<LabileNeuron> out;
  for (const auto& [neuron, classes] : seen) {
    if (classes.size() >= 2) out.push_back(LabileNeuron{neuron, classes});
  }
  return out;
}

LatentDistanceSummary LatentDistances(std::span<const MeiRecord> records) {
  MANGO_REQUIRE(records.size() >= 2, "latent distances need at least two records");
  const std::size_t dim = records.front().coordinates.size();
  MANGO_REQUIRE(dim >= 1, "records have no latent coordinates");
  for (const MeiRecord& r : records) {
    MANGO_REQUIRE(r.coordinates.size() == dim, "latent coordinate vectors differ in length");
  }
  LatentDistanceSummary s;
  double euclid = 0.0;
  double cosine = 0.0;
  int zero_pairs = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      const auto& a = records[i].coordinates;
      const auto& b = records[j].coordinates;
      double d2 = 0.0, dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        d2 += (a[k] - b[k]) * (a[k] - b[k]);
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
      }
      euclid += std::sqrt(d2);
      ++s.pairs;
      if (na == 0.0 || nb == 0.0) {
        ++zero_pairs;
        continue;
      }
      cosine += dot / std::sqrt(na * nb);
      ++s.cosine_pairs;
    }
  }
  if (zero_pairs > 0) {
    std::clog << "note: " << zero_pairs
              << " pair(s) with a zero latent vector left out of the cosine mean\n";
  }
  MANGO_REQUIRE(s.cosine_pairs >= 1, "no pair of nonzero latent vectors for the cosine mean");
  s.mean_euclidean = euclid / s.pairs;
  s.mean_cosine = cosine / s.cosine_pairs;
  return s;
}

double CompressionRatio(const Stimulus& stimulus, int level) {
  MANGO_REQUIRE(level >= 0 && level <= 9, "deflate level must be in [0, 9]");
  MANGO_REQUIRE(!stimulus.pixels.empty(), "image is empty");
  const std::vector<std::uint8_t> raw = QuantizePixels(stimulus.pixels);
  uLongf size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<Bytef> out(size);
  if (compress2(out.data(), &size, raw.data(), static_cast<uLong>(raw.size()), level) != Z_OK) {
    throw RuntimeError("zlib compression failed");
  }
  return static_cast<double>(size) / static_cast<double>(raw.size());
}

}  // namespace mango
