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


#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mango/analysis.h"
#include "mango/error.h"
#include "mango/random.h"

namespace mango {
namespace {

MeiRecord Record(const std::string& method, std::vector<double> probs, double activation,
                 NeuronId neuron = {1, 2}, int epoch = 5) {
  MeiRecord r;
  r.neuron = neuron;
  r.method = method;
  r.epoch = epoch;
  r.class_probs = std::move(probs);
  r.activation = activation;
  return r;
}

std::vector<MeiRecord> Triple(double c1, double c2, double c3, double act) {
  return {Record("protes", {c1, 1 - c1}, act), Record("protes_s", {c2, 1 - c2}, act),
          Record("protes_b", {c3, 1 - c3}, act)};
}

SelectivityVerdict Selective(NeuronId n, int epoch, int cls) {
  SelectivityVerdict v;
  v.neuron = n;
  v.epoch = epoch;
  v.selective = v.stability = v.confidence = v.activation = true;
  v.cls = cls;
  return v;
}

MeiRecord WithCoords(std::vector<double> c) {
  MeiRecord r = Record("protes", {1.0, 0.0}, 0.5);
  r.coordinates = std::move(c);
  return r;
}

TEST_CASE("normalized entropy") {
  CHECK(NormalizedEntropy(std::vector<double>(10, 0.1)) == doctest::Approx(1.0).epsilon(1e-14));
  std::vector<double> onehot(10, 0.0);
  onehot[3] = 1.0;
  CHECK(NormalizedEntropy(onehot) == 0.0);
  std::vector<double> half(10, 0.0);
  half[0] = half[1] = 0.5;
  CHECK(std::abs(NormalizedEntropy(half) - std::log(2.0) / std::log(10.0)) <= 1e-12);
  CHECK(NormalizedEntropy(half) == doctest::Approx(0.30103).epsilon(1e-5));
  std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  const double h = NormalizedEntropy(p);
  std::reverse(p.begin(), p.end());
  CHECK(NormalizedEntropy(p) == doctest::Approx(h).epsilon(1e-15));
  CHECK_THROWS_AS(NormalizedEntropy(std::vector<double>{0.5, 0.6}), InputError);
  CHECK_THROWS_AS(NormalizedEntropy(std::vector<double>{1.5, -0.5}), InputError);
}

TEST_CASE("entropy stays in [0, 1]") {
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> p(static_cast<std::size_t>(2 + UniformInt(rng, 9)));
    double total = 0.0;
    for (double& v : p) total += v = UniformUnit(rng) * (UniformInt(rng, 3) == 0 ? 0.0 : 1.0) + 1e-300;
    for (double& v : p) v /= total;
    const double h = NormalizedEntropy(p);
    CHECK(h >= 0.0);
    CHECK(h <= 1.0);
  }
}

TEST_CASE("selectivity verdict") {
  const auto ok = Triple(0.8, 0.9, 0.76, 0.8);
  SelectivityVerdict v = Verdict(ok);
  CHECK(v.selective);
  CHECK(v.stability);
  CHECK(v.confidence);
  CHECK(v.activation);
  CHECK(v.cls == 0);
  CHECK(v.neuron == NeuronId{1, 2});
  CHECK(v.epoch == 5);

  auto split = ok;
  split[1].class_probs = {0.1, 0.9};
  v = Verdict(split);
  CHECK_FALSE(v.selective);
  CHECK_FALSE(v.stability);
  CHECK_FALSE(v.cls.has_value());

  CHECK(Verdict(Triple(0.75, 0.75, 0.75, 0.75)).selective);
  CHECK_FALSE(Verdict(Triple(0.75, 0.74, 0.9, 0.8)).confidence);
  CHECK_FALSE(Verdict(Triple(0.9, 0.9, 0.9, 0.7)).activation);

  // A missing preset fails stability.
  CHECK_FALSE(Verdict(std::span(ok).first(2)).stability);
  CHECK_THROWS_AS(Verdict(std::span<const MeiRecord>{}), InputError);
  auto mixed = ok;
  mixed[2].epoch = 6;
  CHECK_THROWS_AS(Verdict(mixed), InputError);
}

TEST_CASE("raising confidence or activation never removes selectivity") {
  Rng rng(2);
  for (int i = 0; i < 300; ++i) {
    auto recs = Triple(0.5 + 0.5 * UniformUnit(rng), 0.5 + 0.5 * UniformUnit(rng),
                       0.5 + 0.5 * UniformUnit(rng), UniformUnit(rng));
    const bool before = Verdict(recs).selective;
    auto& r = recs[static_cast<std::size_t>(UniformInt(rng, 3))];
    const double c = std::min(1.0, r.class_probs[0] + 0.3 * UniformUnit(rng));
    r.class_probs = {c, 1 - c};
    r.activation = std::min(1.0, r.activation + 0.3 * UniformUnit(rng));
    if (before) CHECK(Verdict(recs).selective);
  }
}

TEST_CASE("labile neurons") {
  const NeuronId a{0, 1}, b{0, 2}, c{1, 0};
  std::vector<SelectivityVerdict> v{Selective(a, 40, 2), Selective(a, 100, 2), Selective(a, 300, 8),
                                    Selective(b, 40, 2), Selective(b, 100, 2), Selective(b, 300, 2)};
  SelectivityVerdict never;
  never.neuron = c;
  never.epoch = 40;
  v.push_back(never);
  const auto labile = LabileNeurons(v);
  REQUIRE(labile.size() == 1);
  CHECK(labile[0].neuron == a);
  CHECK(labile[0].first_epoch == std::map<int, int>{{2, 40}, {8, 300}});
  CHECK_THROWS_AS(LabileNeurons(std::vector<SelectivityVerdict>{Selective(a, 4, 1)}), InputError);
}

TEST_CASE("latent distances") {
  const std::vector<MeiRecord> same{WithCoords({0.3, -0.2}), WithCoords({0.3, -0.2})};
  LatentDistanceSummary s = LatentDistances(same);
  CHECK(s.mean_euclidean == 0.0);
  CHECK(s.mean_cosine == doctest::Approx(1.0).epsilon(1e-15));

  s = LatentDistances(std::vector<MeiRecord>{WithCoords({1, 0}), WithCoords({0, 1})});
  CHECK(s.mean_euclidean == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(s.mean_cosine == 0.0);

  Rng rng(3);
  std::vector<MeiRecord> recs;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> c(5);
    for (double& x : c) x = 2 * UniformUnit(rng) - 1;
    recs.push_back(WithCoords(c));
  }
  double e = 0.0, cs = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i >= j) continue;
      const auto& x = recs[static_cast<std::size_t>(i)].coordinates;
      const auto& y = recs[static_cast<std::size_t>(j)].coordinates;
      double d = 0, dot = 0, nx = 0, ny = 0;
      for (int k = 0; k < 5; ++k) {
        d += std::pow(x[static_cast<std::size_t>(k)] - y[static_cast<std::size_t>(k)], 2);
        dot += x[static_cast<std::size_t>(k)] * y[static_cast<std::size_t>(k)];
        nx += x[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
        ny += y[static_cast<std::size_t>(k)] * y[static_cast<std::size_t>(k)];
      }
      e += std::sqrt(d) / 3;
      cs += dot / std::sqrt(nx) / std::sqrt(ny) / 3;
    }
  }
  s = LatentDistances(recs);
  CHECK(std::abs(s.mean_euclidean - e) <= 1e-12);
  CHECK(std::abs(s.mean_cosine - cs) <= 1e-12);
  std::reverse(recs.begin(), recs.end());
  const LatentDistanceSummary r = LatentDistances(recs);
  CHECK(std::abs(r.mean_euclidean - s.mean_euclidean) <= 1e-15);
  CHECK(std::abs(r.mean_cosine - s.mean_cosine) <= 1e-15);

  s = LatentDistances(std::vector<MeiRecord>{WithCoords({0, 0}), WithCoords({1, 0}), WithCoords({2, 0})});
  CHECK(s.pairs == 3);
  CHECK(s.cosine_pairs == 1);
  CHECK(s.mean_cosine == 1.0);
  CHECK_THROWS_AS(LatentDistances(std::vector<MeiRecord>{WithCoords({1, 0})}), InputError);
  CHECK_THROWS_AS(LatentDistances(std::vector<MeiRecord>{WithCoords({0, 0}), WithCoords({1, 0})}),
                  InputError);
}

Stimulus Image(int h, int w, int c, std::vector<double> pixels) {
  Stimulus s;
  s.canvas = Canvas{h, w, c};
  s.pixels = std::move(pixels);
  return s;
}

TEST_CASE("compression complexity") {
  const Stimulus flat = Image(64, 64, 3, std::vector<double>(64 * 64 * 3, 0.4));
  CHECK(CompressionRatio(flat) <= 0.05);
  Rng rng(4);
  std::vector<double> noise(64 * 64 * 3);
  for (double& v : noise) v = UniformInt(rng, 256) / 255.0;
  CHECK(CompressionRatio(Image(64, 64, 3, noise)) >= 0.95);
  const double r = CompressionRatio(flat, kFastCompressionLevel);
  CHECK(r > 0.0);
  CHECK(r == CompressionRatio(flat, kFastCompressionLevel));
  CHECK_THROWS_AS(CompressionRatio(flat, 10), InputError);
}

TEST_CASE("constant < grating < noise in compression ratio") {
  Rng rng(5);
  const LatentGrid grid{8, 16};
  for (int trial = 0; trial < 20; ++trial) {
    const Canvas canvas{32, 32, 3};
    LatentIndex g = grid.MidIndex();
    g[kOrientation] = UniformInt(rng, 16);
    g[kFrequency] = UniformInt(rng, 4);
    g[kPhase] = UniformInt(rng, 16);
    g[kContrast] = 15;
    const Stimulus grating = DecodeProcedural(grid, g, canvas);
    const Stimulus flat = DecodeProcedural(grid, grid.MidIndex(), canvas);
    std::vector<double> noise(static_cast<std::size_t>(canvas.size()));
    for (double& v : noise) v = UniformUnit(rng);
    for (int level : {kCompressionLevel, kFastCompressionLevel}) {
      CHECK(CompressionRatio(flat, level) < CompressionRatio(grating, level));
      CHECK(CompressionRatio(grating, level) < CompressionRatio(Image(32, 32, 3, noise), level));
    }
  }
}

}  // namespace
}  // namespace mango
