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


// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if
// any criterion fails. Reference values come from independent oracles in
// this file and tests/oracles.h, never from the routine under test.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mango/analysis.h"
#include "mango/harness.h"
#include "mango/optimizer.h"
#include "mango/snn.h"
#include "mango/stimulus.h"
#include "mango/tensor_train.h"
#include "mango/toy_dataset.h"
#include "oracles.h"

namespace mango {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() /
             ("mango_accept_" + std::to_string(getpid()) + "_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// One-sided sign test: P(X >= successes) for X ~ Bin(trials, 1/2).
double SignTestP(int successes, int trials) {
  double p = 0.0;
  for (int k = successes; k <= trials; ++k) {
    double c = 1.0;
    for (int i = 0; i < k; ++i) c = c * (trials - i) / (i + 1);
    p += c * std::pow(0.5, trials);
  }
  return p;
}

double MedianOf(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------

Outcome TtOracleSuite() {
  Rng rng(20260101);
  double eval_err = 0.0, sum_err = 0.0, tv_max = 0.0, grad_err = 0.0;
  int tv_trains = 0, grad_trains = 0;
  for (int t = 0; t < 50; ++t) {
    std::vector<int> shape;
    std::size_t size = 1;
    const int d = 2 + UniformInt(rng, 4);
    for (int i = 0; i < d; ++i) {
      const int n = 2 + UniformInt(rng, 9);
      if (size * n > 10000) break;
      shape.push_back(n);
      size *= n;
    }
    const int rank = 1 + UniformInt(rng, 4);
    const TensorTrain tt = TtRandom(shape, rank, rng, -1.0, 1.0);
    const std::vector<double> dense = oracle::DenseTensor(tt);
    double scale = 0.0, worst = 0.0;
    for (std::size_t f = 0; f < dense.size(); ++f) {
      scale = std::max(scale, std::abs(dense[f]));
      worst = std::max(worst, std::abs(TtEval(tt, oracle::Unflatten(shape, f)) - dense[f]));
    }
    eval_err = std::max(eval_err, worst / scale);
    double abs_total = 0.0, total = 0.0;
    for (double v : dense) {
      total += v;
      abs_total += std::abs(v);
    }
    sum_err = std::max(sum_err, std::abs(TtSum(tt) - total) / abs_total);

    // Sampling and gradients need a nonnegative density.
    const TensorTrain density = TtRandom(shape, rank, rng, 0.05, 1.0);
    if (size <= 64) {
      ++tv_trains;
      const std::vector<double> p = oracle::DenseTensor(density);
      const double z = std::accumulate(p.begin(), p.end(), 0.0);
      std::vector<double> freq(p.size(), 0.0);
      for (const auto& x : TtSample(density, 100000, rng)) freq[oracle::FlatIndex(shape, x)] += 1e-5;
      double tv = 0.0;
      for (std::size_t f = 0; f < p.size(); ++f) tv += 0.5 * std::abs(freq[f] - p[f] / z);
      tv_max = std::max(tv_max, tv);
    }
    if (size <= 400) {
      ++grad_trains;
      std::vector<LatentIndex> xs;
      for (int i = 0; i < 4; ++i) {
        LatentIndex x;
        for (int n : shape) x.push_back(UniformInt(rng, n));
        xs.push_back(x);
      }
      const LogLikelihood ll = TtLogLikelihood(density, xs);
      const CoreGradient fd = oracle::FiniteDifferenceGradient(
          density, [&](const TensorTrain& t) { return oracle::DenseLogLikelihood(t, xs); });
      for (std::size_t i = 0; i < fd.size(); ++i)
        for (std::size_t j = 0; j < fd[i].size(); ++j)
          grad_err = std::max(grad_err, std::abs(ll.gradient[i][j] - fd[i][j]) /
                                            std::max(1.0, std::abs(fd[i][j])));
    }
  }
  const bool pass = eval_err <= 1e-10 && sum_err <= 1e-10 && tv_max <= 0.02 &&
                    grad_err <= 1e-5 && tv_trains > 0 && grad_trains > 0;
  return {pass, Format("50 trains: eval err %.1e, sum err %.1e; TV %.4f over %d trains; "
                       "grad err %.1e over %d trains",
                       eval_err, sum_err, tv_max, tv_trains, grad_err, grad_trains)};
}

Outcome ProtesBenchmark() {
  const std::vector<Method> methods{Method::kProtes, Method::kProtesS, Method::kProtesB,
                                    Method::kRandomSearch};
  const std::vector<BenchmarkRow> rows = RunBenchmark(methods, 10, 2000, {});
  std::map<std::string, std::map<Method, int>> hits;
  std::map<std::string, std::map<Method, std::vector<double>>> values;
  for (const BenchmarkRow& r : rows) {
    hits[r.objective][r.method] += r.found;
    values[r.objective][r.method].push_back(r.best_value);
  }
  bool pass = true;
  std::string detail;
  for (Method m : kProtesPresets) {
    int solved = 0;
    for (auto& [name, h] : hits) solved += h[m] >= 9;
    pass = pass && solved == static_cast<int>(hits.size());
    detail += Format("%s %d/%zu objectives at >=9/10; ", MethodName(m).c_str(), solved,
                     hits.size());
  }
  int better = 0;
  for (auto& [name, v] : values)
    better += MedianOf(v[Method::kProtes]) >= MedianOf(v[Method::kRandomSearch]);
  pass = pass && better >= 8;
  detail += Format("protes median >= random median on %d/%zu", better, values.size());
  return {pass, detail};
}

Outcome LifSuite() {
  Rng rng(77);
  bool exact = true;
  for (int seq = 0; seq < 1000 && exact; ++seq) {
    LifLayer layer = LifLayer::Dense(1, 1);
    const double w = 4.0 * UniformUnit(rng) - 1.0;
    layer.weights = {w};
    layer.beta = 0.05 + 0.9 * UniformUnit(rng);
    layer.threshold = 0.2 + 2.0 * UniformUnit(rng);
    double u = 0.0;
    const int frames = 1 + UniformInt(rng, 100);
    for (int t = 0; t < frames && exact; ++t) {
      const double x = 2.0 * UniformUnit(rng) - 0.5;
      const int s = u > layer.threshold ? 1 : 0;
      u = layer.beta * u + w * x - s * layer.threshold;
      const auto spikes = LifStep(layer, std::vector<double>{x});
      exact = spikes[0] == s && layer.membrane[0] == u;
    }
  }
  bool decay = true;
  for (double beta : {0.5, 0.9, 0.99}) {
    LifLayer layer = LifLayer::Dense(1, 1);
    layer.beta = beta;
    layer.membrane = {0.95};
    for (int t = 1; t <= 100; ++t) {
      decay = decay && LifStep(layer, std::vector<double>{0.0})[0] == 0 &&
              std::abs(layer.membrane[0] - 0.95 * std::pow(beta, t)) <= 1e-12;
    }
  }
  bool bounded = true;
  std::int64_t checked = 0;
  for (int n = 0; n < 40; ++n) {
    NetworkSpec spec;
    spec.init_gain = 0.2 + 3.0 * UniformUnit(rng);
    spec.conv_channels = n % 2 ? 4 : 0;
    spec.exposure = 5 + UniformInt(rng, 50);
    Rng init(n);
    const SpikingNetwork net = MakeNetwork(spec, init);
    for (int k = 0; k < 5; ++k) {
      std::vector<double> x(64);
      for (double& v : x) v = UniformUnit(rng);
      const SpikeTrace trace = Forward(net, x);
      for (int l = 0; l < static_cast<int>(net.layers.size()); ++l) {
        for (int i = 0; i < net.layers[l].neuron_count(); ++i) {
          const double a = Activation(net, trace, l, i);
          bounded = bounded && a >= 0.0 && a <= 1.0;
          ++checked;
        }
      }
    }
  }
  return {exact && decay && bounded,
          Format("recurrence exact on 1000 sequences: %s; zero-input decay: %s; "
                 "%lld activations in [0,1]: %s",
                 exact ? "yes" : "no", decay ? "yes" : "no", static_cast<long long>(checked),
                 bounded ? "yes" : "no")};
}

Outcome ToyTraining() {
  const ToyDataset data = MakeToyDataset({});
  int reached = 0;
  std::string accs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    SpikingNetwork net = MakeNetwork({}, rng);
    double best = 0.0;
    for (int epoch = 1; epoch <= 30 && best < 0.9; ++epoch) {
      TrainEpoch(net, data.train, {}, rng);
      best = std::max(best, Accuracy(net, data.test));
    }
    reached += best >= 0.9;
    accs += Format("%.2f ", best);
  }

  // Every weight of a micro-network against central differences of the
  // smoothed loss.
  double worst = 0.0;
  Rng rng(99);
  NetworkSpec micro;
  micro.input = {3, 3, 1};
  micro.hidden = {4};
  micro.classes = 3;
  micro.exposure = 5;
  micro.init_gain = 2.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng init(seed);
    SpikingNetwork net = MakeNetwork(micro, init);
    Example e;
    e.label = static_cast<int>(seed % 3);
    for (int i = 0; i < 9; ++i) e.pixels.push_back(UniformUnit(rng));
    const LossGradient g = ComputeLossGradient(net, e, true);
    const double h = 1e-6;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto& w = net.layers[l].weights;
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double saved = w[j];
        w[j] = saved + h;
        const double up = ExampleLoss(net, e, true);
        w[j] = saved - h;
        const double down = ExampleLoss(net, e, true);
        w[j] = saved;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(g.weights[l][j] - fd) /
                                    std::max({std::abs(g.weights[l][j]), std::abs(fd), 1e-8}));
      }
    }
  }
  return {reached >= 8 && worst <= 1e-3,
          Format("%d/10 seeds reach 0.9 held-out (best: %s); BPTT rel err %.1e", reached,
                 accs.c_str(), worst)};
}

Outcome GratingSanity() {
  const LatentGrid grid{4, 8};
  const Canvas canvas{8, 8, 1};
  const SpikingNetwork net = GratingNeuronNetwork(grid, canvas, 0, 4, 0.17);
  ProceduralGenerator gen(grid, canvas);
  double best = -1.0;
  for (int i = 0; i < 4096; ++i) {
    const LatentIndex idx{i / 512, (i / 64) % 8, (i / 8) % 8, i % 8};
    best = std::max(best, Activation(net, DecodeProcedural(grid, idx, canvas).pixels, 0, 0));
  }
  bool pass = true;
  std::string detail = Format("exhaustive max %.2f; ", best);
  for (Method m : kProtesPresets) {
    int hits = 0, vertical = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      ProtesConfig pc;
      pc.seed = CellSeed(s, 0, 0, m);
      const OptimizationRecord r = Optimize(m, MakeObjective(net, gen, 0, 0, 2000), pc);
      const bool hit = r.best_value == best;
      hits += hit;
      vertical += hit && r.best_index[kOrientation] == 0;
    }
    pass = pass && hits >= 9 && vertical == hits;
    detail += Format("%s %d/10 (vertical %d); ", MethodName(m).c_str(), hits, vertical);
  }
  return {pass, detail};
}

Outcome SelectivityTrend() {
  int entropy_wins = 0, entropy_trials = 0, fraction_wins = 0, fraction_trials = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TempDir tmp("trend" + std::to_string(seed));
    ExperimentConfig c;
    c.seed = seed;
    c.output_dir = tmp.path;
    c.training.epochs = 30;
    c.epochs = {0, 30};
    RunTrainingWithSnapshots(c);
    const SweepResult sweep = RunMeiSweep(c);
    if (sweep.partial()) return {false, "sweep incomplete"};

    const int output = 1;
    std::map<int, std::vector<double>> entropy;  // layer -> entropies at the final epoch
    std::map<std::pair<int, NeuronId>, std::vector<MeiRecord>> groups;
    for (const CellOutcome& o : sweep.cells) {
      const MeiRecord& r = *o.record;
      if (r.epoch == 30) entropy[r.neuron.layer].push_back(NormalizedEntropy(r.class_probs));
      groups[{r.epoch, r.neuron}].push_back(r);
    }
    std::map<int, std::pair<int, int>> selective;  // epoch -> (selective, neurons)
    for (const auto& [key, records] : groups) {
      if (key.second.layer != output) continue;
      selective[key.first].first += Verdict(records).selective;
      ++selective[key.first].second;
    }
    const auto mean = [](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    const double h_first = mean(entropy[0]), h_out = mean(entropy[output]);
    const double f0 = static_cast<double>(selective[0].first) / selective[0].second;
    const double f30 = static_cast<double>(selective[30].first) / selective[30].second;
    if (h_out != h_first) {
      ++entropy_trials;
      entropy_wins += h_out < h_first;
    }
    if (f30 != f0) {
      ++fraction_trials;
      fraction_wins += f30 > f0;
    }
    detail += Format("seed %d: H first %.3f out %.3f, selective %.2f->%.2f; ",
                     static_cast<int>(seed), h_first, h_out, f0, f30);
  }
  const double p_entropy = entropy_trials ? SignTestP(entropy_wins, entropy_trials) : 1.0;
  const double p_fraction = fraction_trials ? SignTestP(fraction_wins, fraction_trials) : 1.0;
  detail += Format("sign test p: entropy %.4f, fraction %.4f", p_entropy, p_fraction);
  return {p_entropy <= 0.05 && p_fraction <= 0.05, detail};
}

Outcome AnalysisOracles() {
  std::vector<double> half(10, 0.0);
  half[0] = half[1] = 0.5;
  const double h_err = std::abs(NormalizedEntropy(half) - std::log(2.0) / std::log(10.0));

  Rng rng(5);
  double dist_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<MeiRecord> records(static_cast<std::size_t>(2 + UniformInt(rng, 10)));
    const int d = 1 + UniformInt(rng, 8);
    for (MeiRecord& r : records)
      for (int i = 0; i < d; ++i)
        r.coordinates.push_back(UniformInt(rng, 4) == 0 ? 0.0 : 2.0 * UniformUnit(rng) - 1.0);
    double euclid = 0.0, cosine = 0.0;
    int pairs = 0, cos_pairs = 0;
    for (std::size_t a = 0; a < records.size(); ++a) {
      for (std::size_t b = a + 1; b < records.size(); ++b) {
        const auto& x = records[a].coordinates;
        const auto& y = records[b].coordinates;
        double dd = 0.0, xy = 0.0, xx = 0.0, yy = 0.0;
        for (int i = 0; i < d; ++i) {
          dd += (x[i] - y[i]) * (x[i] - y[i]);
          xy += x[i] * y[i];
          xx += x[i] * x[i];
          yy += y[i] * y[i];
        }
        euclid += std::sqrt(dd);
        ++pairs;
        if (xx > 0.0 && yy > 0.0) {
          cosine += xy / std::sqrt(xx * yy);
          ++cos_pairs;
        }
      }
    }
    const LatentDistanceSummary s = LatentDistances(records);
    dist_err = std::max(dist_err, std::abs(s.mean_euclidean - euclid / pairs));
    if (cos_pairs) dist_err = std::max(dist_err, std::abs(s.mean_cosine - cosine / cos_pairs));
    if (s.pairs != pairs || s.cosine_pairs != cos_pairs) dist_err = 1.0;
  }

  const Canvas canvas{32, 32, 1};
  const LatentGrid grid{8, 16};
  int ordered = 0;
  const int triples = 20;
  for (int t = 0; t < triples; ++t) {
    Stimulus constant{canvas, std::vector<double>(canvas.size(), UniformUnit(rng)), {}, "test"};
    LatentIndex idx = grid.MidIndex();
    idx[kOrientation] = UniformInt(rng, 16);
    idx[kFrequency] = UniformInt(rng, 16);
    idx[kPhase] = UniformInt(rng, 16);
    idx[kContrast] = 15;
    const Stimulus grating = DecodeProcedural(grid, idx, canvas);
    Stimulus noise{canvas, std::vector<double>(canvas.size()), {}, "test"};
    for (double& v : noise.pixels) v = UniformUnit(rng);
    const double c = CompressionRatio(constant), g = CompressionRatio(grating),
                 n = CompressionRatio(noise);
    ordered += c < g && g < n;
  }
  return {h_err <= 1e-12 && dist_err <= 1e-12 && ordered == triples,
          Format("entropy err %.1e; distance err %.1e; constant < grating < noise on %d/%d",
                 h_err, dist_err, ordered, triples)};
}

Outcome DeterminismAndBudget() {
  TempDir a("det_a"), b("det_b");
  ExperimentConfig c;
  c.seed = 4242;
  c.training.epochs = 10;
  c.training.snapshot_every = 5;
  c.epochs = {0, 10};
  c.budget = 500;
  c.targets = {{0, {0, 7, 19}}, {1, {}}};
  std::vector<SweepResult> runs;
  for (const fs::path& dir : {a.path, b.path}) {
    c.output_dir = dir;
    RunTrainingWithSnapshots(c);
    runs.push_back(RunMeiSweep(c));
  }
  const bool manifests = Slurp(a.path / "manifest.json") == Slurp(b.path / "manifest.json");
  bool reconciled = true;
  std::int64_t per_cell = 0;
  for (const SweepResult& r : runs) {
    std::int64_t sum = 0;
    for (const CellOutcome& o : r.cells) {
      sum += o.record->evaluations;
      reconciled = reconciled && o.record->evaluations == c.budget;
    }
    reconciled = reconciled && sum == r.evaluations && r.decodes == sum && r.forwards == sum;
    per_cell = sum;
  }
  return {manifests && reconciled && !runs[0].cells.empty(),
          Format("manifests identical: %s; %zu cells, %lld evaluations = decodes = forwards: %s",
                 manifests ? "yes" : "no", runs[0].cells.size(),
                 static_cast<long long>(per_cell), reconciled ? "yes" : "no")};
}

}  // namespace
}  // namespace mango

int main() {
  struct Criterion {
    const char* name;
    double limit_seconds;
    std::function<mango::Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"tt-oracle-suite", 120, mango::TtOracleSuite},
      {"protes-benchmark", 300, mango::ProtesBenchmark},
      {"lif-suite", 30, mango::LifSuite},
      {"toy-training", 300, mango::ToyTraining},
      {"grating-neuron-end-to-end", 180, mango::GratingSanity},
      {"selectivity-trend", 600, mango::SelectivityTrend},
      {"analysis-oracles", 60, mango::AnalysisOracles},
      {"determinism-and-budget", 300, mango::DeterminismAndBudget},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    mango::Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = o.pass && secs <= c.limit_seconds;
    failed += !pass;
    std::printf("%s %s [%.1fs / %.0fs] %s\n", pass ? "PASS" : "FAIL", c.name, secs,
                c.limit_seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed ? 1 : 0;
}
