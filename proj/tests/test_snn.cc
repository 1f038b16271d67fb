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


#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "mango/error.h"
#include "mango/snn.h"
#include "mango/toy_dataset.h"

namespace mango {
namespace {

SpikingNetwork SingleNeuron(double w, int frames) {
  SpikingNetwork net;
  net.input = {1, 1, 1};
  net.layers.push_back(LifLayer::Dense(1, 1));
  net.layers[0].weights = {w};
  net.exposure = frames;
  return net;
}

SpikingNetwork RandomNet(const NetworkSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return MakeNetwork(spec, rng);
}

std::vector<double> RandomImage(Rng& rng, int size) {
  std::vector<double> x(static_cast<std::size_t>(size));
  for (double& v : x) v = UniformUnit(rng);
  return x;
}

TEST_CASE("lif step examples") {
  LifLayer layer = LifLayer::Dense(1, 1);
  layer.weights = {0.5};
  const std::vector<double> one{1.0};
  std::vector<std::uint8_t> s = LifStep(layer, one);
  CHECK(s[0] == 0);
  CHECK(layer.membrane[0] == 0.5);

  layer.weights = {0.0};
  layer.membrane = {1.2};
  s = LifStep(layer, one);
  CHECK(s[0] == 1);
  CHECK(layer.membrane[0] == 0.9 * 1.2 - 1.0);
  CHECK(layer.membrane[0] == doctest::Approx(0.08).epsilon(1e-12));

  layer.membrane = {0.0};
  for (int t = 0; t < 100; ++t) {
    CHECK(LifStep(layer, std::vector<double>{0.0})[0] == 0);
    CHECK(layer.membrane[0] == 0.0);
  }
}

TEST_CASE("threshold ties do not fire") {
  LifLayer layer = LifLayer::Dense(1, 1);
  layer.membrane = {1.0};
  CHECK(LifStep(layer, std::vector<double>{0.0})[0] == 0);
  CHECK(layer.membrane[0] == 0.9);
}

TEST_CASE("lif step rejects bad input") {
  LifLayer layer = LifLayer::Dense(3, 2);
  CHECK_THROWS_AS(LifStep(layer, std::vector<double>{1.0, 2.0}), InputError);
  CHECK_THROWS_AS(LifStep(layer, std::vector<double>{1.0, NAN, 0.0}), InputError);
  CHECK_THROWS_AS(LifStep(layer, std::vector<double>{1.0, INFINITY, 0.0}), InputError);
}

TEST_CASE("membrane matches the scalar recurrence on random sequences") {
  Rng rng(2024);
  for (int seq = 0; seq < 1000; ++seq) {
    const double w = 4.0 * UniformUnit(rng) - 1.0;
    const double beta = 0.05 + 0.9 * UniformUnit(rng);
    const double thr = 0.2 + 2.0 * UniformUnit(rng);
    LifLayer layer = LifLayer::Dense(1, 1);
    layer.weights = {w};
    layer.beta = beta;
    layer.threshold = thr;
    double u = 0.0;
    const int frames = 1 + UniformInt(rng, 100);
    for (int t = 0; t < frames; ++t) {
      const double x = 2.0 * UniformUnit(rng) - 0.5;
      const int s = u > thr ? 1 : 0;
      u = beta * u + w * x - s * thr;
      const auto spikes = LifStep(layer, std::vector<double>{x});
      REQUIRE(spikes[0] == s);
      REQUIRE(layer.membrane[0] == u);
    }
  }
}

TEST_CASE("constant drive follows the recurrence through forward") {
  const SpikingNetwork net = SingleNeuron(0.5, 50);
  const SpikeTrace trace = Forward(net, std::vector<double>{1.0});
  double u = 0.0;
  int count = 0;
  int first = -1;
  for (int t = 0; t < 50; ++t) {
    const int s = u > 1.0 ? 1 : 0;
    u = 0.9 * u + 0.5 - s;
    const int emitted = u > 1.0 ? 1 : 0;
    CHECK(trace.spike(0, t, 0) == emitted);
    count += emitted;
    if (emitted && first < 0) first = t;
  }
  CHECK(trace.counts[0][0] == count);
  // U = 0.5, 0.95, 1.355: first emitted spike on the third frame.
  CHECK(first == 2);
  CHECK(count > 10);
}

TEST_CASE("zero input decays geometrically") {
  for (double u0 : {1.0, 0.7, -0.4}) {
    LifLayer layer = LifLayer::Dense(1, 1);
    layer.membrane = {u0};
    double expected = u0;
    for (int t = 1; t <= 60; ++t) {
      CHECK(LifStep(layer, std::vector<double>{0.0})[0] == 0);
      expected *= 0.9;
      CHECK(layer.membrane[0] == expected);
      CHECK(layer.membrane[0] == doctest::Approx(std::pow(0.9, t) * u0).epsilon(1e-12));
    }
  }
}

TEST_CASE("reset subtracts the threshold") {
  LifLayer layer = LifLayer::Dense(1, 1);
  layer.threshold = 0.7;
  layer.beta = 0.8;
  layer.membrane = {2.5};
  CHECK(LifStep(layer, std::vector<double>{3.0})[0] == 1);
  CHECK(layer.membrane[0] == 0.8 * 2.5 - 0.7);
}

TEST_CASE("zero weights never spike") {
  NetworkSpec spec;
  spec.conv_channels = 2;
  spec.hidden = {5, 3};
  SpikingNetwork net = RandomNet(spec, 1);
  for (LifLayer& l : net.layers) std::fill(l.weights.begin(), l.weights.end(), 0.0);
  Rng rng(3);
  const SpikeTrace trace = Forward(net, RandomImage(rng, 64));
  for (const auto& layer : trace.counts) {
    for (int c : layer) CHECK(c == 0);
  }
}

TEST_CASE("forward leaves the network untouched and is repeatable") {
  NetworkSpec spec;
  spec.init_gain = 1.5;
  const SpikingNetwork net = RandomNet(spec, 4);
  const SpikingNetwork copy = net;
  Rng rng(5);
  const auto x = RandomImage(rng, 64);
  const SpikeTrace a = Forward(net, x);
  const SpikeTrace b = Forward(net, x, Exec::kParallel);
  CHECK(a.spikes == b.spikes);
  CHECK(a.counts == b.counts);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    CHECK(net.layers[l].membrane == copy.layers[l].membrane);
  }
}

TEST_CASE("activation") {
  SpikingNetwork net = SingleNeuron(5.0, 50);
  CHECK(Activation(net, std::vector<double>{1.0}, 0, 0) == 1.0);
  net.layers[0].weights = {0.0};
  CHECK(Activation(net, std::vector<double>{1.0}, 0, 0) == 0.0);

  SpikeTrace trace;
  trace.frames = 50;
  trace.counts = {{25}};
  trace.spikes = {std::vector<std::uint8_t>(50, 0)};
  CHECK(Activation(net, trace, 0, 0) == 0.5);

  CHECK_THROWS_AS(Activation(net, trace, 1, 0), InputError);
  CHECK_THROWS_AS(Activation(net, trace, 0, 1), InputError);
  CHECK_THROWS_AS(Activation(net, std::vector<double>{1.0, 2.0}, 0, 0), InputError);
}

TEST_CASE("activation stays in [0, 1] and is 1 only for every-frame firing") {
  NetworkSpec spec;
  spec.conv_channels = 3;
  spec.hidden = {16};
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    spec.init_gain = 0.5 + 3.0 * UniformUnit(rng);
    const SpikingNetwork net = RandomNet(spec, static_cast<std::uint64_t>(trial));
    const SpikeTrace trace = Forward(net, RandomImage(rng, 64));
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const LifLayer& layer = net.layers[l];
      for (int n = 0; n < layer.neuron_count(); ++n) {
        const double a = Activation(net, trace, static_cast<int>(l), n);
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
        bool every = true;
        long total = 0;
        for (int p = 0; p < layer.positions(); ++p) {
          const int u = layer.unit(n, p);
          total += trace.counts[l][static_cast<std::size_t>(u)];
          for (int t = 0; t < trace.frames; ++t) every = every && trace.spike(static_cast<int>(l), t, u);
          CHECK(UnitActivation(net, trace, static_cast<int>(l), u) <= 1.0);
        }
        CHECK((a == 1.0) == every);
        CHECK(a == doctest::Approx(static_cast<double>(total) / layer.positions() / trace.frames));
      }
    }
  }
}

TEST_CASE("trace counts are frame sums") {
  NetworkSpec spec;
  spec.init_gain = 2.0;
  const SpikingNetwork net = RandomNet(spec, 9);
  Rng rng(10);
  const SpikeTrace trace = Forward(net, RandomImage(rng, 64));
  for (std::size_t l = 0; l < trace.counts.size(); ++l) {
    for (std::size_t u = 0; u < trace.counts[l].size(); ++u) {
      int sum = 0;
      for (int t = 0; t < trace.frames; ++t) {
        const int s = trace.spike(static_cast<int>(l), t, static_cast<int>(u));
        CHECK((s == 0 || s == 1));
        sum += s;
      }
      CHECK(sum == trace.counts[l][u]);
    }
  }
}

TEST_CASE("surrogate gradient") {
  CHECK(SurrogateGrad(1.0, 1.0, 2.0) == 2.0);
  CHECK(SurrogateGrad(0.4, 0.4, 3.0) == 3.0);
  for (double d : {0.01, 0.3, 2.0}) {
    CHECK(SurrogateGrad(1.0 + d, 1.0, 2.0) == doctest::Approx(SurrogateGrad(1.0 - d, 1.0, 2.0)).epsilon(1e-14));
  }
  const double u = 1.3;
  const double h = 1e-6;
  const double fd = (SmoothSpike(u + h, 1.0, 2.0) - SmoothSpike(u - h, 1.0, 2.0)) / (2 * h);
  CHECK(std::abs(fd - SurrogateGrad(u, 1.0, 2.0)) / SurrogateGrad(u, 1.0, 2.0) <= 1e-6);
  CHECK(SmoothSpike(1.0, 1.0, 2.0) == 0.5);
  CHECK_THROWS_AS(SurrogateGrad(0.0, 1.0, 0.0), InputError);
}

TEST_CASE("alpha only affects gradients") {
  NetworkSpec spec;
  spec.init_gain = 1.5;
  SpikingNetwork net = RandomNet(spec, 12);
  Rng rng(13);
  const auto x = RandomImage(rng, 64);
  const SpikeTrace a = Forward(net, x);
  const auto pa = ClassProbabilities(net, x);
  net.surrogate_alpha = 9.0;
  const SpikeTrace b = Forward(net, x);
  CHECK(a.spikes == b.spikes);
  CHECK(pa == ClassProbabilities(net, x));
  const Example e{x, 1};
  CHECK(ExampleLoss(net, e) == ExampleLoss(RandomNet(spec, 12), e));
}

double RelativeError(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

void CheckGradient(SpikingNetwork net, const Example& e, int samples_per_layer, Rng& rng) {
  const LossGradient g = ComputeLossGradient(net, e, true);
  CHECK(g.loss == doctest::Approx(ExampleLoss(net, e, true)).epsilon(1e-14));
  const double h = 1e-6;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& w = net.layers[l].weights;
    for (int s = 0; s < samples_per_layer; ++s) {
      const auto j = static_cast<std::size_t>(UniformInt(rng, static_cast<int>(w.size())));
      const double saved = w[j];
      w[j] = saved + h;
      const double up = ExampleLoss(net, e, true);
      w[j] = saved - h;
      const double down = ExampleLoss(net, e, true);
      w[j] = saved;
      const double fd = (up - down) / (2 * h);
      INFO("layer ", l, " weight ", j, " bptt ", g.weights[l][j], " fd ", fd);
      CHECK(RelativeError(g.weights[l][j], fd) <= 1e-3);
    }
  }
}

TEST_CASE("bptt matches finite differences of the smoothed loss") {
  Rng rng(14);
  NetworkSpec spec;
  spec.input = {3, 3, 1};
  spec.hidden = {4};
  spec.classes = 3;
  spec.exposure = 5;
  spec.init_gain = 2.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SpikingNetwork net = RandomNet(spec, seed);
    CheckGradient(net, Example{RandomImage(rng, 9), static_cast<int>(seed % 3)}, 12, rng);
  }
}

TEST_CASE("bptt through a convolutional front layer") {
  Rng rng(15);
  NetworkSpec spec;
  spec.input = {4, 4, 2};
  spec.conv_channels = 2;
  spec.hidden = {3};
  spec.classes = 2;
  spec.exposure = 5;
  spec.init_gain = 2.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const SpikingNetwork net = RandomNet(spec, 100 + seed);
    CheckGradient(net, Example{RandomImage(rng, 32), 1}, 10, rng);
  }
}

TEST_CASE("zero learning rate leaves weights unchanged") {
  const ToyDataset data = MakeToyDataset({});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SpikingNetwork net = RandomNet(NetworkSpec{}, seed);
    const SpikingNetwork before = net;
    TrainOptions opt;
    opt.learning_rate = 0.0;
    Rng rng(seed);
    const double loss = TrainEpoch(net, data.train, opt, rng);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      CHECK(net.layers[l].weights == before.layers[l].weights);
    }
    CHECK(loss == doctest::Approx(MeanLoss(net, data.train)).epsilon(1e-12));
    CHECK(std::abs(loss - std::log(4.0)) <= 0.2);
  }
}

TEST_CASE("training is independent of the execution policy") {
  const ToyDataset data = MakeToyDataset({.samples = 40});
  SpikingNetwork a = RandomNet(NetworkSpec{}, 3);
  SpikingNetwork b = a;
  Rng ra(1);
  Rng rb(1);
  TrainOptions opt;
  opt.exec = Exec::kSerial;
  const double la = TrainEpoch(a, data.train, opt, ra);
  opt.exec = Exec::kParallel;
  const double lb = TrainEpoch(b, data.train, opt, rb);
  CHECK(la == lb);
  for (std::size_t l = 0; l < a.layers.size(); ++l) CHECK(a.layers[l].weights == b.layers[l].weights);
}

TEST_CASE("toy training reaches high held-out accuracy") {
  const ToyDataset data = MakeToyDataset({});
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    SpikingNetwork net = RandomNet(NetworkSpec{}, seed);
    Rng rng(seed);
    for (int epoch = 0; epoch < 30; ++epoch) TrainEpoch(net, data.train, TrainOptions{}, rng);
    CHECK(Accuracy(net, data.test) >= 0.9);
  }
}

TEST_CASE("training rejects bad labels and empty data") {
  SpikingNetwork net = RandomNet(NetworkSpec{}, 1);
  Rng rng(1);
  std::vector<Example> bad{Example{std::vector<double>(64, 0.0), 4}};
  CHECK_THROWS_AS(TrainEpoch(net, bad, TrainOptions{}, rng), InputError);
  CHECK_THROWS_AS(TrainEpoch(net, std::vector<Example>{}, TrainOptions{}, rng), InputError);
  std::vector<Example> wrong_size{Example{std::vector<double>(10, 0.0), 0}};
  CHECK_THROWS_AS(TrainEpoch(net, wrong_size, TrainOptions{}, rng), InputError);
}

TEST_CASE("class probabilities") {
  const std::vector<double> equal{3, 3, 3, 3};
  for (double p : Softmax(equal)) CHECK(p == 0.25);
  const auto peaked = Softmax(std::vector<double>{50, 0, 0, 0});
  CHECK(peaked[0] >= 0.99);

  NetworkSpec spec;
  spec.init_gain = 2.0;
  SpikingNetwork net = RandomNet(spec, 21);
  Rng rng(22);
  const auto x = RandomImage(rng, 64);
  const auto p = ClassProbabilities(net, x);
  double total = 0.0;
  for (double v : p) total += v;
  CHECK(std::abs(total - 1.0) <= 1e-12);

  // Rotate the output rows; probabilities rotate the same way.
  LifLayer& out = net.layers.back();
  const std::vector<double> w = out.weights;
  const int in = out.inputs;
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < in; ++j) {
      out.weights[static_cast<std::size_t>(((k + 1) % 4) * in + j)] = w[static_cast<std::size_t>(k * in + j)];
    }
  }
  const auto q = ClassProbabilities(net, x);
  for (int k = 0; k < 4; ++k) CHECK(q[static_cast<std::size_t>((k + 1) % 4)] == p[static_cast<std::size_t>(k)]);
}

TEST_CASE("network validation") {
  SpikingNetwork net = RandomNet(NetworkSpec{}, 1);
  net.exposure = 0;
  CHECK_THROWS_AS(net.Validate(), InputError);
  net = RandomNet(NetworkSpec{}, 1);
  net.layers[0].beta = 1.0;
  CHECK_THROWS_AS(net.Validate(), InputError);
  net = RandomNet(NetworkSpec{}, 1);
  net.layers[1] = LifLayer::Dense(31, 4);
  CHECK_THROWS_AS(net.Validate(), InputError);
  CHECK_THROWS_AS(LifLayer::Conv(ConvShape{4, 4, 1, 2, 2}), InputError);
}

TEST_CASE("checkpoint round trip") {
  NetworkSpec spec;
  spec.conv_channels = 2;
  spec.hidden = {7};
  spec.exposure = 33;
  spec.beta = 0.85;
  SpikingNetwork net = RandomNet(spec, 30);
  net.surrogate_alpha = 3.5;
  std::stringstream buf;
  WriteNetwork(buf, net);
  const SpikingNetwork back = ReadNetwork(buf);
  CHECK(back.input == net.input);
  CHECK(back.exposure == 33);
  CHECK(back.surrogate_alpha == 3.5);
  REQUIRE(back.layers.size() == net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    CHECK(back.layers[l].kind == net.layers[l].kind);
    CHECK(back.layers[l].conv == net.layers[l].conv);
    CHECK(back.layers[l].weights == net.layers[l].weights);
    CHECK(back.layers[l].beta == net.layers[l].beta);
    CHECK(back.layers[l].threshold == net.layers[l].threshold);
  }

  std::string bytes = buf.str();
  bytes[8] = 9;  // version
  std::stringstream bad(bytes);
  CHECK_THROWS_AS(ReadNetwork(bad), InputError);
  std::stringstream truncated(buf.str().substr(0, 40));
  CHECK_THROWS_AS(ReadNetwork(truncated), InputError);
  std::stringstream garbage("NOTANETWORK");
  CHECK_THROWS_AS(ReadNetwork(garbage), InputError);
}

}  // namespace
}  // namespace mango
