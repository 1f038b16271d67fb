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


#include "mango/snn.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "mango/binary_io.h"
#include "mango/error.h"

namespace mango {
namespace {

constexpr std::string_view kNetworkMagic = "MANGONET";
constexpr std::uint32_t kNetworkVersion = 1;

double Integrate(double u, double drive, double s, double beta, double threshold) {
  return beta * u + drive - s * threshold;
}

void RequireFinite(std::span<const double> x, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError(std::string(what) + " contains a non-finite value");
  }
}

void AddInputGrad(const LifLayer& layer, std::span<const double> g, std::span<double> dx) {
  if (layer.kind == LayerKind::kDense) {
    MatTVecAdd(layer.weights, layer.outputs, layer.inputs, g, dx, Exec::kSerial);
  } else {
    Conv2dInputGradAdd(layer.conv, layer.weights, g, dx, Exec::kSerial);
  }
}

void AddWeightGrad(const LifLayer& layer, std::span<const double> g,
                   std::span<const double> x, std::span<double> dw) {
  if (layer.kind == LayerKind::kDense) {
    OuterAdd(g, x, layer.outputs, layer.inputs, dw, Exec::kSerial);
  } else {
    Conv2dWeightGradAdd(layer.conv, x, g, dw, Exec::kSerial);
  }
}

// Per-layer record of one exposure, kept for backpropagation.
struct Tape {
  std::vector<double> inputs;    // [frame][input_size]; empty for layer 0
  std::vector<double> membrane;  // [frame][units], after the update
  std::vector<double> emitted;   // [frame][units]
};

// Runs one exposure. In smooth mode spikes are S~(U) and the reset uses
// the previous frame's emitted value; in hard mode both are the threshold
// test, which is the literal recurrence.
std::vector<double> Simulate(const SpikingNetwork& net, std::span<const double> stimulus,
                             bool smooth, Exec exec, SpikeTrace* trace,
                             std::vector<Tape>* tape) {
  MANGO_REQUIRE(static_cast<int>(stimulus.size()) == net.input.size(),
                "stimulus has " + std::to_string(stimulus.size()) +
                    " values, network expects " + std::to_string(net.input.size()));
  RequireFinite(stimulus, "stimulus");
  const std::size_t depth = net.layers.size();
  const int frames = net.exposure;
  std::vector<std::vector<double>> u(depth), prev(depth), drive(depth), out(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    const auto units = static_cast<std::size_t>(net.layers[l].output_size());
    u[l].assign(units, 0.0);
    prev[l].assign(units, 0.0);
    drive[l].assign(units, 0.0);
    out[l].assign(units, 0.0);
  }
  if (trace) {
    trace->frames = frames;
    trace->spikes.assign(depth, {});
    trace->counts.assign(depth, {});
    for (std::size_t l = 0; l < depth; ++l) {
      trace->spikes[l].assign(static_cast<std::size_t>(frames) * u[l].size(), 0);
      trace->counts[l].assign(u[l].size(), 0);
    }
  }
  if (tape) {
    tape->assign(depth, {});
    for (std::size_t l = 0; l < depth; ++l) {
      if (l > 0) (*tape)[l].inputs.reserve(static_cast<std::size_t>(frames) * u[l - 1].size());
      (*tape)[l].membrane.reserve(static_cast<std::size_t>(frames) * u[l].size());
      (*tape)[l].emitted.reserve(static_cast<std::size_t>(frames) * u[l].size());
    }
  }
  std::vector<double> counts(u[depth - 1].size(), 0.0);

  for (int t = 0; t < frames; ++t) {
    std::span<const double> x = stimulus;
    for (std::size_t l = 0; l < depth; ++l) {
      const LifLayer& layer = net.layers[l];
      layer.Drive(x, drive[l], exec);
      for (std::size_t i = 0; i < u[l].size(); ++i) {
        const double s = smooth ? prev[l][i] : (u[l][i] > layer.threshold ? 1.0 : 0.0);
        u[l][i] = Integrate(u[l][i], drive[l][i], s, layer.beta, layer.threshold);
        out[l][i] = smooth ? SmoothSpike(u[l][i], layer.threshold, net.surrogate_alpha)
                           : (u[l][i] > layer.threshold ? 1.0 : 0.0);
      }
      if (trace) {
        std::uint8_t* row = trace->spikes[l].data() + static_cast<std::size_t>(t) * u[l].size();
        for (std::size_t i = 0; i < u[l].size(); ++i) {
          const bool fired = u[l][i] > layer.threshold;
          row[i] = fired;
          trace->counts[l][i] += fired;
        }
      }
      if (tape) {
        Tape& tp = (*tape)[l];
        if (l > 0) tp.inputs.insert(tp.inputs.end(), x.begin(), x.end());
        tp.membrane.insert(tp.membrane.end(), u[l].begin(), u[l].end());
        tp.emitted.insert(tp.emitted.end(), out[l].begin(), out[l].end());
      }
      prev[l] = out[l];
      x = out[l];
    }
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += out[depth - 1][i];
  }
  return counts;
}

double CrossEntropy(std::span<const double> probs, int label) {
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));
}

void CheckExample(const SpikingNetwork& net, const Example& example) {
  MANGO_REQUIRE(static_cast<int>(example.pixels.size()) == net.input.size(),
                "example has " + std::to_string(example.pixels.size()) +
                    " values, network expects " + std::to_string(net.input.size()));
  RequireFinite(example.pixels, "example");
  MANGO_REQUIRE(example.label >= 0 && example.label < net.class_count(),
                "label " + std::to_string(example.label) + " outside [0, " +
                    std::to_string(net.class_count()) + ")");
}

}  // namespace

LifLayer LifLayer::Dense(int inputs, int outputs) {
  MANGO_REQUIRE(inputs >= 1 && outputs >= 1, "dense layer sizes must be >= 1");
  LifLayer layer;
  layer.kind = LayerKind::kDense;
  layer.inputs = inputs;
  layer.outputs = outputs;
  layer.weights.assign(static_cast<std::size_t>(inputs) * outputs, 0.0);
  layer.membrane.assign(static_cast<std::size_t>(outputs), 0.0);
  return layer;
}

LifLayer LifLayer::Conv(const ConvShape& shape) {
  MANGO_REQUIRE(shape.height >= 1 && shape.width >= 1 && shape.in_channels >= 1 &&
                    shape.out_channels >= 1,
                "convolution sizes must be >= 1");
  MANGO_REQUIRE(shape.kernel >= 1 && shape.kernel % 2 == 1, "convolution kernel must be odd");
  LifLayer layer;
  layer.kind = LayerKind::kConv;
  layer.conv = shape;
  layer.weights.assign(static_cast<std::size_t>(shape.weight_count()), 0.0);
  layer.membrane.assign(static_cast<std::size_t>(shape.output_size()), 0.0);
  return layer;
}

int LifLayer::input_size() const {
  return kind == LayerKind::kDense ? inputs : conv.input_size();
}

int LifLayer::output_size() const {
  return kind == LayerKind::kDense ? outputs : conv.output_size();
}

int LifLayer::neuron_count() const {
  return kind == LayerKind::kDense ? outputs : conv.out_channels;
}

int LifLayer::positions() const {
  return kind == LayerKind::kDense ? 1 : conv.height * conv.width;
}

int LifLayer::unit(int neuron, int p) const {
  return kind == LayerKind::kDense ? neuron : p * conv.out_channels + neuron;
}

void LifLayer::Validate() const {
  MANGO_REQUIRE(beta > 0.0 && beta < 1.0, "beta must be in (0, 1)");
  MANGO_REQUIRE(threshold > 0.0, "threshold must be > 0");
  const std::size_t expected = kind == LayerKind::kDense
                                   ? static_cast<std::size_t>(inputs) * outputs
                                   : static_cast<std::size_t>(conv.weight_count());
  MANGO_REQUIRE(input_size() >= 1 && output_size() >= 1, "layer sizes must be >= 1");
  MANGO_REQUIRE(weights.size() == expected, "weight count does not match layer shape");
  MANGO_REQUIRE(membrane.size() == static_cast<std::size_t>(output_size()),
                "membrane size does not match layer shape");
  if (kind == LayerKind::kConv) {
    MANGO_REQUIRE(conv.kernel % 2 == 1, "convolution kernel must be odd");
  }
  RequireFinite(weights, "weights");
  RequireFinite(membrane, "membrane");
}

void LifLayer::ResetMembrane() { std::fill(membrane.begin(), membrane.end(), 0.0); }

void LifLayer::Drive(std::span<const double> x, std::span<double> drive, Exec exec) const {
  if (kind == LayerKind::kDense) {
    MatVec(weights, outputs, inputs, x, drive, exec);
  } else {
    Conv2d(conv, weights, x, drive, exec);
  }
}

std::vector<std::uint8_t> LifStep(LifLayer& layer, std::span<const double> x) {
  MANGO_REQUIRE(static_cast<int>(x.size()) == layer.input_size(),
                "input has " + std::to_string(x.size()) + " values, layer expects " +
                    std::to_string(layer.input_size()));
  RequireFinite(x, "input");
  std::vector<double> drive(static_cast<std::size_t>(layer.output_size()));
  layer.Drive(x, drive, Exec::kSerial);
  std::vector<std::uint8_t> spikes(drive.size());
  for (std::size_t i = 0; i < drive.size(); ++i) {
    double& u = layer.membrane[i];
    spikes[i] = u > layer.threshold;
    u = Integrate(u, drive[i], spikes[i] ? 1.0 : 0.0, layer.beta, layer.threshold);
  }
  return spikes;
}

void SpikingNetwork::Validate() const {
  MANGO_REQUIRE(input.height >= 1 && input.width >= 1 && input.channels >= 1,
                "input shape must be positive");
  MANGO_REQUIRE(!layers.empty(), "network has no layers");
  MANGO_REQUIRE(exposure >= 1, "exposure T must be >= 1");
  MANGO_REQUIRE(surrogate_alpha > 0.0, "surrogate alpha must be > 0");
  int size = input.size();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LifLayer& layer = layers[l];
    layer.Validate();
    MANGO_REQUIRE(layer.input_size() == size,
                  "layer " + std::to_string(l) + " expects " +
                      std::to_string(layer.input_size()) + " inputs, previous stage gives " +
                      std::to_string(size));
    if (layer.kind == LayerKind::kConv && l == 0) {
      MANGO_REQUIRE(layer.conv.height == input.height && layer.conv.width == input.width &&
                        layer.conv.in_channels == input.channels,
                    "convolution geometry does not match the input shape");
    }
    size = layer.output_size();
  }
  MANGO_REQUIRE(layers.back().kind == LayerKind::kDense, "output layer must be dense");
}

SpikingNetwork MakeNetwork(const NetworkSpec& spec, Rng& rng) {
  SpikingNetwork net;
  net.input = spec.input;
  net.exposure = spec.exposure;
  net.surrogate_alpha = spec.surrogate_alpha;
  int size = spec.input.size();
  if (spec.conv_channels > 0) {
    net.layers.push_back(LifLayer::Conv(ConvShape{spec.input.height, spec.input.width,
                                                  spec.input.channels, spec.conv_channels,
                                                  spec.conv_kernel}));
    size = net.layers.back().output_size();
  }
  for (int width : spec.hidden) {
    net.layers.push_back(LifLayer::Dense(size, width));
    size = width;
  }
  net.layers.push_back(LifLayer::Dense(size, spec.classes));
  for (LifLayer& layer : net.layers) {
    layer.beta = spec.beta;
    layer.threshold = spec.threshold;
    const int fan_in = layer.kind == LayerKind::kDense
                           ? layer.inputs
                           : layer.conv.kernel * layer.conv.kernel * layer.conv.in_channels;
    const double a = spec.init_gain * std::sqrt(3.0 / fan_in);
    for (double& w : layer.weights) w = a * (2.0 * UniformUnit(rng) - 1.0);
  }
  net.Validate();
  return net;
}

std::uint8_t SpikeTrace::spike(int layer, int frame, int unit) const {
  const auto& s = spikes.at(static_cast<std::size_t>(layer));
  const std::size_t units = counts[static_cast<std::size_t>(layer)].size();
  return s.at(static_cast<std::size_t>(frame) * units + static_cast<std::size_t>(unit));
}

SpikeTrace Forward(const SpikingNetwork& net, std::span<const double> stimulus, Exec exec) {
  SpikeTrace trace;
  Simulate(net, stimulus, false, exec, &trace, nullptr);
  return trace;
}

double Activation(const SpikingNetwork& net, const SpikeTrace& trace, int layer,
                  int neuron) {
  MANGO_REQUIRE(layer >= 0 && layer < static_cast<int>(net.layers.size()),
                "layer id " + std::to_string(layer) + " out of range");
  const LifLayer& l = net.layers[static_cast<std::size_t>(layer)];
  MANGO_REQUIRE(neuron >= 0 && neuron < l.neuron_count(),
                "neuron id " + std::to_string(neuron) + " out of range for layer " +
                    std::to_string(layer));
  const auto& counts = trace.counts.at(static_cast<std::size_t>(layer));
  long total = 0;
  for (int p = 0; p < l.positions(); ++p) total += counts[static_cast<std::size_t>(l.unit(neuron, p))];
  return static_cast<double>(total) / l.positions() / trace.frames;
}

double Activation(const SpikingNetwork& net, std::span<const double> stimulus, int layer,
                  int neuron) {
  return Activation(net, Forward(net, stimulus), layer, neuron);
}

double UnitActivation(const SpikingNetwork& net, const SpikeTrace& trace, int layer,
                      int unit) {
  MANGO_REQUIRE(layer >= 0 && layer < static_cast<int>(net.layers.size()),
                "layer id " + std::to_string(layer) + " out of range");
  MANGO_REQUIRE(unit >= 0 && unit < net.layers[static_cast<std::size_t>(layer)].output_size(),
                "unit id " + std::to_string(unit) + " out of range");
  return static_cast<double>(
             trace.counts[static_cast<std::size_t>(layer)][static_cast<std::size_t>(unit)]) /
         trace.frames;
}

double SmoothSpike(double u, double threshold, double alpha) {
  return std::atan(std::numbers::pi * alpha * (u - threshold)) / std::numbers::pi + 0.5;
}

double SurrogateGrad(double u, double threshold, double alpha) {
  MANGO_REQUIRE(alpha > 0.0, "surrogate alpha must be > 0");
  const double z = std::numbers::pi * alpha * (u - threshold);
  return alpha / (1.0 + z * z);
}

std::vector<double> Softmax(std::span<const double> logits) {
  MANGO_REQUIRE(!logits.empty(), "softmax of an empty vector");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> ClassProbabilities(const SpikeTrace& trace) {
  const std::vector<int>& counts = trace.counts.back();
  return Softmax(std::vector<double>(counts.begin(), counts.end()));
}

std::vector<double> ClassProbabilities(const SpikingNetwork& net,
                                       std::span<const double> stimulus) {
  return ClassProbabilities(Forward(net, stimulus));
}

LossGradient ComputeLossGradient(const SpikingNetwork& net, const Example& example,
                                 bool smooth) {
  CheckExample(net, example);
  std::vector<Tape> tape;
  const std::vector<double> counts =
      Simulate(net, example.pixels, smooth, Exec::kSerial, nullptr, &tape);
  const std::vector<double> probs = Softmax(counts);

  LossGradient result;
  result.loss = CrossEntropy(probs, example.label);
  result.weights.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    result.weights[l].assign(net.layers[l].weights.size(), 0.0);
  }

  const int frames = net.exposure;
  const double alpha = net.surrogate_alpha;
  // dL/d(emitted) for every frame of the current layer, from above.
  std::vector<double> upstream(static_cast<std::size_t>(frames) * counts.size());
  for (int t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < counts.size(); ++k) {
      upstream[static_cast<std::size_t>(t) * counts.size() + k] =
          probs[k] - (static_cast<int>(k) == example.label ? 1.0 : 0.0);
    }
  }

  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const LifLayer& layer = net.layers[l];
    const Tape& tp = tape[l];
    const auto units = static_cast<std::size_t>(layer.output_size());
    const auto in = static_cast<std::size_t>(layer.input_size());
    std::vector<double> below;
    if (l > 0) below.assign(static_cast<std::size_t>(frames) * in, 0.0);
    std::vector<double> g_next(units, 0.0);  // dL/dU one frame later
    std::vector<double> g(units);
    for (int t = frames; t-- > 0;) {
      const std::size_t row = static_cast<std::size_t>(t) * units;
      for (std::size_t i = 0; i < units; ++i) {
        // The emitted value also resets the next membrane by -threshold.
        const double d_out = upstream[row + i] - layer.threshold * g_next[i];
        g[i] = SurrogateGrad(tp.membrane[row + i], layer.threshold, alpha) * d_out +
               layer.beta * g_next[i];
      }
      std::span<const double> x =
          l == 0 ? std::span<const double>(example.pixels)
                 : std::span<const double>(tp.inputs).subspan(static_cast<std::size_t>(t) * in, in);
      AddWeightGrad(layer, g, x, result.weights[l]);
      if (l > 0) {
        AddInputGrad(layer, g, std::span<double>(below).subspan(static_cast<std::size_t>(t) * in, in));
      }
      g_next = g;
    }
    upstream = std::move(below);
  }
  return result;
}

double ExampleLoss(const SpikingNetwork& net, const Example& example, bool smooth) {
  CheckExample(net, example);
  const std::vector<double> counts =
      Simulate(net, example.pixels, smooth, Exec::kSerial, nullptr, nullptr);
  return CrossEntropy(Softmax(counts), example.label);
}

double TrainEpoch(SpikingNetwork& net, std::span<const Example> data,
                  const TrainOptions& options, Rng& rng) {
  MANGO_REQUIRE(!data.empty(), "training set is empty");
  MANGO_REQUIRE(options.batch_size >= 1, "batch size must be >= 1");
  MANGO_REQUIRE(options.learning_rate >= 0.0, "learning rate must be >= 0");
  for (const Example& e : data) CheckExample(net, e);

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(UniformInt(rng, static_cast<int>(i)))]);
  }

  double loss_sum = 0.0;
  std::vector<LossGradient> grads;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
    const int n = static_cast<int>(end - start);
    grads.assign(static_cast<std::size_t>(n), {});
    const SpikingNetwork& snapshot = net;
    if (options.exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
      for (int b = 0; b < n; ++b) {
        grads[static_cast<std::size_t>(b)] =
            ComputeLossGradient(snapshot, data[order[start + static_cast<std::size_t>(b)]]);
      }
    } else {
      for (int b = 0; b < n; ++b) {
        grads[static_cast<std::size_t>(b)] =
            ComputeLossGradient(snapshot, data[order[start + static_cast<std::size_t>(b)]]);
      }
    }
    const double scale = options.learning_rate / n;
    for (const LossGradient& g : grads) {
      loss_sum += g.loss;
      if (options.learning_rate == 0.0) continue;
      for (std::size_t l = 0; l < net.layers.size(); ++l) {
        std::vector<double>& w = net.layers[l].weights;
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= scale * g.weights[l][j];
      }
    }
  }
  const double mean = loss_sum / static_cast<double>(data.size());
  if (!std::isfinite(mean)) throw RuntimeError("training diverged: non-finite loss");
  return mean;
}

double MeanLoss(const SpikingNetwork& net, std::span<const Example> data) {
  MANGO_REQUIRE(!data.empty(), "data set is empty");
  double total = 0.0;
  for (const Example& e : data) total += ExampleLoss(net, e);
  return total / static_cast<double>(data.size());
}

double Accuracy(const SpikingNetwork& net, std::span<const Example> data) {
  MANGO_REQUIRE(!data.empty(), "data set is empty");
  int correct = 0;
  for (const Example& e : data) {
    CheckExample(net, e);
    const SpikeTrace trace = Forward(net, e.pixels);
    const std::vector<int>& counts = trace.counts.back();
    const auto best = std::max_element(counts.begin(), counts.end()) - counts.begin();
    correct += best == e.label;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void WriteNetwork(std::ostream& out, const SpikingNetwork& net) {
  net.Validate();
  binio::WriteMagic(out, kNetworkMagic);
  binio::Write<std::uint32_t>(out, kNetworkVersion);
  binio::Write<std::uint32_t>(out, static_cast<std::uint32_t>(net.input.height));
  binio::Write<std::uint32_t>(out, static_cast<std::uint32_t>(net.input.width));
  binio::Write<std::uint32_t>(out, static_cast<std::uint32_t>(net.input.channels));
  binio::Write<std::uint32_t>(out, static_cast<std::uint32_t>(net.exposure));
  binio::Write<double>(out, net.surrogate_alpha);
  binio::Write<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const LifLayer& layer : net.layers) {
    binio::Write<std::uint8_t>(out, static_cast<std::uint8_t>(layer.kind));
    if (layer.kind == LayerKind::kDense) {
      binio::Write<std::uint32_t>(out, static_cast<std::uint32_t>(layer.inputs));
      binio::Write<std::uint32_t>(out, static_cast<std::uint32_t>(layer.outputs));
    } else {
      for (int v : {layer.conv.height, layer.conv.width, layer.conv.in_channels,
                    layer.conv.out_channels, layer.conv.kernel}) {
        binio::Write<std::uint32_t>(out, static_cast<std::uint32_t>(v));
      }
    }
    binio::Write<double>(out, layer.beta);
    binio::Write<double>(out, layer.threshold);
    binio::Write<std::uint64_t>(out, layer.weights.size());
    for (double w : layer.weights) binio::Write<double>(out, w);
  }
  if (!out) throw RuntimeError("failed to write network checkpoint");
}

SpikingNetwork ReadNetwork(std::istream& in) {
  binio::ExpectMagic(in, kNetworkMagic);
  const auto version = binio::Read<std::uint32_t>(in);
  MANGO_REQUIRE(version == kNetworkVersion,
                "unsupported network checkpoint version " + std::to_string(version));
  SpikingNetwork net;
  net.input.height = static_cast<int>(binio::Read<std::uint32_t>(in));
  net.input.width = static_cast<int>(binio::Read<std::uint32_t>(in));
  net.input.channels = static_cast<int>(binio::Read<std::uint32_t>(in));
  net.exposure = static_cast<int>(binio::Read<std::uint32_t>(in));
  net.surrogate_alpha = binio::Read<double>(in);
  const auto depth = binio::Read<std::uint32_t>(in);
  MANGO_REQUIRE(depth >= 1 && depth <= 1024, "implausible layer count in checkpoint");
  for (std::uint32_t l = 0; l < depth; ++l) {
    const auto kind = binio::Read<std::uint8_t>(in);
    LifLayer layer;
    if (kind == static_cast<std::uint8_t>(LayerKind::kDense)) {
      const int inputs = static_cast<int>(binio::Read<std::uint32_t>(in));
      const int outputs = static_cast<int>(binio::Read<std::uint32_t>(in));
      layer = LifLayer::Dense(inputs, outputs);
    } else if (kind == static_cast<std::uint8_t>(LayerKind::kConv)) {
      ConvShape s;
      s.height = static_cast<int>(binio::Read<std::uint32_t>(in));
      s.width = static_cast<int>(binio::Read<std::uint32_t>(in));
      s.in_channels = static_cast<int>(binio::Read<std::uint32_t>(in));
      s.out_channels = static_cast<int>(binio::Read<std::uint32_t>(in));
      s.kernel = static_cast<int>(binio::Read<std::uint32_t>(in));
      layer = LifLayer::Conv(s);
    } else {
      throw InputError("unknown layer kind " + std::to_string(kind) + " in checkpoint");
    }
    layer.beta = binio::Read<double>(in);
    layer.threshold = binio::Read<double>(in);
    const auto count = binio::Read<std::uint64_t>(in);
    MANGO_REQUIRE(count == layer.weights.size(), "weight count does not match layer shape");
    for (double& w : layer.weights) w = binio::Read<double>(in);
    net.layers.push_back(std::move(layer));
  }
  net.Validate();
  return net;
}

void SaveNetwork(const std::string& path, const SpikingNetwork& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot open '" + path + "' for writing");
  WriteNetwork(out, net);
}

SpikingNetwork LoadNetwork(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open network checkpoint '" + path + "'");
  return ReadNetwork(in);
}

}  // namespace mango
