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


#ifndef MANGO_SNN_H_
#define MANGO_SNN_H_

// Discrete-time leaky integrate-and-fire network with rate (repeated
// frame) input, per-neuron activation readout and surrogate-gradient
// training.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mango/exec.h"
#include "mango/kernels.h"
#include "mango/random.h"

namespace mango {

enum class LayerKind : std::uint8_t { kDense = 0, kConv = 1 };

struct LifLayer {
  LayerKind kind = LayerKind::kDense;
  int inputs = 0;   // dense only
  int outputs = 0;  // dense only
  ConvShape conv;   // conv only
  // Dense: outputs x inputs, row-major. Conv: see ConvShape.
  std::vector<double> weights;
  double beta = 0.9;
  double threshold = 1.0;
  std::vector<double> membrane;

  static LifLayer Dense(int inputs, int outputs);
  static LifLayer Conv(const ConvShape& shape);

  int input_size() const;
  int output_size() const;
  // Addressable neurons: units for a dense layer, feature channels for a
  // convolutional one.
  int neuron_count() const;
  // Units that make up one neuron (spatial positions of a channel).
  int positions() const;
  // Unit index of `neuron` at spatial position `p` (channel-last layout).
  int unit(int neuron, int p) const;

  void Validate() const;
  void ResetMembrane();
  // drive = W x
  void Drive(std::span<const double> x, std::span<double> drive, Exec exec) const;
};

// One update of the membrane. Returns S, computed from the membrane before
// the update (U > threshold); then U <- beta U + W x - S threshold.
std::vector<std::uint8_t> LifStep(LifLayer& layer, std::span<const double> x);

struct InputShape {
  int height = 0;
  int width = 0;
  int channels = 1;

  int size() const { return height * width * channels; }
  bool operator==(const InputShape&) const = default;
};

struct SpikingNetwork {
  InputShape input;
  std::vector<LifLayer> layers;
  int exposure = 50;  // T
  double surrogate_alpha = 2.0;

  void Validate() const;
  int class_count() const { return layers.back().output_size(); }
};

struct NetworkSpec {
  InputShape input{8, 8, 1};
  int conv_channels = 0;  // 0: no convolutional front layer
  int conv_kernel = 3;
  std::vector<int> hidden{32};
  int classes = 4;
  double beta = 0.9;
  double threshold = 1.0;
  double surrogate_alpha = 2.0;
  int exposure = 50;
  // Weights ~ U(-a, a) with a = init_gain * sqrt(3 / fan_in).
  double init_gain = 0.3;
};

SpikingNetwork MakeNetwork(const NetworkSpec& spec, Rng& rng);

// Per-frame emitted spikes of every layer. Frame t records whether the
// membrane after the t-th update exceeds the threshold, i.e. the spike that
// the layer passes on during that frame.
struct SpikeTrace {
  int frames = 0;
  std::vector<std::vector<std::uint8_t>> spikes;  // [layer][frame * units + unit]
  std::vector<std::vector<int>> counts;           // [layer][unit]

  std::uint8_t spike(int layer, int frame, int unit) const;
};

// Presents the stimulus for T frames starting from zero membranes.
// The network itself is not modified.
SpikeTrace Forward(const SpikingNetwork& net, std::span<const double> stimulus,
                   Exec exec = Exec::kSerial);

// Spike count / T of neuron `neuron` in layer `layer`, averaged over the
// spatial positions of a convolutional channel.
double Activation(const SpikingNetwork& net, const SpikeTrace& trace, int layer,
                  int neuron);
double Activation(const SpikingNetwork& net, std::span<const double> stimulus,
                  int layer, int neuron);
// Single unit, no channel averaging.
double UnitActivation(const SpikingNetwork& net, const SpikeTrace& trace,
                      int layer, int unit);

// S~(u) = atan(pi alpha (u - thr)) / pi + 1/2 and its derivative.
double SmoothSpike(double u, double threshold, double alpha);
double SurrogateGrad(double u, double threshold, double alpha);

std::vector<double> Softmax(std::span<const double> logits);
// Softmax over the output layer's spike counts.
std::vector<double> ClassProbabilities(const SpikingNetwork& net,
                                       std::span<const double> stimulus);
std::vector<double> ClassProbabilities(const SpikeTrace& trace);

struct Example {
  std::vector<double> pixels;
  int label = 0;
};

// Gradient of the cross-entropy loss for one example. In smooth mode the
// forward pass itself uses S~ in place of the hard threshold; this is the
// function the surrogate gradient is exact for.
struct LossGradient {
  double loss = 0.0;
  std::vector<std::vector<double>> weights;  // per layer, same layout as W
};
LossGradient ComputeLossGradient(const SpikingNetwork& net, const Example& example,
                                 bool smooth = false);
double ExampleLoss(const SpikingNetwork& net, const Example& example,
                   bool smooth = false);

struct TrainOptions {
  double learning_rate = 0.05;
  int batch_size = 10;
  Exec exec = Exec::kParallel;
};

// One shuffled pass of minibatch SGD. Returns the mean loss over the
// examples as seen during the pass.
double TrainEpoch(SpikingNetwork& net, std::span<const Example> data,
                  const TrainOptions& options, Rng& rng);

double MeanLoss(const SpikingNetwork& net, std::span<const Example> data);
// Fraction of examples whose most probable class (lowest index on ties)
// equals the label.
double Accuracy(const SpikingNetwork& net, std::span<const Example> data);

void WriteNetwork(std::ostream& out, const SpikingNetwork& net);
SpikingNetwork ReadNetwork(std::istream& in);
void SaveNetwork(const std::string& path, const SpikingNetwork& net);
SpikingNetwork LoadNetwork(const std::string& path);

}  // namespace mango

#endif  // MANGO_SNN_H_
