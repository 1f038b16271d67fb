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


#ifndef MANGO_HARNESS_H_
#define MANGO_HARNESS_H_

// Experiment orchestration: configuration, the generator -> network ->
// activation -> optimizer loop, MEI sweeps with resumable output, toy
// training with epoch snapshots and the report tables.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mango/analysis.h"
#include "mango/optimizer.h"
#include "mango/snn.h"
#include "mango/stimulus.h"
#include "mango/synthetic.h"
#include "mango/toy_dataset.h"

namespace mango {

inline constexpr const char* kCodeVersion = "mango 1.0.0";
inline constexpr int kManifestSchema = 1;
inline constexpr int kReportSchema = 1;

struct TargetSpec {
  int layer = 0;
  std::vector<int> neurons;  // empty: every neuron of the layer
};

struct TrainingSpec {
  NetworkSpec network;
  ToyDatasetSpec dataset;
  int epochs = 30;
  int snapshot_every = 5;
  TrainOptions options;
};

struct GeneratorSpec {
  std::string kind = "procedural";  // procedural | external
  LatentGrid grid{8, 16};
  std::vector<std::string> command;  // external only
  int timeout_ms = 30000;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "mango_out";
  // Where epoch_<n>.net snapshots are written and read. Default:
  // <output_dir>/checkpoints.
  std::filesystem::path checkpoint_dir;
  int workers = 1;
  TrainingSpec training;
  // Snapshots to sweep. Default: the first and the last snapshot.
  std::vector<int> epochs;
  GeneratorSpec generator;
  std::vector<Method> methods{Method::kProtes, Method::kProtesS, Method::kProtesB};
  std::int64_t budget = 2000;
  ProtesConfig protes;
  // Default: every neuron of every layer.
  std::vector<TargetSpec> targets;

  std::filesystem::path checkpoints() const;
  std::vector<int> SnapshotEpochs() const;
  std::vector<int> SweepEpochs() const;
  void Validate() const;
};

// JSON config; unknown keys are errors. See docs/config.md.
ExperimentConfig ParseConfig(const std::string& json_text);
ExperimentConfig LoadConfig(const std::filesystem::path& path);
// Resolved config as canonical JSON (sorted keys, defaults filled in).
std::string ConfigJson(const ExperimentConfig& config);

// Counts every decode and forward pass made on behalf of an objective.
struct EvaluationLedger {
  std::atomic<std::int64_t> decodes{0};
  std::atomic<std::int64_t> forwards{0};
};

// objective(index) = activation of (layer, neuron) on generator(index).
// The network and generator must outlive the adapter.
ObjectiveAdapter MakeObjective(const SpikingNetwork& net, Generator& generator, int layer,
                               int neuron, std::int64_t budget,
                               EvaluationLedger* ledger = nullptr);

// Single dense LIF neuron whose weights are gain * (template - 1/2), the
// template being the full-contrast vertical grating with the given
// frequency and phase digits.
SpikingNetwork GratingNeuronNetwork(const LatentGrid& grid, const Canvas& canvas,
                                    int frequency_digit, int phase_digit, double gain);

// Per-cell optimizer seed.
std::uint64_t CellSeed(std::uint64_t master, int layer, int neuron, Method method);

std::string EpochFileName(int epoch);  // epoch_<n>.net

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct TrainingResult {
  std::vector<int> snapshots;
  std::vector<EpochStats> epochs;  // one row per trained epoch
};

// Trains the toy network, writing epoch_<n>.net at epoch 0, every
// snapshot_every epochs and at the end, plus accuracy.csv.
TrainingResult RunTrainingWithSnapshots(const ExperimentConfig& config);

struct SweepCell {
  int epoch = 0;
  NeuronId neuron;
  Method method = Method::kProtes;
  std::string name() const;  // e<epoch>_l<layer>_n<neuron>_<method>
};

enum class CellStatus { kDone, kSkipped, kFailed };

struct CellOutcome {
  SweepCell cell;
  CellStatus status = CellStatus::kDone;
  std::string error;
  std::optional<MeiRecord> record;
};

struct SweepResult {
  std::vector<CellOutcome> cells;
  std::int64_t evaluations = 0;  // summed over the cells run now
  std::int64_t decodes = 0;
  std::int64_t forwards = 0;
  bool partial() const;
};

using GeneratorFactory = std::function<std::unique_ptr<Generator>(const Canvas&)>;

// Runs every (epoch, neuron, method) cell that is not already complete in
// the output directory. Cells whose generator fails are recorded as failed;
// the others proceed.
SweepResult RunMeiSweep(const ExperimentConfig& config,
                        const GeneratorFactory& factory = nullptr);

MeiRecord ReadMeiRecord(const std::filesystem::path& path);

struct ReportResult {
  std::vector<std::string> missing;  // cells without a record
  std::vector<std::filesystem::path> tables;
  bool partial() const { return !missing.empty(); }
};

// Writes the analysis tables into <output_dir>/report.
ReportResult RunReport(const ExperimentConfig& config);

struct BenchmarkRow {
  std::string objective;
  Method method = Method::kProtes;
  std::uint64_t seed = 0;
  double best_value = 0.0;
  double optimum = 0.0;
  bool found = false;
  std::int64_t evaluations_to_best = 0;
};

// Every method on every suite objective for seeds 0 .. seeds-1.
std::vector<BenchmarkRow> RunBenchmark(const std::vector<Method>& methods, int seeds,
                                       std::int64_t budget, const ProtesConfig& protes);

struct ConformanceReport {
  bool handshake = false;
  std::int64_t requests = 0;
  std::int64_t responses = 0;
  std::int64_t clamped_pixels = 0;
  double mean_latency_ms = 0.0;
  std::string error;
  bool ok() const { return handshake && error.empty() && responses == requests; }
};

// Handshake plus `requests` random decodes against an external generator.
ConformanceReport CheckGeneratorConformance(const GeneratorSpec& spec, const Canvas& canvas,
                                            std::int64_t requests, std::uint64_t seed);

}  // namespace mango

#endif  // MANGO_HARNESS_H_
