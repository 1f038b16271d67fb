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


#include "mango/harness.h"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mango/error.h"
#include "mango/external_generator.h"

namespace mango {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Throws on keys outside `allowed`.
void CheckKeys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  MANGO_REQUIRE(j.is_object(), where + " must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    MANGO_REQUIRE(known, "unknown config key " + where + "." + item.key());
  }
}

template <typename T>
void Read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError("config key " + where + "." + key + " has the wrong type");
  }
}

NetworkSpec ParseNetwork(const json& j) {
  CheckKeys(j, "training.network",
            {"input", "conv_channels", "conv_kernel", "hidden", "classes", "beta", "threshold",
             "surrogate_alpha", "exposure", "init_gain"});
  NetworkSpec s;
  const std::string w = "training.network";
  if (j.contains("input")) {
    std::vector<int> in;
    Read(j, "input", in, w);
    MANGO_REQUIRE(in.size() == 3, "training.network.input must be [height, width, channels]");
    s.input = {in[0], in[1], in[2]};
  }
  Read(j, "conv_channels", s.conv_channels, w);
  Read(j, "conv_kernel", s.conv_kernel, w);
  Read(j, "hidden", s.hidden, w);
  Read(j, "classes", s.classes, w);
  Read(j, "beta", s.beta, w);
  Read(j, "threshold", s.threshold, w);
  Read(j, "surrogate_alpha", s.surrogate_alpha, w);
  Read(j, "exposure", s.exposure, w);
  Read(j, "init_gain", s.init_gain, w);
  return s;
}

json NetworkJson(const NetworkSpec& s) {
  return {{"input", {s.input.height, s.input.width, s.input.channels}},
          {"conv_channels", s.conv_channels},
          {"conv_kernel", s.conv_kernel},
          {"hidden", s.hidden},
          {"classes", s.classes},
          {"beta", s.beta},
          {"threshold", s.threshold},
          {"surrogate_alpha", s.surrogate_alpha},
          {"exposure", s.exposure},
          {"init_gain", s.init_gain}};
}

ProtesConfig ParseProtes(const json& j) {
  CheckKeys(j, "protes",
            {"batch_size", "elite_count", "learning_rate", "grad_steps", "rank", "quantization",
             "weighting", "energy", "temperature", "init_jitter", "core_floor"});
  ProtesConfig c;
  const std::string w = "protes";
  Read(j, "batch_size", c.batch_size, w);
  Read(j, "elite_count", c.elite_count, w);
  Read(j, "learning_rate", c.learning_rate, w);
  Read(j, "grad_steps", c.grad_steps, w);
  Read(j, "rank", c.rank, w);
  Read(j, "quantization", c.quantization, w);
  Read(j, "energy", c.energy, w);
  Read(j, "init_jitter", c.init_jitter, w);
  Read(j, "core_floor", c.core_floor, w);
  if (j.contains("temperature") && !j.at("temperature").is_null()) {
    double t = 0.0;
    Read(j, "temperature", t, w);
    c.temperature = t;
  }
  if (j.contains("weighting")) {
    std::string name;
    Read(j, "weighting", name, w);
    if (name == "elite") {
      c.weighting = Weighting::kElite;
    } else if (name == "fermi_dirac") {
      c.weighting = Weighting::kFermiDirac;
    } else {
      throw InputError("protes.weighting must be elite or fermi_dirac");
    }
  }
  return c;
}

json ProtesJson(const ProtesConfig& c) {
  return {{"batch_size", c.batch_size},
          {"elite_count", c.elite_count},
          {"learning_rate", c.learning_rate},
          {"grad_steps", c.grad_steps},
          {"rank", c.rank},
          {"quantization", c.quantization},
          {"weighting", c.weighting == Weighting::kElite ? "elite" : "fermi_dirac"},
          {"energy", c.energy},
          {"temperature", c.temperature ? json(*c.temperature) : json(nullptr)},
          {"init_jitter", c.init_jitter},
          {"core_floor", c.core_floor}};
}

// Config without the fields that only say where and how fast to run.
json ContentJson(const ExperimentConfig& config) {
  json j = json::parse(ConfigJson(config));
  j.erase("output_dir");
  j.erase("checkpoint_dir");
  j.erase("workers");
  return j;
}

void WriteText(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + tmp.string());
    out << text;
    if (!out) throw RuntimeError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json ParseJsonFile(const fs::path& path) {
  try {
    return json::parse(ReadText(path));
  } catch (const json::exception& e) {
    throw InputError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

std::string Sha256Hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw RuntimeError("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string Fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json RecordJson(const MeiRecord& r) {
  return {{"layer", r.neuron.layer},
          {"neuron", r.neuron.neuron},
          {"method", r.method},
          {"epoch", r.epoch},
          {"latent", r.latent},
          {"coordinates", r.coordinates},
          {"activation", r.activation},
          {"class_probs", r.class_probs},
          {"evaluations", r.evaluations}};
}

std::unique_ptr<Generator> DefaultGenerator(const GeneratorSpec& spec, const Canvas& canvas) {
  if (spec.kind == "procedural") return std::make_unique<ProceduralGenerator>(spec.grid, canvas);
  return std::make_unique<ExternalGenerator>(spec.command, spec.grid, canvas,
                                             std::chrono::milliseconds(spec.timeout_ms));
}

Canvas CanvasOf(const InputShape& s) { return {s.height, s.width, s.channels}; }

std::vector<NeuronId> ResolveTargets(const ExperimentConfig& config, const SpikingNetwork& net) {
  std::vector<NeuronId> out;
  const auto layer_all = [&](int layer) {
    for (int n = 0; n < net.layers[layer].neuron_count(); ++n) out.push_back({layer, n});
  };
  if (config.targets.empty()) {
    for (int l = 0; l < static_cast<int>(net.layers.size()); ++l) layer_all(l);
    return out;
  }
  for (const TargetSpec& t : config.targets) {
    MANGO_REQUIRE(t.layer >= 0 && t.layer < static_cast<int>(net.layers.size()),
                  "target layer " + std::to_string(t.layer) + " does not exist");
    if (t.neurons.empty()) {
      layer_all(t.layer);
      continue;
    }
    for (int n : t.neurons) {
      MANGO_REQUIRE(n >= 0 && n < net.layers[t.layer].neuron_count(),
                    "target neuron " + std::to_string(n) + " does not exist in layer " +
                        std::to_string(t.layer));
      out.push_back({t.layer, n});
    }
  }
  return out;
}

const char* StatusName(CellStatus s) {
  switch (s) {
    case CellStatus::kDone: return "done";
    case CellStatus::kSkipped: return "done";
    case CellStatus::kFailed: return "failed";
  }
  return "pending";
}

std::vector<std::string> FileInventory(const fs::path& root, const fs::path& dir) {
  std::vector<std::string> files;
  if (!fs::exists(dir)) return files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() != ".tmp")
      files.push_back(fs::relative(e.path(), root).generic_string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

fs::path ExperimentConfig::checkpoints() const {
  return checkpoint_dir.empty() ? output_dir / "checkpoints" : checkpoint_dir;
}

std::vector<int> ExperimentConfig::SnapshotEpochs() const {
  std::vector<int> out{0};
  for (int e = training.snapshot_every; e < training.epochs; e += training.snapshot_every)
    out.push_back(e);
  if (training.epochs > 0) out.push_back(training.epochs);
  return out;
}

std::vector<int> ExperimentConfig::SweepEpochs() const {
  if (!epochs.empty()) return epochs;
  if (training.epochs == 0) return {0};
  return {0, training.epochs};
}

void ExperimentConfig::Validate() const {
  MANGO_REQUIRE(workers >= 1, "workers must be at least 1");
  MANGO_REQUIRE(budget >= 1, "budget must be positive");
  MANGO_REQUIRE(training.epochs >= 0, "training.epochs must be nonnegative");
  MANGO_REQUIRE(training.snapshot_every >= 1, "training.snapshot_every must be positive");
  MANGO_REQUIRE(training.options.learning_rate > 0.0, "training.learning_rate must be positive");
  MANGO_REQUIRE(training.options.batch_size >= 1, "training.batch_size must be positive");
  MANGO_REQUIRE(!methods.empty(), "no optimizer methods");
  for (int e : epochs) MANGO_REQUIRE(e >= 0, "negative sweep epoch");
  generator.grid.Validate();
  MANGO_REQUIRE(generator.kind == "procedural" || generator.kind == "external",
                "generator.kind must be procedural or external");
  if (generator.kind == "external")
    MANGO_REQUIRE(!generator.command.empty(), "external generator needs a command");
  MANGO_REQUIRE(generator.timeout_ms > 0, "generator.timeout_ms must be positive");
  protes.Validate();
}

ExperimentConfig ParseConfig(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed config: ") + e.what());
  }
  CheckKeys(j, "config",
            {"seed", "output_dir", "checkpoint_dir", "workers", "training", "epochs",
             "generator", "methods", "budget", "protes", "targets"});
  ExperimentConfig c;
  const std::string w = "config";
  Read(j, "seed", c.seed, w);
  std::string dir;
  Read(j, "output_dir", dir, w);
  if (!dir.empty()) c.output_dir = dir;
  dir.clear();
  Read(j, "checkpoint_dir", dir, w);
  if (!dir.empty()) c.checkpoint_dir = dir;
  Read(j, "workers", c.workers, w);
  Read(j, "epochs", c.epochs, w);
  Read(j, "budget", c.budget, w);
  if (j.contains("training")) {
    const json& t = j.at("training");
    CheckKeys(t, "training",
              {"epochs", "snapshot_every", "learning_rate", "batch_size", "network", "dataset"});
    Read(t, "epochs", c.training.epochs, "training");
    Read(t, "snapshot_every", c.training.snapshot_every, "training");
    Read(t, "learning_rate", c.training.options.learning_rate, "training");
    Read(t, "batch_size", c.training.options.batch_size, "training");
    if (t.contains("network")) c.training.network = ParseNetwork(t.at("network"));
    if (t.contains("dataset")) {
      const json& d = t.at("dataset");
      CheckKeys(d, "training.dataset", {"samples", "held_out_fraction", "noise", "seed"});
      Read(d, "samples", c.training.dataset.samples, "training.dataset");
      Read(d, "held_out_fraction", c.training.dataset.held_out_fraction, "training.dataset");
      Read(d, "noise", c.training.dataset.noise, "training.dataset");
      Read(d, "seed", c.training.dataset.seed, "training.dataset");
    }
  }
  if (j.contains("generator")) {
    const json& g = j.at("generator");
    CheckKeys(g, "generator", {"kind", "dimension", "points", "command", "timeout_ms"});
    Read(g, "kind", c.generator.kind, "generator");
    Read(g, "dimension", c.generator.grid.dimension, "generator");
    Read(g, "points", c.generator.grid.points, "generator");
    Read(g, "command", c.generator.command, "generator");
    Read(g, "timeout_ms", c.generator.timeout_ms, "generator");
  }
  if (j.contains("methods")) {
    std::vector<std::string> names;
    Read(j, "methods", names, w);
    c.methods.clear();
    for (const std::string& n : names) c.methods.push_back(ParseMethod(n));
  }
  if (j.contains("protes")) c.protes = ParseProtes(j.at("protes"));
  if (j.contains("targets")) {
    const json& ts = j.at("targets");
    MANGO_REQUIRE(ts.is_array(), "targets must be an array");
    for (const json& t : ts) {
      CheckKeys(t, "targets[]", {"layer", "neurons"});
      TargetSpec spec;
      Read(t, "layer", spec.layer, "targets[]");
      if (t.contains("neurons") && !(t.at("neurons").is_string() && t.at("neurons") == "all"))
        Read(t, "neurons", spec.neurons, "targets[]");
      c.targets.push_back(spec);
    }
  }
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const fs::path& path) { return ParseConfig(ReadText(path)); }

std::string ConfigJson(const ExperimentConfig& c) {
  json targets = json::array();
  for (const TargetSpec& t : c.targets)
    targets.push_back({{"layer", t.layer},
                       {"neurons", t.neurons.empty() ? json("all") : json(t.neurons)}});
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.push_back(MethodName(m));
  const ToyDatasetSpec& d = c.training.dataset;
  json j = {
      {"seed", c.seed},
      {"output_dir", c.output_dir.generic_string()},
      {"checkpoint_dir", c.checkpoints().generic_string()},
      {"workers", c.workers},
      {"training",
       {{"epochs", c.training.epochs},
        {"snapshot_every", c.training.snapshot_every},
        {"learning_rate", c.training.options.learning_rate},
        {"batch_size", c.training.options.batch_size},
        {"network", NetworkJson(c.training.network)},
        {"dataset",
         {{"samples", d.samples},
          {"held_out_fraction", d.held_out_fraction},
          {"noise", d.noise},
          {"seed", d.seed}}}}},
      {"epochs", c.SweepEpochs()},
      {"generator",
       {{"kind", c.generator.kind},
        {"dimension", c.generator.grid.dimension},
        {"points", c.generator.grid.points},
        {"command", c.generator.command},
        {"timeout_ms", c.generator.timeout_ms}}},
      {"methods", methods},
      {"budget", c.budget},
      {"protes", ProtesJson(c.protes)},
      {"targets", targets}};
  return j.dump(2);
}

ObjectiveAdapter MakeObjective(const SpikingNetwork& net, Generator& generator, int layer,
                               int neuron, std::int64_t budget, EvaluationLedger* ledger) {
  net.Validate();
  MANGO_REQUIRE(layer >= 0 && layer < static_cast<int>(net.layers.size()),
                "layer " + std::to_string(layer) + " does not exist");
  MANGO_REQUIRE(neuron >= 0 && neuron < net.layers[layer].neuron_count(),
                "neuron " + std::to_string(neuron) + " does not exist in layer " +
                    std::to_string(layer));
  MANGO_REQUIRE(generator.canvas() == CanvasOf(net.input),
                "generator canvas does not match the network input");
  ObjectiveAdapter a;
  a.shape = generator.grid().shape();
  a.budget = budget;
  a.concurrent = generator.concurrent();
  a.target = [&net, &generator, layer, neuron, ledger](std::span<const int> index) {
    const Stimulus s = generator.Decode(LatentIndex(index.begin(), index.end()));
    if (ledger) ++ledger->decodes;
    const SpikeTrace trace = Forward(net, s.pixels);
    if (ledger) ++ledger->forwards;
    return Activation(net, trace, layer, neuron);
  };
  return a;
}

SpikingNetwork GratingNeuronNetwork(const LatentGrid& grid, const Canvas& canvas,
                                    int frequency_digit, int phase_digit, double gain) {
  grid.Validate();
  MANGO_REQUIRE(grid.dimension >= kContrast + 1,
                "grating neuron needs orientation, frequency, phase and contrast dimensions");
  LatentIndex index = grid.MidIndex();
  index[kOrientation] = 0;
  index[kFrequency] = frequency_digit;
  index[kPhase] = phase_digit;
  index[kContrast] = grid.points - 1;
  grid.CheckIndex(index);
  const Stimulus t = DecodeProcedural(grid, index, canvas);
  SpikingNetwork net;
  net.input = {canvas.height, canvas.width, canvas.channels};
  net.layers.push_back(LifLayer::Dense(canvas.size(), 1));
  for (int i = 0; i < canvas.size(); ++i) net.layers[0].weights[i] = gain * (t.pixels[i] - 0.5);
  net.Validate();
  return net;
}

std::uint64_t CellSeed(std::uint64_t master, int layer, int neuron, Method method) {
  return DeriveSeed({master, static_cast<std::uint64_t>(layer), static_cast<std::uint64_t>(neuron),
                     static_cast<std::uint64_t>(method)});
}

std::string EpochFileName(int epoch) { return "epoch_" + std::to_string(epoch) + ".net"; }

TrainingResult RunTrainingWithSnapshots(const ExperimentConfig& config) {
  config.Validate();
  const NetworkSpec& spec = config.training.network;
  MANGO_REQUIRE(spec.input == (InputShape{kToySide, kToySide, 1}) && spec.classes == kToyClasses,
                "the toy task needs an 8x8x1 input and 4 classes");
  const ToyDataset data = MakeToyDataset(config.training.dataset);
  Rng rng(DeriveSeed({config.seed, 0x747261696eULL}));
  SpikingNetwork net = MakeNetwork(spec, rng);
  const fs::path dir = config.checkpoints();
  fs::create_directories(dir);

  TrainingResult result;
  result.snapshots = config.SnapshotEpochs();
  const auto snapshot = [&](int epoch) {
    if (std::find(result.snapshots.begin(), result.snapshots.end(), epoch) ==
        result.snapshots.end())
      return;
    const fs::path path = dir / EpochFileName(epoch);
    SaveNetwork(path.string() + ".tmp", net);
    fs::rename(path.string() + ".tmp", path);
  };
  snapshot(0);
  std::string csv = "epoch,train_loss,train_accuracy,test_accuracy\n";
  for (int e = 1; e <= config.training.epochs; ++e) {
    EpochStats s;
    s.epoch = e;
    s.train_loss = TrainEpoch(net, data.train, config.training.options, rng);
    s.train_accuracy = Accuracy(net, data.train);
    s.test_accuracy = Accuracy(net, data.test);
    result.epochs.push_back(s);
    csv += std::to_string(e) + "," + Fmt(s.train_loss) + "," + Fmt(s.train_accuracy) + "," +
           Fmt(s.test_accuracy) + "\n";
    snapshot(e);
  }
  WriteText(dir / "accuracy.csv", csv);
  return result;
}

std::string SweepCell::name() const {
  return "e" + std::to_string(epoch) + "_l" + std::to_string(neuron.layer) + "_n" +
         std::to_string(neuron.neuron) + "_" + MethodName(method);
}

bool SweepResult::partial() const {
  return std::any_of(cells.begin(), cells.end(),
                     [](const CellOutcome& c) { return c.status == CellStatus::kFailed; });
}

MeiRecord ReadMeiRecord(const fs::path& path) {
  const json j = ParseJsonFile(path);
  MeiRecord r;
  try {
    r.neuron = {j.at("layer").get<int>(), j.at("neuron").get<int>()};
    r.method = j.at("method").get<std::string>();
    r.epoch = j.at("epoch").get<int>();
    r.latent = j.at("latent").get<LatentIndex>();
    r.coordinates = j.at("coordinates").get<std::vector<double>>();
    r.activation = j.at("activation").get<double>();
    r.class_probs = j.at("class_probs").get<std::vector<double>>();
    r.evaluations = j.at("evaluations").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw InputError("malformed record " + path.string() + ": " + e.what());
  }
  return r;
}

SweepResult RunMeiSweep(const ExperimentConfig& config, const GeneratorFactory& factory) {
  config.Validate();
  const fs::path out = config.output_dir;
  const fs::path cells_dir = out / "cells";
  const std::vector<int> epochs = config.SweepEpochs();

  std::map<int, SpikingNetwork> nets;
  for (int e : epochs) {
    const fs::path path = config.checkpoints() / EpochFileName(e);
    MANGO_REQUIRE(fs::exists(path), "missing checkpoint " + path.string());
    nets.emplace(e, LoadNetwork(path.string()));
  }
  const SpikingNetwork& first = nets.begin()->second;
  const std::vector<NeuronId> targets = ResolveTargets(config, first);
  for (const auto& [e, net] : nets)
    MANGO_REQUIRE(net.layers.size() == first.layers.size() && net.input == first.input,
                  "checkpoints disagree on the network layout");
  const Canvas canvas = CanvasOf(first.input);

  std::vector<SweepCell> cells;
  for (int e : epochs)
    for (const NeuronId& n : targets)
      for (Method m : config.methods) cells.push_back({e, n, m});

  const json content = ContentJson(config);
  const fs::path manifest_path = out / "manifest.json";
  if (fs::exists(manifest_path)) {
    const json old = ParseJsonFile(manifest_path);
    MANGO_REQUIRE(old.contains("config") && old.at("config") == content,
                  "output directory " + out.string() + " holds a sweep with a different config");
  }
  fs::create_directories(cells_dir);

  SweepResult result;
  result.cells.resize(cells.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    result.cells[i].cell = cells[i];
    const fs::path record = cells_dir / cells[i].name() / "record.json";
    if (fs::exists(record)) {
      result.cells[i].status = CellStatus::kSkipped;
      result.cells[i].record = ReadMeiRecord(record);
    } else {
      pending.push_back(i);
    }
  }

  const auto write_manifest = [&](const std::string& status, bool final) {
    json jc = json::array();
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const CellOutcome& o = result.cells[i];
      const bool ran = o.status == CellStatus::kSkipped || o.record || !o.error.empty();
      json c = {{"name", cells[i].name()},
                {"epoch", cells[i].epoch},
                {"layer", cells[i].neuron.layer},
                {"neuron", cells[i].neuron.neuron},
                {"method", MethodName(cells[i].method)},
                {"seed", CellSeed(config.seed, cells[i].neuron.layer, cells[i].neuron.neuron,
                                  cells[i].method)},
                {"status", final || ran ? StatusName(o.status) : "pending"}};
      if (!o.error.empty()) c["error"] = o.error;
      jc.push_back(c);
    }
    json files = json::array();
    if (final) {
      for (const std::string& rel : FileInventory(out, cells_dir)) {
        const std::string bytes = ReadText(out / rel);
        files.push_back({{"path", rel}, {"bytes", bytes.size()}, {"sha256", Sha256Hex(bytes)}});
      }
      files.push_back({{"path", "timings.json"}});
    }
    const json m = {{"schema", kManifestSchema},
                    {"code_version", kCodeVersion},
                    {"status", status},
                    {"config", content},
                    {"cells", jc},
                    {"files", files}};
    WriteText(manifest_path, m.dump(2) + "\n");
  };
  write_manifest("running", false);

  std::atomic<std::int64_t> evaluations{0};
  EvaluationLedger ledger;
  std::vector<double> seconds(cells.size(), 0.0);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr fatal;

  const auto run_cell = [&](std::size_t i) {
    const SweepCell& cell = cells[i];
    CellOutcome& outcome = result.cells[i];
    const SpikingNetwork& net = nets.at(cell.epoch);
    const auto start = std::chrono::steady_clock::now();
    try {
      std::unique_ptr<Generator> gen =
          factory ? factory(canvas) : DefaultGenerator(config.generator, canvas);
      MANGO_REQUIRE(gen->grid().dimension == config.generator.grid.dimension &&
                        gen->grid().points == config.generator.grid.points,
                    "generator grid does not match the config");
      const ObjectiveAdapter adapter =
          MakeObjective(net, *gen, cell.neuron.layer, cell.neuron.neuron, config.budget, &ledger);
      ProtesConfig pc = config.protes;
      pc.seed = CellSeed(config.seed, cell.neuron.layer, cell.neuron.neuron, cell.method);
      pc.exec = config.workers > 1 ? Exec::kSerial : Exec::kParallel;
      const OptimizationRecord rec = Optimize(cell.method, adapter, pc);
      evaluations += rec.evaluations_used;

      // Post-hoc decode of the winner; not charged to the budget.
      const Stimulus mei = gen->Decode(rec.best_index);
      const SpikeTrace trace = Forward(net, mei.pixels);
      MeiRecord r;
      r.neuron = cell.neuron;
      r.method = MethodName(cell.method);
      r.epoch = cell.epoch;
      r.latent = rec.best_index;
      r.coordinates = gen->grid().Coordinates(rec.best_index);
      r.activation = Activation(net, trace, cell.neuron.layer, cell.neuron.neuron);
      r.class_probs = ClassProbabilities(trace);
      r.evaluations = rec.evaluations_used;

      const fs::path dir = cells_dir / cell.name();
      fs::create_directories(dir);
      std::ostringstream history;
      WriteHistoryCsv(history, rec);
      WriteText(dir / "history.csv", history.str());
      WritePpm((dir / "mei.ppm").string(), mei);
      WriteRawImage((dir / "mei.f64").string(), mei);
      WriteText(dir / "record.json", RecordJson(r).dump(2) + "\n");
      outcome.record = r;
      outcome.status = CellStatus::kDone;
    } catch (const GeneratorError& e) {
      outcome.status = CellStatus::kFailed;
      outcome.error = e.what();
      std::clog << "mango: cell " << cell.name() << " failed: " << e.what() << "\n";
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!fatal) fatal = std::current_exception();
    }
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  const auto worker = [&] {
    for (;;) {
      const std::size_t k = next++;
      if (k >= pending.size()) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (fatal) return;
      }
      run_cell(pending[k]);
    }
  };

  const auto start = std::chrono::steady_clock::now();
  const int threads = std::min<int>(config.workers, static_cast<int>(pending.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  result.evaluations = evaluations;
  result.decodes = ledger.decodes;
  result.forwards = ledger.forwards;
  write_manifest(result.partial() ? "partial" : "complete", true);

  json timings = {{"workers", config.workers},
                  {"total_seconds", total},
                  {"cells_run", pending.size()},
                  {"cells_skipped", cells.size() - pending.size()}};
  json per_cell = json::object();
  for (std::size_t i : pending) per_cell[cells[i].name()] = seconds[i];
  timings["cells"] = per_cell;
  WriteText(out / "timings.json", timings.dump(2) + "\n");
  return result;
}

namespace {

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// best_so_far column of a history table.
std::vector<double> ReadBestSoFar(const fs::path& path) {
  std::istringstream in(ReadText(path));
  std::string line;
  std::getline(in, line);
  std::vector<double> best;
  while (std::getline(in, line)) {
    const std::size_t comma = line.rfind(',');
    MANGO_REQUIRE(comma != std::string::npos, "malformed history " + path.string());
    best.push_back(std::stod(line.substr(comma + 1)));
  }
  return best;
}

std::vector<std::int64_t> ConvergenceCounts(std::int64_t budget) {
  std::vector<std::int64_t> counts;
  for (std::int64_t scale = 1; scale <= budget; scale *= 10)
    for (std::int64_t m : {1, 2, 5})
      if (m * scale <= budget) counts.push_back(m * scale);
  if (counts.empty() || counts.back() != budget) counts.push_back(budget);
  return counts;
}

std::string BinEdge(int b, int bins) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", static_cast<double>(b) / bins);
  return buf;
}

}  // namespace

ReportResult RunReport(const ExperimentConfig& config) {
  const fs::path out = config.output_dir;
  const fs::path manifest_path = out / "manifest.json";
  MANGO_REQUIRE(fs::exists(manifest_path), "no sweep manifest in " + out.string());
  const json manifest = ParseJsonFile(manifest_path);
  const fs::path report_dir = out / "report";
  fs::create_directories(report_dir);

  ReportResult result;
  struct Found {
    std::string name;
    MeiRecord record;
  };
  std::vector<Found> found;
  std::int64_t budget = 0;
  try {
    budget = manifest.at("config").at("budget").get<std::int64_t>();
    for (const json& c : manifest.at("cells")) {
      const std::string name = c.at("name").get<std::string>();
      const fs::path record = out / "cells" / name / "record.json";
      if (fs::exists(record)) {
        found.push_back({name, ReadMeiRecord(record)});
      } else {
        result.missing.push_back(name);
        std::clog << "mango: warning: no record for cell " << name << "\n";
      }
    }
  } catch (const json::exception& e) {
    throw InputError("malformed manifest: " + std::string(e.what()));
  }

  const auto write = [&](const std::string& name, const std::string& text) {
    WriteText(report_dir / name, text);
    result.tables.push_back(report_dir / name);
  };

  // Verdicts per (epoch, neuron).
  std::map<std::pair<int, NeuronId>, std::vector<MeiRecord>> groups;
  for (const Found& f : found) groups[{f.record.epoch, f.record.neuron}].push_back(f.record);
  std::vector<SelectivityVerdict> verdicts;
  std::string csv = "epoch,layer,neuron,selective,class,stability,confidence,activation\n";
  for (const auto& [key, records] : groups) {
    const SelectivityVerdict v = Verdict(records);
    verdicts.push_back(v);
    csv += std::to_string(v.epoch) + "," + std::to_string(v.neuron.layer) + "," +
           std::to_string(v.neuron.neuron) + "," + (v.selective ? "1" : "0") + "," +
           (v.cls ? std::to_string(*v.cls) : "") + "," + (v.stability ? "1" : "0") + "," +
           (v.confidence ? "1" : "0") + "," + (v.activation ? "1" : "0") + "\n";
  }
  write("verdicts.csv", csv);

  json fractions = json::array();
  {
    std::map<std::pair<int, int>, std::pair<int, int>> tally;  // (epoch, layer) -> (n, selective)
    for (const SelectivityVerdict& v : verdicts) {
      auto& t = tally[{v.epoch, v.neuron.layer}];
      ++t.first;
      t.second += v.selective;
    }
    csv = "epoch,layer,neurons,selective,fraction\n";
    for (const auto& [key, t] : tally) {
      const double f = static_cast<double>(t.second) / t.first;
      csv += std::to_string(key.first) + "," + std::to_string(key.second) + "," +
             std::to_string(t.first) + "," + std::to_string(t.second) + "," + Fmt(f) + "\n";
      fractions.push_back({{"epoch", key.first}, {"layer", key.second}, {"fraction", f}});
    }
    write("selectivity.csv", csv);
  }

  // Entropy per record and its histogram per (epoch, layer, method).
  {
    constexpr int kBins = 10;
    std::map<std::tuple<int, int, std::string>, std::vector<int>> hist;
    csv = "epoch,layer,neuron,method,entropy\n";
    for (const Found& f : found) {
      const MeiRecord& r = f.record;
      const double h = NormalizedEntropy(r.class_probs);
      csv += std::to_string(r.epoch) + "," + std::to_string(r.neuron.layer) + "," +
             std::to_string(r.neuron.neuron) + "," + r.method + "," + Fmt(h) + "\n";
      auto& bins = hist[{r.epoch, r.neuron.layer, r.method}];
      bins.resize(kBins, 0);
      ++bins[std::clamp(static_cast<int>(h * kBins), 0, kBins - 1)];
    }
    write("entropy.csv", csv);
    csv = "epoch,layer,method,lower,upper,count\n";
    for (const auto& [key, bins] : hist)
      for (int b = 0; b < kBins; ++b)
        csv += std::to_string(std::get<0>(key)) + "," + std::to_string(std::get<1>(key)) + "," +
               std::get<2>(key) + "," + BinEdge(b, kBins) + "," + BinEdge(b + 1, kBins) + "," +
               std::to_string(bins[b]) + "\n";
    write("entropy_histogram.csv", csv);
  }

  // Latent distances between the MEIs of one layer, per method.
  {
    std::map<std::tuple<int, int, std::string>, std::vector<MeiRecord>> by_layer;
    for (const Found& f : found)
      by_layer[{f.record.epoch, f.record.neuron.layer, f.record.method}].push_back(f.record);
    csv = "epoch,layer,method,pairs,mean_euclidean,cosine_pairs,mean_cosine\n";
    for (const auto& [key, records] : by_layer) {
      if (records.size() < 2) continue;
      const LatentDistanceSummary s = LatentDistances(records);
      csv += std::to_string(std::get<0>(key)) + "," + std::to_string(std::get<1>(key)) + "," +
             std::get<2>(key) + "," + std::to_string(s.pairs) + "," + Fmt(s.mean_euclidean) +
             "," + std::to_string(s.cosine_pairs) + "," + Fmt(s.mean_cosine) + "\n";
    }
    write("distances.csv", csv);
  }

  // Compression complexity of every MEI.
  {
    csv = "epoch,layer,neuron,method,ratio,ratio_fast\n";
    for (const Found& f : found) {
      const fs::path image = out / "cells" / f.name / "mei.f64";
      if (!fs::exists(image)) {
        std::clog << "mango: warning: no image for cell " << f.name << "\n";
        continue;
      }
      const Stimulus s = ReadRawImage(image.string());
      const MeiRecord& r = f.record;
      csv += std::to_string(r.epoch) + "," + std::to_string(r.neuron.layer) + "," +
             std::to_string(r.neuron.neuron) + "," + r.method + "," +
             Fmt(CompressionRatio(s, kCompressionLevel)) + "," +
             Fmt(CompressionRatio(s, kFastCompressionLevel)) + "\n";
    }
    write("complexity.csv", csv);
  }

  // Median best-so-far against evaluations spent, per method.
  {
    std::map<std::string, std::vector<std::vector<double>>> curves;
    for (const Found& f : found) {
      const fs::path history = out / "cells" / f.name / "history.csv";
      if (!fs::exists(history)) {
        std::clog << "mango: warning: no history for cell " << f.name << "\n";
        continue;
      }
      curves[f.record.method].push_back(ReadBestSoFar(history));
    }
    csv = "method,evaluations,cells,median_best\n";
    for (const auto& [method, list] : curves) {
      for (std::int64_t c : ConvergenceCounts(budget)) {
        std::vector<double> values;
        for (const auto& best : list)
          if (!best.empty())
            values.push_back(best[std::min<std::size_t>(c, best.size()) - 1]);
        if (values.empty()) continue;
        csv += method + "," + std::to_string(c) + "," + std::to_string(values.size()) + "," +
               Fmt(Median(values)) + "\n";
      }
    }
    write("convergence.csv", csv);
  }

  json labile_json = json::array();
  {
    std::set<int> epochs;
    for (const SelectivityVerdict& v : verdicts) epochs.insert(v.epoch);
    csv = "layer,neuron,class,first_epoch\n";
    if (epochs.size() >= 2) {
      for (const LabileNeuron& l : LabileNeurons(verdicts)) {
        json classes = json::object();
        for (const auto& [cls, epoch] : l.first_epoch) {
          csv += std::to_string(l.neuron.layer) + "," + std::to_string(l.neuron.neuron) + "," +
                 std::to_string(cls) + "," + std::to_string(epoch) + "\n";
          classes[std::to_string(cls)] = epoch;
        }
        labile_json.push_back(
            {{"layer", l.neuron.layer}, {"neuron", l.neuron.neuron}, {"first_epoch", classes}});
      }
    } else {
      std::clog << "mango: warning: labile neurons need two or more epochs\n";
    }
    write("labile.csv", csv);
  }

  json tables = json::array();
  for (const fs::path& p : result.tables) tables.push_back(p.filename().string());
  const json report = {{"schema", kReportSchema},
                       {"code_version", kCodeVersion},
                       {"cells_expected", found.size() + result.missing.size()},
                       {"cells_found", found.size()},
                       {"missing", result.missing},
                       {"selective_fraction", fractions},
                       {"labile", labile_json},
                       {"tables", tables}};
  WriteText(report_dir / "report.json", report.dump(2) + "\n");
  result.tables.push_back(report_dir / "report.json");
  return result;
}

std::vector<BenchmarkRow> RunBenchmark(const std::vector<Method>& methods, int seeds,
                                       std::int64_t budget, const ProtesConfig& protes) {
  MANGO_REQUIRE(seeds >= 1, "need at least one seed");
  std::vector<BenchmarkRow> rows;
  for (const SyntheticObjective& obj : BenchmarkSuite()) {
    const GridOptimum opt = BruteForceMaximum(obj);
    ObjectiveAdapter adapter;
    adapter.shape = obj.shape;
    adapter.target = obj.f;
    adapter.budget = budget;
    adapter.concurrent = true;
    for (Method m : methods) {
      for (int s = 0; s < seeds; ++s) {
        ProtesConfig pc = protes;
        pc.seed = static_cast<std::uint64_t>(s);
        const OptimizationRecord r = Optimize(m, adapter, pc);
        BenchmarkRow row;
        row.objective = obj.name;
        row.method = m;
        row.seed = pc.seed;
        row.best_value = r.best_value;
        row.optimum = opt.value;
        row.found = r.best_value >= opt.value;
        for (const Evaluation& e : r.history) {
          if (e.best_so_far == r.best_value) {
            row.evaluations_to_best = e.eval_index;
            break;
          }
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

ConformanceReport CheckGeneratorConformance(const GeneratorSpec& spec, const Canvas& canvas,
                                            std::int64_t requests, std::uint64_t seed) {
  ConformanceReport report;
  report.requests = requests;
  try {
    ExternalGenerator gen(spec.command, spec.grid, canvas,
                          std::chrono::milliseconds(spec.timeout_ms));
    report.handshake = true;
    Rng rng(seed);
    double total_ms = 0.0;
    for (std::int64_t k = 0; k < requests; ++k) {
      LatentIndex index(static_cast<std::size_t>(spec.grid.dimension));
      for (int& digit : index) digit = UniformInt(rng, spec.grid.points);
      const auto start = std::chrono::steady_clock::now();
      const Stimulus s = gen.Decode(index);
      total_ms +=
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
              .count();
      if (static_cast<int>(s.pixels.size()) != canvas.size())
        throw GeneratorError("wrong pixel count");
      ++report.responses;
    }
    report.clamped_pixels = gen.clamped_pixels();
    if (report.responses > 0) report.mean_latency_ms = total_ms / report.responses;
    gen.Close();
  } catch (const std::exception& e) {
    report.error = e.what();
  }
  return report;
}

}  // namespace mango
