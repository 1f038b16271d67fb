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


// mango: train toy networks, sweep most exciting inputs, build reports.
// Exit codes: 0 success, 1 bad input, 2 runtime failure, 3 partial results.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mango/error.h"
#include "mango/harness.h"

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> workers;
  std::optional<std::int64_t> budget;
};

mango::ExperimentConfig ResolveConfig(const GlobalFlags& flags) {
  mango::ExperimentConfig c =
      flags.config.empty() ? mango::ExperimentConfig{} : mango::LoadConfig(flags.config);
  if (flags.seed) c.seed = *flags.seed;
  if (!flags.out.empty()) c.output_dir = flags.out;
  if (flags.workers) c.workers = *flags.workers;
  if (flags.budget) c.budget = *flags.budget;
  c.Validate();
  return c;
}

int Train(const mango::ExperimentConfig& c) {
  const mango::TrainingResult r = mango::RunTrainingWithSnapshots(c);
  for (const mango::EpochStats& s : r.epochs)
    std::printf("epoch %3d  loss %.4f  train %.3f  test %.3f\n", s.epoch, s.train_loss,
                s.train_accuracy, s.test_accuracy);
  std::printf("%zu snapshots in %s\n", r.snapshots.size(), c.checkpoints().string().c_str());
  return 0;
}

int Sweep(const mango::ExperimentConfig& c) {
  const mango::SweepResult r = mango::RunMeiSweep(c);
  int done = 0, skipped = 0, failed = 0;
  for (const mango::CellOutcome& o : r.cells) {
    switch (o.status) {
      case mango::CellStatus::kDone: ++done; break;
      case mango::CellStatus::kSkipped: ++skipped; break;
      case mango::CellStatus::kFailed: ++failed; break;
    }
  }
  std::printf("cells: %d run, %d already complete, %d failed; %lld evaluations\n", done,
              skipped, failed, static_cast<long long>(r.evaluations));
  return r.partial() ? 3 : 0;
}

int Report(const mango::ExperimentConfig& c) {
  const mango::ReportResult r = mango::RunReport(c);
  for (const auto& p : r.tables) std::printf("%s\n", p.string().c_str());
  if (r.partial()) std::printf("%zu cells missing\n", r.missing.size());
  return r.partial() ? 3 : 0;
}

int Bench(const mango::ExperimentConfig& c, const std::vector<std::string>& method_names,
          int seeds) {
  std::vector<mango::Method> methods;
  for (const std::string& n : method_names) methods.push_back(mango::ParseMethod(n));
  const auto rows = mango::RunBenchmark(methods, seeds, c.budget, c.protes);
  std::filesystem::create_directories(c.output_dir);
  const auto path = c.output_dir / "bench.csv";
  std::ofstream csv(path);
  if (!csv) throw mango::RuntimeError("cannot write " + path.string());
  csv << "objective,method,seed,best_value,optimum,found,evaluations_to_best\n";
  std::map<std::pair<std::string, std::string>, int> hits;
  std::vector<std::string> order;
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", r.best_value, r.optimum);
    csv << r.objective << ',' << mango::MethodName(r.method) << ',' << r.seed << ',' << buf
        << ',' << (r.found ? 1 : 0) << ',' << r.evaluations_to_best << '\n';
    if (std::find(order.begin(), order.end(), r.objective) == order.end())
      order.push_back(r.objective);
    hits[{r.objective, mango::MethodName(r.method)}] += r.found;
  }
  std::printf("%-24s", "objective");
  for (const std::string& m : method_names) std::printf(" %14s", m.c_str());
  std::printf("\n");
  for (const std::string& o : order) {
    std::printf("%-24s", o.c_str());
    for (const std::string& m : method_names)
      std::printf(" %11d/%-2d", hits[{o, m}], seeds);
    std::printf("\n");
  }
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int GenTest(const mango::ExperimentConfig& c, const std::vector<std::string>& command,
            const std::vector<int>& canvas, std::int64_t requests) {
  mango::GeneratorSpec spec = c.generator;
  if (!command.empty()) spec.command = command;
  spec.kind = "external";
  MANGO_REQUIRE(!spec.command.empty(), "gen-test needs a generator command");
  MANGO_REQUIRE(canvas.size() == 3, "--canvas takes height width channels");
  const mango::ConformanceReport r = mango::CheckGeneratorConformance(
      spec, {canvas[0], canvas[1], canvas[2]}, requests, c.seed);
  std::printf("handshake   %s\n", r.handshake ? "ok" : "FAILED");
  std::printf("responses   %lld / %lld\n", static_cast<long long>(r.responses),
              static_cast<long long>(r.requests));
  std::printf("clamped     %lld pixels\n", static_cast<long long>(r.clamped_pixels));
  std::printf("latency     %.3f ms mean\n", r.mean_latency_ms);
  if (!r.error.empty()) std::printf("error       %s\n", r.error.c_str());
  std::printf("%s\n", r.ok() ? "PASS" : "FAIL");
  return r.ok() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Most exciting inputs of spiking networks via tensor-train search"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--config", flags.config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "Master seed");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--workers", flags.workers, "Concurrent sweep cells")->check(CLI::PositiveNumber);
  app.add_option("--budget", flags.budget, "Evaluations per optimizer run")
      ->check(CLI::PositiveNumber);

  CLI::App* train = app.add_subcommand("train", "Train the toy network and write snapshots");
  CLI::App* sweep = app.add_subcommand("sweep", "Find most exciting inputs for every target");
  CLI::App* report = app.add_subcommand("report", "Build analysis tables from a sweep");
  CLI::App* bench = app.add_subcommand("bench", "Compare optimizers on the synthetic suite");
  std::vector<std::string> methods{"protes", "protes_s", "protes_b", "random_search"};
  int seeds = 10;
  bench->add_option("--methods", methods, "Methods to compare");
  bench->add_option("--seeds", seeds, "Seeds per objective")->check(CLI::PositiveNumber);
  CLI::App* gen_test = app.add_subcommand("gen-test", "Check an external generator");
  std::vector<std::string> command;
  std::vector<int> canvas{8, 8, 1};
  std::int64_t requests = 100;
  gen_test->add_option("--canvas", canvas, "Canvas height width channels")->expected(3);
  gen_test->add_option("--requests", requests, "Number of decodes")->check(CLI::PositiveNumber);
  gen_test->add_option("command", command, "Generator command and arguments")
      ->expected(-1);
  gen_test->prefix_command();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const mango::ExperimentConfig c = ResolveConfig(flags);
    if (*train) return Train(c);
    if (*sweep) return Sweep(c);
    if (*report) return Report(c);
    if (*bench) return Bench(c, methods, seeds);
    if (*gen_test) {
      std::vector<std::string> rest = gen_test->remaining();
      command.insert(command.end(), rest.begin(), rest.end());
      return GenTest(c, command, canvas, requests);
    }
  } catch (const mango::InputError& e) {
    std::cerr << "mango: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "mango: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
