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


// Serial reference against the OpenMP path for the data-parallel kernels.
// Prints wall time per call and checks that both paths agree exactly.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mango/exec.h"
#include "mango/kernels.h"
#include "mango/random.h"
#include "mango/snn.h"
#include "mango/tensor_train.h"
#include "mango/toy_dataset.h"

namespace {

using mango::Exec;

double Seconds(const std::function<void()>& f, int reps) {
  f();  // warm up
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / reps;
}

void Row(const std::string& name, const std::function<void(Exec)>& f, int reps, bool same) {
  const double serial = Seconds([&] { f(Exec::kSerial); }, reps);
  const double parallel = Seconds([&] { f(Exec::kParallel); }, reps);
  std::printf("%-28s %12.3f %12.3f %8.2fx  %s\n", name.c_str(), serial * 1e3, parallel * 1e3,
              serial / parallel, same ? "identical" : "MISMATCH");
}

std::vector<double> RandomVector(mango::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = 2.0 * mango::UniformUnit(rng) - 1.0;
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP kernel timings"};
  int reps = 5;
  app.add_option("--reps", reps, "Timed repetitions per kernel")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  mango::Rng rng(7);
  std::printf("threads: %d\n", mango::MaxThreads());
  std::printf("%-28s %12s %12s %9s\n", "kernel", "serial ms", "parallel ms", "speedup");

  {
    const int rows = 1024, cols = 1024;
    const auto w = RandomVector(rng, static_cast<std::size_t>(rows) * cols);
    const auto x = RandomVector(rng, cols);
    std::vector<double> a(rows), b(rows);
    mango::MatVec(w, rows, cols, x, a, Exec::kSerial);
    mango::MatVec(w, rows, cols, x, b, Exec::kParallel);
    std::vector<double> y(rows);
    Row("matvec 1024x1024", [&](Exec e) { mango::MatVec(w, rows, cols, x, y, e); }, reps, a == b);
  }
  {
    const mango::ConvShape s{64, 64, 8, 16, 3};
    const auto w = RandomVector(rng, static_cast<std::size_t>(s.weight_count()));
    const auto x = RandomVector(rng, static_cast<std::size_t>(s.input_size()));
    std::vector<double> a(s.output_size()), b(s.output_size());
    mango::Conv2d(s, w, x, a, Exec::kSerial);
    mango::Conv2d(s, w, x, b, Exec::kParallel);
    std::vector<double> y(s.output_size());
    Row("conv2d 64x64 8->16 k3", [&](Exec e) { mango::Conv2d(s, w, x, y, e); }, reps, a == b);
  }
  {
    const std::vector<int> shape(8, 16);
    mango::TensorTrain tt = mango::TtUniform(shape, 5);
    mango::Rng r1(1), r2(1);
    const bool same = mango::TtSample(tt, 2000, r1, Exec::kSerial) ==
                      mango::TtSample(tt, 2000, r2, Exec::kParallel);
    Row("tt sample 2000 [16]^8 r5",
        [&](Exec e) {
          mango::Rng r(1);
          mango::TtSample(tt, 2000, r, e);
        },
        reps, same);
    mango::Rng r3(2);
    const auto idx = mango::TtSample(tt, 2000, r3, Exec::kSerial);
    const auto ls = mango::TtLogLikelihood(tt, idx, {}, Exec::kSerial);
    const auto lp = mango::TtLogLikelihood(tt, idx, {}, Exec::kParallel);
    Row("tt loglik 2000 [16]^8 r5",
        [&](Exec e) { mango::TtLogLikelihood(tt, idx, {}, e); }, reps,
        ls.value == lp.value && ls.gradient == lp.gradient);
  }
  {
    const mango::ToyDataset data = mango::MakeToyDataset({});
    mango::Rng init(3);
    const mango::SpikingNetwork net0 = mango::MakeNetwork({}, init);
    const auto epoch = [&](Exec e) {
      mango::SpikingNetwork net = net0;
      mango::Rng r(4);
      mango::TrainEpoch(net, data.train, {0.05, 10, e}, r);
      return net;
    };
    const bool same = epoch(Exec::kSerial).layers[0].weights ==
                      epoch(Exec::kParallel).layers[0].weights;
    Row("train epoch toy 150 ex", [&](Exec e) { epoch(e); }, reps, same);
  }
  return 0;
}
