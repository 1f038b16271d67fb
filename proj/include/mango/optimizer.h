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

#ifndef MANGO_OPTIMIZER_H_
#define MANGO_OPTIMIZER_H_

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mango/exec.h"
#include "mango/random.h"
#include "mango/tensor_train.h"

namespace mango {

enum class Direction { kMaximize, kMinimize };

// Additive Gaussian noise on every evaluation; the draw for evaluation k is
// a pure function of (seed, k).
struct NoiseModel {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

// A black-box target over a discrete grid.
struct ObjectiveAdapter {
  std::vector<int> shape;
  std::function<double(std::span<const int>)> target;
  Direction direction = Direction::kMaximize;
  std::int64_t budget = 0;
  std::optional<NoiseModel> noise;
  // The target may be called from several threads at once.
  bool concurrent = false;
  // Reuse values for repeated indices. Only for deterministic targets;
  // cache hits do not consume budget.
  bool cache = false;
};

// Thrown when an optimizer asks for more evaluations than remain.
class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted() : std::runtime_error("evaluation budget exhausted") {}
};

// Wraps an ObjectiveAdapter and counts every target invocation.
class BudgetedObjective {
 public:
  explicit BudgetedObjective(ObjectiveAdapter adapter);

  const ObjectiveAdapter& adapter() const { return adapter_; }
  std::int64_t used() const { return used_; }
  std::int64_t remaining() const { return adapter_.budget - used_; }

  struct Result {
    double raw = 0.0;
    bool fresh = true;  // false for cache hits
  };
  // Evaluates every index (in parallel when the target allows it). Throws
  // BudgetExhausted before calling anything if the batch does not fit.
  std::vector<Result> EvaluateBatch(std::span<const LatentIndex> indices,
                                    Exec exec = Exec::kParallel);
  Result Evaluate(std::span<const int> index);

  // Maps a raw value to the maximization scale used internally.
  double Score(double raw) const {
    return adapter_.direction == Direction::kMaximize ? raw : -raw;
  }

 private:
  ObjectiveAdapter adapter_;
  std::int64_t used_ = 0;
  std::map<LatentIndex, double> cache_;
};

struct Evaluation {
  std::int64_t eval_index = 0;  // 1-based
  LatentIndex index;
  double raw_value = 0.0;
  double best_so_far = 0.0;

  bool operator==(const Evaluation&) const = default;
};

struct OptimizationRecord {
  LatentIndex best_index;
  double best_value = 0.0;
  std::vector<Evaluation> history;  // one row per target invocation
  std::int64_t evaluations_used = 0;
  bool stalled = false;  // stopped because only cache hits were produced

  bool operator==(const OptimizationRecord&) const = default;
};

// Writes the per-evaluation history table (see docs/file_formats.md).
void WriteHistoryCsv(std::ostream& out, const OptimizationRecord& record);

// Fermi-Dirac weight 1 / (exp((f - y_min - energy) / temperature) + 1).
// Saturates to exactly 0 or 1 once the exponent exceeds 700 in magnitude.
double FermiDiracWeight(double f_value, double y_min, double energy,
                        double temperature);

enum class Weighting { kElite, kFermiDirac };

struct ProtesConfig {
  int batch_size = 10;  // K
  int elite_count = 1;  // k_top
  double learning_rate = 0.05;
  int grad_steps = 2;
  int rank = 5;
  int quantization = 0;  // mode factor q; 0 disables quantization
  Weighting weighting = Weighting::kElite;
  double energy = 0.0;
  // Fixed temperature; when unset, 0.01 * (value range of the batch).
  std::optional<double> temperature;
  // Relative jitter applied to the initial uniform cores. Constant cores
  // receive rank-symmetric gradients and would stay rank one forever.
  double init_jitter = 0.1;
  // After each update, every core entry is raised to at least
  // core_floor * (largest entry of that core). Keeps the density positive
  // and stops modes from collapsing before the budget is spent.
  double core_floor = 0.03;
  std::uint64_t seed = 0;
  Exec exec = Exec::kParallel;

  void Validate() const;
};

class ProtesState {
 public:
  ProtesState(const std::vector<int>& shape, const ProtesConfig& config);

  const ProtesConfig& config() const { return config_; }
  const TensorTrain& density() const { return density_; }
  // Map from search-grid indices to the density's index space, if any.
  const std::optional<QuantizationMap>& quantization() const { return qmap_; }
  const OptimizationRecord& record() const { return record_; }
  bool finished() const { return finished_; }
  Rng& rng() { return rng_; }
  // Running minimum of the minimized objective (Fermi-Dirac y_min).
  std::optional<double> y_min() const { return y_min_; }

  // Elite indices (density index space) and weights used by the last update.
  const std::vector<LatentIndex>& last_update_indices() const { return last_indices_; }
  const std::vector<double>& last_update_weights() const { return last_weights_; }

 private:
  friend void ProtesStep(ProtesState&, BudgetedObjective&);

  ProtesConfig config_;
  std::optional<QuantizationMap> qmap_;
  TensorTrain density_;
  Rng rng_;
  OptimizationRecord record_;
  bool finished_ = false;
  int idle_steps_ = 0;
  std::optional<double> y_min_;
  std::vector<LatentIndex> last_indices_;
  std::vector<double> last_weights_;
};

// One PROTES iteration: sample K (or the remaining budget), evaluate, select
// or weight, and take grad_steps ascent steps on the log-likelihood.
void ProtesStep(ProtesState& state, BudgetedObjective& objective);

// State shared by the non-TT baselines.
struct SearchState {
  explicit SearchState(std::vector<int> grid_shape, std::uint64_t seed)
      : shape(std::move(grid_shape)), rng(seed) {}
  std::vector<int> shape;
  Rng rng;
  OptimizationRecord record;
  std::optional<LatentIndex> incumbent;
  double incumbent_score = 0.0;
  int idle_steps = 0;
  bool finished = false;
};

// Uniform random index, one evaluation.
void RandomSearchStep(SearchState& state, BudgetedObjective& objective);
// Mutates one coordinate of the incumbent to a different digit and keeps it
// unless the objective gets worse. The first call evaluates a random start.
void HillClimbStep(SearchState& state, BudgetedObjective& objective);

enum class Method { kProtes, kProtesS, kProtesB, kRandomSearch, kHillClimb };

Method ParseMethod(const std::string& name);
std::string MethodName(Method method);
inline constexpr Method kProtesPresets[] = {Method::kProtes, Method::kProtesS,
                                            Method::kProtesB};

// Overwrites K, k_top and quantization with the preset values.
ProtesConfig ApplyPreset(Method method, ProtesConfig config);

// Runs `method` until the budget is spent.
OptimizationRecord Optimize(Method method, const ObjectiveAdapter& objective,
                            const ProtesConfig& config);

}  // namespace mango

#endif  // MANGO_OPTIMIZER_H_
