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

#include "mango/optimizer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "mango/error.h"

namespace mango {
namespace {

// Consecutive steps without a fresh evaluation before a cached run stops.
constexpr int kMaxIdleSteps = 1000;

bool Better(Direction dir, double a, double b) {
  return dir == Direction::kMaximize ? a > b : a < b;
}

void RecordEvaluation(OptimizationRecord& record, Direction dir,
                      const LatentIndex& index, double raw) {
  if (record.history.empty() || Better(dir, raw, record.best_value)) {
    record.best_value = raw;
    record.best_index = index;
  }
  ++record.evaluations_used;
  record.history.push_back(
      Evaluation{record.evaluations_used, index, raw, record.best_value});
}

// Cache hits can still improve the incumbent but are not history rows.
void RecordCacheHit(OptimizationRecord& record, Direction dir,
                    const LatentIndex& index, double raw) {
  if (!record.history.empty() && Better(dir, raw, record.best_value)) {
    record.best_value = raw;
    record.best_index = index;
  }
}

void FinishSearchStep(SearchState& state, const BudgetedObjective& objective,
                      bool fresh) {
  state.idle_steps = fresh ? 0 : state.idle_steps + 1;
  if (state.idle_steps >= kMaxIdleSteps) {
    state.record.stalled = true;
    state.finished = true;
  }
  if (objective.remaining() <= 0) state.finished = true;
}

LatentIndex UniformIndex(Rng& rng, const std::vector<int>& shape) {
  LatentIndex x(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) x[i] = UniformInt(rng, shape[i]);
  return x;
}

void CheckIndexShape(const std::vector<int>& shape, std::span<const int> index) {
  MANGO_REQUIRE(index.size() == shape.size(), "index dimension does not match objective");
  for (std::size_t i = 0; i < shape.size(); ++i) {
    MANGO_REQUIRE(index[i] >= 0 && index[i] < shape[i], "index digit out of range");
  }
}

}  // namespace

BudgetedObjective::BudgetedObjective(ObjectiveAdapter adapter)
    : adapter_(std::move(adapter)) {
  MANGO_REQUIRE(static_cast<bool>(adapter_.target), "objective has no target");
  MANGO_REQUIRE(adapter_.budget >= 1, "evaluation budget must be >= 1");
  MANGO_REQUIRE(!adapter_.shape.empty(), "objective grid has no modes");
  for (int n : adapter_.shape) MANGO_REQUIRE(n >= 2, "objective grid modes must be >= 2");
  if (adapter_.noise) {
    MANGO_REQUIRE(adapter_.noise->sigma >= 0.0, "noise sigma must be >= 0");
  }
}

std::vector<BudgetedObjective::Result> BudgetedObjective::EvaluateBatch(
    std::span<const LatentIndex> indices, Exec exec) {
  for (const LatentIndex& x : indices) CheckIndexShape(adapter_.shape, x);
  std::vector<Result> results(indices.size());
  // Slots that need a target call, in batch order.
  std::vector<std::size_t> pending;
  std::map<LatentIndex, std::size_t> first_in_batch;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (adapter_.cache) {
      if (auto it = cache_.find(indices[i]); it != cache_.end()) {
        results[i] = Result{it->second, false};
        continue;
      }
      if (auto [it, inserted] = first_in_batch.emplace(indices[i], i); !inserted) {
        continue;  // filled from the first occurrence below
      }
    }
    pending.push_back(i);
  }
  if (static_cast<std::int64_t>(pending.size()) > remaining()) throw BudgetExhausted();

  const std::int64_t base = used_;
  auto run = [&](std::size_t p) {
    const std::size_t i = pending[p];
    double v = adapter_.target(indices[i]);
    if (adapter_.noise && adapter_.noise->sigma > 0.0) {
      Rng noise(DeriveSeed({adapter_.noise->seed, static_cast<std::uint64_t>(base) + p}));
      v += adapter_.noise->sigma * StandardNormal(noise);
    }
    results[i] = Result{v, true};
  };
  const int n = static_cast<int>(pending.size());
  if (exec == Exec::kParallel && adapter_.concurrent && n > 1) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int p = 0; p < n; ++p) run(static_cast<std::size_t>(p));
  } else {
    for (int p = 0; p < n; ++p) run(static_cast<std::size_t>(p));
  }
  used_ += n;

  if (adapter_.cache) {
    for (std::size_t i : pending) cache_.emplace(indices[i], results[i].raw);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const std::size_t first = first_in_batch.count(indices[i]) ? first_in_batch[indices[i]] : i;
      if (first != i) results[i] = Result{results[first].raw, false};
    }
  }
  return results;
}

BudgetedObjective::Result BudgetedObjective::Evaluate(std::span<const int> index) {
  const LatentIndex x(index.begin(), index.end());
  return EvaluateBatch(std::span<const LatentIndex>(&x, 1), Exec::kSerial).front();
}

void WriteHistoryCsv(std::ostream& out, const OptimizationRecord& record) {
  out << "eval_index,latent_index,raw_value,best_so_far\n";
  char buf[64];
  for (const Evaluation& e : record.history) {
    out << e.eval_index << ',';
    for (std::size_t i = 0; i < e.index.size(); ++i) {
      if (i) out << '-';
      out << e.index[i];
    }
    std::snprintf(buf, sizeof(buf), ",%.17g", e.raw_value);
    out << buf;
    std::snprintf(buf, sizeof(buf), ",%.17g\n", e.best_so_far);
    out << buf;
  }
}

double FermiDiracWeight(double f_value, double y_min, double energy,
                        double temperature) {
  MANGO_REQUIRE(temperature > 0.0, "Fermi-Dirac temperature must be > 0");
  const double z = (f_value - y_min - energy) / temperature;
  if (z > 700.0) return 0.0;
  if (z < -700.0) return 1.0;
  return 1.0 / (std::exp(z) + 1.0);
}

void ProtesConfig::Validate() const {
  MANGO_REQUIRE(batch_size >= 1, "K must be >= 1");
  MANGO_REQUIRE(elite_count >= 1 && elite_count <= batch_size, "k_top must be in [1, K]");
  MANGO_REQUIRE(learning_rate > 0.0, "learning rate must be > 0");
  MANGO_REQUIRE(grad_steps >= 1, "gradient steps must be >= 1");
  MANGO_REQUIRE(rank >= 1, "rank must be >= 1");
  MANGO_REQUIRE(quantization == 0 || quantization >= 2, "quantization factor must be 0 or >= 2");
  MANGO_REQUIRE(init_jitter >= 0.0 && init_jitter < 1.0, "init jitter must be in [0, 1)");
  MANGO_REQUIRE(core_floor >= 0.0, "core floor must be >= 0");
  if (weighting == Weighting::kFermiDirac && temperature) {
    MANGO_REQUIRE(*temperature > 0.0, "temperature must be > 0");
  }
}

ProtesState::ProtesState(const std::vector<int>& shape, const ProtesConfig& config)
    : config_(config), rng_(config.seed) {
  config_.Validate();
  std::vector<int> density_shape = shape;
  if (config_.quantization) {
    qmap_.emplace(shape, config_.quantization);
    density_shape = qmap_->quantized_shape();
  }
  TensorTrain uniform = TtUniform(density_shape, config_.rank);
  std::vector<TtCore> cores = uniform.cores();
  for (TtCore& g : cores) {
    for (double& v : g.values) v *= 1.0 + config_.init_jitter * (2.0 * UniformUnit(rng_) - 1.0);
  }
  density_ = TensorTrain(std::move(cores));
}

namespace {

TensorTrain ClampRelative(const TensorTrain& tt, double floor) {
  std::vector<TtCore> cores = tt.cores();
  for (TtCore& g : cores) {
    double top = 0.0;
    for (double v : g.values) top = std::max(top, std::abs(v));
    for (double& v : g.values) v = std::max(v, floor * top);
  }
  return TensorTrain(std::move(cores));
}

}  // namespace

void ProtesStep(ProtesState& state, BudgetedObjective& objective) {
  if (state.finished_) return;
  const std::int64_t remaining = objective.remaining();
  if (remaining <= 0) {
    state.finished_ = true;
    return;
  }
  const ProtesConfig& cfg = state.config_;
  const Direction dir = objective.adapter().direction;
  const int n = static_cast<int>(std::min<std::int64_t>(cfg.batch_size, remaining));

  const std::vector<LatentIndex> samples = TtSample(state.density_, n, state.rng_, cfg.exec);
  std::vector<LatentIndex> points;
  points.reserve(samples.size());
  for (const LatentIndex& s : samples) {
    points.push_back(state.qmap_ ? state.qmap_->Dequantize(s) : s);
  }
  const auto results = objective.EvaluateBatch(points, cfg.exec);

  bool any_fresh = false;
  std::vector<double> scores(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].fresh) {
      RecordEvaluation(state.record_, dir, points[i], results[i].raw);
      any_fresh = true;
    } else {
      RecordCacheHit(state.record_, dir, points[i], results[i].raw);
    }
    scores[i] = objective.Score(results[i].raw);
  }

  std::vector<LatentIndex>& chosen = state.last_indices_;
  std::vector<double>& weights = state.last_weights_;
  chosen.clear();
  weights.clear();
  if (cfg.weighting == Weighting::kElite) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    // Ties keep batch order.
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    const int k = std::min(cfg.elite_count, n);
    for (int j = 0; j < k; ++j) chosen.push_back(samples[order[j]]);
  } else {
    // Minimized objective g = -score; y_min is its running minimum.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double s : scores) {
      lo = std::min(lo, -s);
      hi = std::max(hi, -s);
    }
    state.y_min_ = state.y_min_ ? std::min(*state.y_min_, lo) : lo;
    const double temperature =
        cfg.temperature ? *cfg.temperature : std::max(0.01 * (hi - lo), 1e-12);
    for (int i = 0; i < n; ++i) {
      chosen.push_back(samples[i]);
      weights.push_back(FermiDiracWeight(-scores[i], *state.y_min_, cfg.energy, temperature));
    }
  }

  for (int step = 0; step < cfg.grad_steps; ++step) {
    const LogLikelihood ll = TtLogLikelihood(state.density_, chosen, weights, cfg.exec);
    state.density_ = state.density_.Updated(ll.gradient, cfg.learning_rate);
    if (cfg.core_floor > 0.0) state.density_ = ClampRelative(state.density_, cfg.core_floor);
  }

  state.idle_steps_ = any_fresh ? 0 : state.idle_steps_ + 1;
  if (objective.remaining() <= 0) state.finished_ = true;
  if (state.idle_steps_ >= kMaxIdleSteps) {
    state.record_.stalled = true;
    state.finished_ = true;
  }
}

void RandomSearchStep(SearchState& state, BudgetedObjective& objective) {
  if (objective.remaining() <= 0) {
    state.finished = true;
    return;
  }
  const LatentIndex x = UniformIndex(state.rng, state.shape);
  const auto r = objective.Evaluate(x);
  const Direction dir = objective.adapter().direction;
  if (r.fresh) {
    RecordEvaluation(state.record, dir, x, r.raw);
  } else {
    RecordCacheHit(state.record, dir, x, r.raw);
  }
  FinishSearchStep(state, objective, r.fresh);
}

void HillClimbStep(SearchState& state, BudgetedObjective& objective) {
  if (objective.remaining() <= 0) {
    state.finished = true;
    return;
  }
  LatentIndex candidate;
  if (!state.incumbent) {
    candidate = UniformIndex(state.rng, state.shape);
  } else {
    candidate = *state.incumbent;
    const int mode = UniformInt(state.rng, static_cast<int>(state.shape.size()));
    const int n = state.shape[static_cast<std::size_t>(mode)];
    // Uniform over the n - 1 digits that differ from the current one.
    int digit = UniformInt(state.rng, n - 1);
    if (digit >= candidate[static_cast<std::size_t>(mode)]) ++digit;
    candidate[static_cast<std::size_t>(mode)] = digit;
  }
  const auto r = objective.Evaluate(candidate);
  const Direction dir = objective.adapter().direction;
  if (r.fresh) {
    RecordEvaluation(state.record, dir, candidate, r.raw);
  } else {
    RecordCacheHit(state.record, dir, candidate, r.raw);
  }
  const double score = objective.Score(r.raw);
  if (!state.incumbent || score >= state.incumbent_score) {
    state.incumbent = candidate;
    state.incumbent_score = score;
  }
  FinishSearchStep(state, objective, r.fresh);
}

Method ParseMethod(const std::string& name) {
  if (name == "protes") return Method::kProtes;
  if (name == "protes_s") return Method::kProtesS;
  if (name == "protes_b") return Method::kProtesB;
  if (name == "random_search") return Method::kRandomSearch;
  if (name == "hill_climb") return Method::kHillClimb;
  throw InputError("unknown optimization method '" + name + "'");
}

std::string MethodName(Method method) {
  switch (method) {
    case Method::kProtes: return "protes";
    case Method::kProtesS: return "protes_s";
    case Method::kProtesB: return "protes_b";
    case Method::kRandomSearch: return "random_search";
    case Method::kHillClimb: return "hill_climb";
  }
  return "unknown";
}

ProtesConfig ApplyPreset(Method method, ProtesConfig config) {
  switch (method) {
    case Method::kProtes:
      config.batch_size = 10;
      config.elite_count = 1;
      config.quantization = 0;
      break;
    case Method::kProtesS:
      config.batch_size = 5;
      config.elite_count = 1;
      config.quantization = config.quantization ? config.quantization : 2;
      break;
    case Method::kProtesB:
      config.batch_size = 25;
      config.elite_count = 5;
      config.quantization = config.quantization ? config.quantization : 2;
      break;
    default:
      break;
  }
  return config;
}

OptimizationRecord Optimize(Method method, const ObjectiveAdapter& adapter,
                            const ProtesConfig& config) {
  BudgetedObjective objective(adapter);
  switch (method) {
    case Method::kProtes:
    case Method::kProtesS:
    case Method::kProtesB: {
      const ProtesConfig cfg = ApplyPreset(method, config);
      MANGO_REQUIRE(adapter.budget >= cfg.batch_size,
                    "budget " + std::to_string(adapter.budget) + " is smaller than K = " +
                        std::to_string(cfg.batch_size));
      ProtesState state(adapter.shape, cfg);
      while (!state.finished()) ProtesStep(state, objective);
      return state.record();
    }
    case Method::kRandomSearch:
    case Method::kHillClimb: {
      SearchState state(adapter.shape, config.seed);
      while (!state.finished) {
        if (method == Method::kRandomSearch) {
          RandomSearchStep(state, objective);
        } else {
          HillClimbStep(state, objective);
        }
      }
      return state.record;
    }
  }
  throw InputError("unknown optimization method");
}

}  // namespace mango
