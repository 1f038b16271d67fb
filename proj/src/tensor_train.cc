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

#include "mango/tensor_train.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "mango/binary_io.h"
#include "mango/error.h"

namespace mango {
namespace {

using Vec = std::vector<double>;

// y = v^T G[:, k, :]
Vec RowTimesSlice(const Vec& v, const TtCore& g, int k) {
  Vec y(static_cast<std::size_t>(g.right_rank), 0.0);
  for (int a = 0; a < g.left_rank; ++a) {
    const double va = v[a];
    if (va == 0.0) continue;
    const double* row = &g.values[g.Offset(a, k, 0)];
    for (int b = 0; b < g.right_rank; ++b) y[b] += va * row[b];
  }
  return y;
}

// y = G[:, k, :] v
Vec SliceTimesCol(const TtCore& g, int k, const Vec& v) {
  Vec y(static_cast<std::size_t>(g.left_rank), 0.0);
  for (int a = 0; a < g.left_rank; ++a) {
    const double* row = &g.values[g.Offset(a, k, 0)];
    double acc = 0.0;
    for (int b = 0; b < g.right_rank; ++b) acc += row[b] * v[b];
    y[a] = acc;
  }
  return y;
}

// Mode-summed core as an (r_left x r_right) matrix, row-major.
Vec SummedSlice(const TtCore& g) {
  Vec s(static_cast<std::size_t>(g.left_rank) * g.right_rank, 0.0);
  for (int a = 0; a < g.left_rank; ++a) {
    for (int k = 0; k < g.mode; ++k) {
      const double* row = &g.values[g.Offset(a, k, 0)];
      for (int b = 0; b < g.right_rank; ++b) {
        s[static_cast<std::size_t>(a) * g.right_rank + b] += row[b];
      }
    }
  }
  return s;
}

Vec RowTimesMatrix(const Vec& v, const Vec& m, int rows, int cols) {
  Vec y(static_cast<std::size_t>(cols), 0.0);
  for (int a = 0; a < rows; ++a) {
    for (int b = 0; b < cols; ++b) {
      y[b] += v[a] * m[static_cast<std::size_t>(a) * cols + b];
    }
  }
  return y;
}

Vec MatrixTimesCol(const Vec& m, int rows, int cols, const Vec& v) {
  Vec y(static_cast<std::size_t>(rows), 0.0);
  for (int a = 0; a < rows; ++a) {
    double acc = 0.0;
    for (int b = 0; b < cols; ++b) acc += m[static_cast<std::size_t>(a) * cols + b] * v[b];
    y[a] = acc;
  }
  return y;
}

// Scales v to unit Euclidean norm; returns log of the old norm (-inf if 0).
double NormalizeInPlace(Vec& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) return -std::numeric_limits<double>::infinity();
  const double norm = std::sqrt(sq);
  for (double& x : v) x /= norm;
  return std::log(norm);
}

double Dot(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void CheckIndex(const TensorTrain& tt, std::span<const int> index) {
  if (static_cast<int>(index.size()) != tt.dimension()) {
    throw InputError("index has " + std::to_string(index.size()) +
                     " digits, train has dimension " +
                     std::to_string(tt.dimension()));
  }
  for (int i = 0; i < tt.dimension(); ++i) {
    if (index[i] < 0 || index[i] >= tt.core(i).mode) {
      throw InputError("digit " + std::to_string(index[i]) + " out of range for mode " +
                       std::to_string(i) + " of size " +
                       std::to_string(tt.core(i).mode));
    }
  }
}

std::vector<int> ClippedRanks(std::span<const int> shape, int rank) {
  MANGO_REQUIRE(!shape.empty(), "tensor train needs at least one mode");
  MANGO_REQUIRE(rank >= 1, "tensor train rank must be >= 1");
  for (int n : shape) MANGO_REQUIRE(n >= 2, "tensor train modes must be >= 2");
  const std::size_t d = shape.size();
  std::vector<int> ranks(d + 1, 1);
  // Max rank at bond i is min(prod left modes, prod right modes).
  for (std::size_t i = 1; i < d; ++i) {
    double left = 1.0, right = 1.0;
    for (std::size_t j = 0; j < i; ++j) left *= shape[j];
    for (std::size_t j = i; j < d; ++j) right *= shape[j];
    ranks[i] = static_cast<int>(std::min<double>({static_cast<double>(rank), left, right}));
  }
  return ranks;
}

// Right interfaces of the mode-summed train, each normalized to unit norm.
std::vector<Vec> NormalizedRightSums(const TensorTrain& tt) {
  const int d = tt.dimension();
  std::vector<Vec> right(static_cast<std::size_t>(d + 1));
  right[d] = Vec{1.0};
  for (int i = d - 1; i >= 0; --i) {
    const TtCore& g = tt.core(i);
    right[i] = MatrixTimesCol(SummedSlice(g), g.left_rank, g.right_rank,
                                right[i + 1]);
    NormalizeInPlace(right[i]);
  }
  return right;
}

LatentIndex SampleOne(const TensorTrain& tt, const std::vector<Vec>& right,
                      Rng& rng) {
  const int d = tt.dimension();
  LatentIndex index(static_cast<std::size_t>(d));
  Vec left{1.0};
  Vec weights;
  for (int i = 0; i < d; ++i) {
    const TtCore& g = tt.core(i);
    weights.assign(static_cast<std::size_t>(g.mode), 0.0);
    double total = 0.0;
    for (int k = 0; k < g.mode; ++k) {
      const double w = std::abs(Dot(RowTimesSlice(left, g, k), right[i + 1]));
      weights[k] = w;
      total += w;
    }
    // Relative floor keeps every digit reachable and the draw well defined.
    double floored = 0.0;
    for (double& w : weights) {
      w = std::max(total > 0.0 ? w / total : 0.0, kDensityFloor);
      floored += w;
    }
    const int digit = SampleCategorical(rng, weights, floored);
    index[i] = digit;
    left = RowTimesSlice(left, g, digit);
    if (NormalizeInPlace(left) == -std::numeric_limits<double>::infinity()) {
      // The chosen prefix has zero mass; continue uniformly.
      left.assign(static_cast<std::size_t>(g.right_rank), 1.0);
      NormalizeInPlace(left);
    }
  }
  return index;
}

// Contribution of one index to the log-likelihood: only the slices it
// selects receive gradient, so they are stored compactly per core.
struct IndexTerm {
  double log_density = 0.0;
  std::vector<Vec> slice_grads;  // empty when the density was floored
};

IndexTerm IndexContribution(const TensorTrain& tt, std::span<const int> x) {
  const int d = tt.dimension();
  std::vector<Vec> left(static_cast<std::size_t>(d + 1));
  std::vector<Vec> right(static_cast<std::size_t>(d + 1));
  left[0] = Vec{1.0};
  double log_left = 0.0;
  bool zero = false;
  for (int j = 0; j < d && !zero; ++j) {
    left[j + 1] = RowTimesSlice(left[j], tt.core(j), x[j]);
    const double ln = NormalizeInPlace(left[j + 1]);
    if (!std::isfinite(ln)) zero = true;
    log_left += ln;
  }
  IndexTerm term;
  const double log_floor = std::log(kDensityFloor);
  // left[d] is a unit 1-vector, i.e. the sign of the density.
  if (zero || left[d][0] < 0.0 || log_left <= log_floor) {
    term.log_density = log_floor;
    return term;
  }
  term.log_density = log_left;
  right[d] = Vec{1.0};
  for (int j = d - 1; j >= 0; --j) {
    right[j] = SliceTimesCol(tt.core(j), x[j], right[j + 1]);
    NormalizeInPlace(right[j]);
  }
  term.slice_grads.resize(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const TtCore& g = tt.core(j);
    const Vec& l = left[j];
    const Vec& r = right[j + 1];
    const double denom = Dot(RowTimesSlice(l, g, x[j]), r);
    Vec& out = term.slice_grads[j];
    out.resize(static_cast<std::size_t>(g.left_rank) * g.right_rank);
    for (int a = 0; a < g.left_rank; ++a) {
      for (int b = 0; b < g.right_rank; ++b) {
        out[static_cast<std::size_t>(a) * g.right_rank + b] = l[a] * r[b] / denom;
      }
    }
  }
  return term;
}

}  // namespace

TensorTrain::TensorTrain(std::vector<TtCore> cores) : cores_(std::move(cores)) {
  MANGO_REQUIRE(!cores_.empty(), "tensor train needs at least one core");
  MANGO_REQUIRE(cores_.front().left_rank == 1, "first core must have left rank 1");
  MANGO_REQUIRE(cores_.back().right_rank == 1, "last core must have right rank 1");
  for (std::size_t i = 0; i < cores_.size(); ++i) {
    const TtCore& g = cores_[i];
    MANGO_REQUIRE(g.mode >= 2, "tensor train modes must be >= 2");
    MANGO_REQUIRE(g.left_rank >= 1 && g.right_rank >= 1, "ranks must be >= 1");
    MANGO_REQUIRE(g.values.size() == static_cast<std::size_t>(g.left_rank) * g.mode * g.right_rank,
                  "core " + std::to_string(i) + " has wrong number of values");
    if (i + 1 < cores_.size()) {
      MANGO_REQUIRE(g.right_rank == cores_[i + 1].left_rank,
                    "rank mismatch between cores " + std::to_string(i) + " and " +
                        std::to_string(i + 1));
    }
    for (double v : g.values) {
      MANGO_REQUIRE(std::isfinite(v), "core " + std::to_string(i) + " holds a non-finite value");
    }
  }
}

std::vector<int> TensorTrain::shape() const {
  std::vector<int> s;
  s.reserve(cores_.size());
  for (const TtCore& g : cores_) s.push_back(g.mode);
  return s;
}

std::vector<int> TensorTrain::ranks() const {
  std::vector<int> r;
  r.reserve(cores_.size() + 1);
  r.push_back(1);
  for (const TtCore& g : cores_) r.push_back(g.right_rank);
  return r;
}

std::size_t TensorTrain::parameter_count() const {
  std::size_t n = 0;
  for (const TtCore& g : cores_) n += g.values.size();
  return n;
}

TensorTrain TensorTrain::Updated(const CoreGradient& gradient, double step) const {
  MANGO_REQUIRE(gradient.size() == cores_.size(), "gradient does not match train");
  std::vector<TtCore> next = cores_;
  for (std::size_t i = 0; i < next.size(); ++i) {
    MANGO_REQUIRE(gradient[i].size() == next[i].values.size(), "gradient does not match core");
    for (std::size_t j = 0; j < next[i].values.size(); ++j) {
      next[i].values[j] += step * gradient[i][j];
    }
  }
  return TensorTrain(std::move(next));
}

TensorTrain TensorTrain::ClampedBelow(double floor) const {
  std::vector<TtCore> next = cores_;
  for (TtCore& g : next) {
    for (double& v : g.values) v = std::max(v, floor);
  }
  return TensorTrain(std::move(next));
}

TensorTrain TtUniform(std::span<const int> shape, int rank) {
  const std::vector<int> ranks = ClippedRanks(shape, rank);
  std::vector<TtCore> cores;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const int r = std::max(ranks[i], ranks[i + 1]);
    const double value = 1.0 / std::sqrt(static_cast<double>(r) * shape[i]);
    cores.emplace_back(ranks[i], shape[i], ranks[i + 1], value);
  }
  return TensorTrain(std::move(cores));
}

TensorTrain TtRandom(std::span<const int> shape, int rank, Rng& rng, double lo,
                     double hi) {
  const std::vector<int> ranks = ClippedRanks(shape, rank);
  std::vector<TtCore> cores;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    TtCore g(ranks[i], shape[i], ranks[i + 1]);
    for (double& v : g.values) v = lo + (hi - lo) * UniformUnit(rng);
    cores.push_back(std::move(g));
  }
  return TensorTrain(std::move(cores));
}

double TtEval(const TensorTrain& tt, std::span<const int> index) {
  CheckIndex(tt, index);
  Vec v{1.0};
  for (int i = 0; i < tt.dimension(); ++i) v = RowTimesSlice(v, tt.core(i), index[i]);
  return v[0];
}

double TtSum(const TensorTrain& tt) {
  Vec v{1.0};
  for (const TtCore& g : tt.cores()) {
    v = RowTimesMatrix(v, SummedSlice(g), g.left_rank, g.right_rank);
  }
  return v[0];
}

std::vector<LatentIndex> TtSample(const TensorTrain& tt, int count, Rng& rng,
                                  Exec exec) {
  MANGO_REQUIRE(count >= 1, "sample count must be >= 1");
  const std::uint64_t base = rng();
  const std::vector<Vec> right = NormalizedRightSums(tt);
  std::vector<LatentIndex> samples(static_cast<std::size_t>(count));
  auto draw = [&](int j) {
    Rng local(DeriveSeed({base, static_cast<std::uint64_t>(j)}));
    samples[j] = SampleOne(tt, right, local);
  };
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (int j = 0; j < count; ++j) draw(j);
  } else {
    for (int j = 0; j < count; ++j) draw(j);
  }
  return samples;
}

LogLikelihood TtLogLikelihood(const TensorTrain& tt,
                              std::span<const LatentIndex> indices,
                              std::span<const double> weights, Exec exec) {
  MANGO_REQUIRE(!indices.empty(), "log-likelihood needs at least one index");
  MANGO_REQUIRE(weights.empty() || weights.size() == indices.size(),
                "weights must match indices");
  for (const LatentIndex& x : indices) CheckIndex(tt, x);
  const int d = tt.dimension();
  const int m = static_cast<int>(indices.size());

  std::vector<IndexTerm> terms(static_cast<std::size_t>(m));
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) terms[i] = IndexContribution(tt, indices[i]);
  } else {
    for (int i = 0; i < m; ++i) terms[i] = IndexContribution(tt, indices[i]);
  }

  LogLikelihood out;
  out.gradient.resize(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) out.gradient[j].assign(tt.core(j).values.size(), 0.0);

  // Reduce in index order so the result does not depend on the policy.
  double weight_total = 0.0;
  for (int i = 0; i < m; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    weight_total += w;
    const IndexTerm& term = terms[i];
    out.value += w * term.log_density / m;
    if (term.slice_grads.empty() || w == 0.0) continue;
    const LatentIndex& x = indices[i];
    for (int j = 0; j < d; ++j) {
      const TtCore& g = tt.core(j);
      const Vec& s = term.slice_grads[j];
      for (int a = 0; a < g.left_rank; ++a) {
        for (int b = 0; b < g.right_rank; ++b) {
          out.gradient[j][g.Offset(a, x[j], b)] +=
              w * s[static_cast<std::size_t>(a) * g.right_rank + b] / m;
        }
      }
    }
  }

  // Normalizer term: -(sum w / M) log|Z|.
  const double coeff = weight_total / m;
  if (coeff == 0.0) return out;
  std::vector<Vec> summed(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) summed[j] = SummedSlice(tt.core(j));
  std::vector<Vec> left(static_cast<std::size_t>(d + 1));
  left[0] = Vec{1.0};
  double log_z = 0.0;
  for (int j = 0; j < d; ++j) {
    const TtCore& g = tt.core(j);
    left[j + 1] = RowTimesMatrix(left[j], summed[j], g.left_rank, g.right_rank);
    log_z += NormalizeInPlace(left[j + 1]);
  }
  if (!std::isfinite(log_z)) {
    throw RuntimeError("tensor train density sums to zero");
  }
  out.value -= coeff * log_z;
  const std::vector<Vec> right = NormalizedRightSums(tt);
  for (int j = 0; j < d; ++j) {
    const TtCore& g = tt.core(j);
    const Vec& l = left[j];
    const Vec& r = right[j + 1];
    const double denom = Dot(RowTimesMatrix(l, summed[j], g.left_rank, g.right_rank), r);
    for (int a = 0; a < g.left_rank; ++a) {
      for (int b = 0; b < g.right_rank; ++b) {
        const double v = coeff * l[a] * r[b] / denom;
        for (int k = 0; k < g.mode; ++k) out.gradient[j][g.Offset(a, k, b)] -= v;
      }
    }
  }
  return out;
}

double GradientNorm(const CoreGradient& gradient) {
  double sq = 0.0;
  for (const Vec& g : gradient) {
    for (double v : g) sq += v * v;
  }
  return std::sqrt(sq);
}

QuantizationMap::QuantizationMap(std::vector<int> base_shape, int factor)
    : base_shape_(std::move(base_shape)), factor_(factor) {
  MANGO_REQUIRE(factor_ >= 2, "quantization factor must be >= 2");
  MANGO_REQUIRE(!base_shape_.empty(), "quantization needs at least one mode");
  for (int n : base_shape_) {
    int k = 0;
    long long p = 1;
    while (p < n) {
      p *= factor_;
      ++k;
    }
    if (p != n || k == 0) {
      throw InputError("mode " + std::to_string(n) + " is not a power of " +
                       std::to_string(factor_));
    }
    digits_per_mode_.push_back(k);
  }
}

std::vector<int> QuantizationMap::quantized_shape() const {
  const int total = std::accumulate(digits_per_mode_.begin(), digits_per_mode_.end(), 0);
  return std::vector<int>(static_cast<std::size_t>(total), factor_);
}

LatentIndex QuantizationMap::Quantize(std::span<const int> index) const {
  MANGO_REQUIRE(index.size() == base_shape_.size(), "index does not match quantization map");
  LatentIndex q;
  for (std::size_t i = 0; i < index.size(); ++i) {
    int v = index[i];
    MANGO_REQUIRE(v >= 0 && v < base_shape_[i], "digit out of range for quantization map");
    const int k = digits_per_mode_[i];
    const std::size_t start = q.size();
    q.resize(start + static_cast<std::size_t>(k));
    for (int j = k - 1; j >= 0; --j) {
      q[start + static_cast<std::size_t>(j)] = v % factor_;
      v /= factor_;
    }
  }
  return q;
}

LatentIndex QuantizationMap::Dequantize(std::span<const int> qindex) const {
  const int total = std::accumulate(digits_per_mode_.begin(), digits_per_mode_.end(), 0);
  MANGO_REQUIRE(static_cast<int>(qindex.size()) == total, "quantized index has wrong length");
  LatentIndex index;
  index.reserve(base_shape_.size());
  std::size_t pos = 0;
  for (int k : digits_per_mode_) {
    int v = 0;
    for (int j = 0; j < k; ++j, ++pos) {
      MANGO_REQUIRE(qindex[pos] >= 0 && qindex[pos] < factor_, "quantized digit out of range");
      v = v * factor_ + qindex[pos];
    }
    index.push_back(v);
  }
  return index;
}

namespace {
constexpr std::string_view kTtMagic = "MANGOTT1";
}

void WriteTensorTrain(std::ostream& out, const TensorTrain& tt) {
  binio::WriteMagic(out, kTtMagic);
  binio::Write<std::uint64_t>(out, static_cast<std::uint64_t>(tt.dimension()));
  for (int n : tt.shape()) binio::Write<std::uint64_t>(out, static_cast<std::uint64_t>(n));
  for (int r : tt.ranks()) binio::Write<std::uint64_t>(out, static_cast<std::uint64_t>(r));
  for (const TtCore& g : tt.cores()) {
    for (double v : g.values) binio::Write<double>(out, v);
  }
  if (!out) throw RuntimeError("failed writing tensor train");
}

TensorTrain ReadTensorTrain(std::istream& in) {
  binio::ExpectMagic(in, kTtMagic);
  const auto d = binio::Read<std::uint64_t>(in);
  MANGO_REQUIRE(d >= 1 && d < (1u << 20), "implausible tensor train dimension");
  std::vector<int> shape(d), ranks(d + 1);
  for (auto& n : shape) n = static_cast<int>(binio::Read<std::uint64_t>(in));
  for (auto& r : ranks) r = static_cast<int>(binio::Read<std::uint64_t>(in));
  std::vector<TtCore> cores;
  for (std::size_t i = 0; i < d; ++i) {
    MANGO_REQUIRE(shape[i] >= 2 && ranks[i] >= 1 && ranks[i + 1] >= 1, "bad core header");
    TtCore g(ranks[i], shape[i], ranks[i + 1]);
    for (double& v : g.values) v = binio::Read<double>(in);
    cores.push_back(std::move(g));
  }
  return TensorTrain(std::move(cores));
}

void SaveTensorTrain(const std::string& path, const TensorTrain& tt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot open " + path + " for writing");
  WriteTensorTrain(out, tt);
}

TensorTrain LoadTensorTrain(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return ReadTensorTrain(in);
}

}  // namespace mango
