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


#include "mango/kernels.h"

namespace mango {
namespace {

bool Parallel(Exec exec, long work) {
#ifdef _OPENMP
  return exec == Exec::kParallel && work >= 4096;
#else
  (void)exec;
  (void)work;
  return false;
#endif
}

}  // namespace

void MatVec(std::span<const double> w, int rows, int cols,
            std::span<const double> x, std::span<double> y, Exec exec) {
  auto row = [&](int r) {
    const double* wr = w.data() + static_cast<long>(r) * cols;
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  };
  if (Parallel(exec, static_cast<long>(rows) * cols)) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) row(r);
  } else {
    for (int r = 0; r < rows; ++r) row(r);
  }
}

void MatTVecAdd(std::span<const double> w, int rows, int cols,
                std::span<const double> y, std::span<double> x, Exec exec) {
  auto col = [&](int c) {
    double acc = 0.0;
    for (int r = 0; r < rows; ++r) acc += w[static_cast<long>(r) * cols + c] * y[r];
    x[c] += acc;
  };
  if (Parallel(exec, static_cast<long>(rows) * cols)) {
#pragma omp parallel for schedule(static)
    for (int c = 0; c < cols; ++c) col(c);
  } else {
    for (int c = 0; c < cols; ++c) col(c);
  }
}

void OuterAdd(std::span<const double> y, std::span<const double> x, int rows,
              int cols, std::span<double> g, Exec exec) {
  auto row = [&](int r) {
    if (y[r] == 0.0) return;
    double* gr = g.data() + static_cast<long>(r) * cols;
    for (int c = 0; c < cols; ++c) gr[c] += y[r] * x[c];
  };
  if (Parallel(exec, static_cast<long>(rows) * cols)) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) row(r);
  } else {
    for (int r = 0; r < rows; ++r) row(r);
  }
}

void Conv2d(const ConvShape& s, std::span<const double> w,
            std::span<const double> x, std::span<double> y, Exec exec) {
  const int half = s.kernel / 2;
  auto pixel = [&](int p) {
    const int py = p / s.width;
    const int px = p % s.width;
    double* out = y.data() + static_cast<long>(p) * s.out_channels;
    for (int o = 0; o < s.out_channels; ++o) {
      double acc = 0.0;
      for (int ky = 0; ky < s.kernel; ++ky) {
        const int iy = py + ky - half;
        if (iy < 0 || iy >= s.height) continue;
        for (int kx = 0; kx < s.kernel; ++kx) {
          const int ix = px + kx - half;
          if (ix < 0 || ix >= s.width) continue;
          const double* xi = x.data() + (static_cast<long>(iy) * s.width + ix) * s.in_channels;
          const double* wk =
              w.data() + ((static_cast<long>(o) * s.kernel + ky) * s.kernel + kx) * s.in_channels;
          for (int c = 0; c < s.in_channels; ++c) acc += wk[c] * xi[c];
        }
      }
      out[o] = acc;
    }
  };
  const int pixels = s.height * s.width;
  if (Parallel(exec, static_cast<long>(s.output_size()) * s.kernel * s.kernel * s.in_channels)) {
#pragma omp parallel for schedule(static)
    for (int p = 0; p < pixels; ++p) pixel(p);
  } else {
    for (int p = 0; p < pixels; ++p) pixel(p);
  }
}

void Conv2dInputGradAdd(const ConvShape& s, std::span<const double> w,
                        std::span<const double> dy, std::span<double> dx,
                        Exec exec) {
  const int half = s.kernel / 2;
  // Gather form: each input pixel collects from the outputs it fed.
  auto pixel = [&](int p) {
    const int iy = p / s.width;
    const int ix = p % s.width;
    double* gx = dx.data() + static_cast<long>(p) * s.in_channels;
    for (int ky = 0; ky < s.kernel; ++ky) {
      const int py = iy - ky + half;
      if (py < 0 || py >= s.height) continue;
      for (int kx = 0; kx < s.kernel; ++kx) {
        const int px = ix - kx + half;
        if (px < 0 || px >= s.width) continue;
        const double* g = dy.data() + (static_cast<long>(py) * s.width + px) * s.out_channels;
        for (int o = 0; o < s.out_channels; ++o) {
          if (g[o] == 0.0) continue;
          const double* wk =
              w.data() + ((static_cast<long>(o) * s.kernel + ky) * s.kernel + kx) * s.in_channels;
          for (int c = 0; c < s.in_channels; ++c) gx[c] += g[o] * wk[c];
        }
      }
    }
  };
  const int pixels = s.height * s.width;
  if (Parallel(exec, static_cast<long>(s.output_size()) * s.kernel * s.kernel * s.in_channels)) {
#pragma omp parallel for schedule(static)
    for (int p = 0; p < pixels; ++p) pixel(p);
  } else {
    for (int p = 0; p < pixels; ++p) pixel(p);
  }
}

void Conv2dWeightGradAdd(const ConvShape& s, std::span<const double> x,
                         std::span<const double> dy, std::span<double> dw,
                         Exec exec) {
  const int half = s.kernel / 2;
  auto filter = [&](int o) {
    for (int ky = 0; ky < s.kernel; ++ky) {
      for (int kx = 0; kx < s.kernel; ++kx) {
        double* gw =
            dw.data() + ((static_cast<long>(o) * s.kernel + ky) * s.kernel + kx) * s.in_channels;
        for (int py = 0; py < s.height; ++py) {
          const int iy = py + ky - half;
          if (iy < 0 || iy >= s.height) continue;
          for (int px = 0; px < s.width; ++px) {
            const int ix = px + kx - half;
            if (ix < 0 || ix >= s.width) continue;
            const double g = dy[(static_cast<long>(py) * s.width + px) * s.out_channels + o];
            if (g == 0.0) continue;
            const double* xi = x.data() + (static_cast<long>(iy) * s.width + ix) * s.in_channels;
            for (int c = 0; c < s.in_channels; ++c) gw[c] += g * xi[c];
          }
        }
      }
    }
  };
  if (Parallel(exec, static_cast<long>(s.output_size()) * s.kernel * s.kernel * s.in_channels)) {
#pragma omp parallel for schedule(static)
    for (int o = 0; o < s.out_channels; ++o) filter(o);
  } else {
    for (int o = 0; o < s.out_channels; ++o) filter(o);
  }
}

}  // namespace mango
