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


#ifndef MANGO_KERNELS_H_
#define MANGO_KERNELS_H_

// Dense and convolutional kernels behind the spiking network. Each takes an
// Exec policy; the serial and parallel paths produce identical results
// because every output element is accumulated by one thread in a fixed
// order.

#include <span>

#include "mango/exec.h"

namespace mango {

// y = W x, W row-major (rows x cols).
void MatVec(std::span<const double> w, int rows, int cols,
            std::span<const double> x, std::span<double> y, Exec exec);

// x += W^T y.
void MatTVecAdd(std::span<const double> w, int rows, int cols,
                std::span<const double> y, std::span<double> x, Exec exec);

// G += y x^T.
void OuterAdd(std::span<const double> y, std::span<const double> x, int rows,
              int cols, std::span<double> g, Exec exec);

// Same-padded, stride-1 2D convolution over channel-last images.
struct ConvShape {
  int height = 0;
  int width = 0;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;  // odd

  int input_size() const { return height * width * in_channels; }
  int output_size() const { return height * width * out_channels; }
  // Kernel layout: [out][ky][kx][in].
  int weight_count() const { return out_channels * kernel * kernel * in_channels; }

  bool operator==(const ConvShape&) const = default;
};

void Conv2d(const ConvShape& s, std::span<const double> w,
            std::span<const double> x, std::span<double> y, Exec exec);

// dx += conv^T(dy).
void Conv2dInputGradAdd(const ConvShape& s, std::span<const double> w,
                        std::span<const double> dy, std::span<double> dx,
                        Exec exec);

// dw += correlation of dy with x.
void Conv2dWeightGradAdd(const ConvShape& s, std::span<const double> x,
                         std::span<const double> dy, std::span<double> dw,
                         Exec exec);

}  // namespace mango

#endif  // MANGO_KERNELS_H_
