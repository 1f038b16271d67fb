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


#ifndef MANGO_STIMULUS_H_
#define MANGO_STIMULUS_H_

// Latent grids, the in-process procedural image generator and image files.

#include <cstdint>
#include <string>
#include <vector>

#include "mango/tensor_train.h"

namespace mango {

struct LatentGrid {
  int dimension = 8;  // d
  int points = 16;    // n, digits per dimension

  void Validate() const;
  std::vector<int> shape() const { return std::vector<int>(static_cast<std::size_t>(dimension), points); }
  // Digit k -> k / (n - 1) * 2 - 1.
  double Coordinate(int digit) const;
  std::vector<double> Coordinates(const LatentIndex& index) const;
  void CheckIndex(const LatentIndex& index) const;
  // All digits at (n - 1) / 2, rounded half up.
  LatentIndex MidIndex() const;
};

struct Canvas {
  int height = 8;
  int width = 8;
  int channels = 1;

  int size() const { return height * width * channels; }
  bool operator==(const Canvas&) const = default;
};

struct Stimulus {
  Canvas canvas;
  std::vector<double> pixels;  // row-major, channel-last, in [0, 1]
  LatentIndex index;
  std::string generator;
};

// Latent dimensions read by the procedural generator, in this order.
// Dimensions past the last one are ignored; missing ones sit at their
// neutral value.
enum ProceduralFactor {
  kOrientation = 0,  // n angles over [0, pi); c = -1 gives vertical stripes
  kFrequency,        // 1 to 4 cycles across the canvas
  kPhase,            // c * pi
  kContrast,         // grating amplitude 0.5 c; 0 at the grid centre
  kLuminance,        // background 0.5 + 0.25 c
  kBlobX,
  kBlobY,
  kBlobSize,         // signed: bright blob for c > 0, dark for c < 0, none at 0
  kProceduralFactors
};

// Grating plus blob image; a pure function of (grid, index, canvas).
// The neutral-valued factors (contrast, luminance, blob size) snap to zero
// within 1 / (n - 1) of the centre when n is even, so the mid-grid index is
// a uniform mid-grey canvas.
Stimulus DecodeProcedural(const LatentGrid& grid, const LatentIndex& index,
                          const Canvas& canvas);

// Source of images for latent indices.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual const LatentGrid& grid() const = 0;
  virtual const Canvas& canvas() const = 0;
  virtual std::string id() const = 0;
  // True when Decode may be called from several threads at once.
  virtual bool concurrent() const = 0;
  virtual Stimulus Decode(const LatentIndex& index) = 0;
};

class ProceduralGenerator : public Generator {
 public:
  ProceduralGenerator(LatentGrid grid, Canvas canvas);
  const LatentGrid& grid() const override { return grid_; }
  const Canvas& canvas() const override { return canvas_; }
  std::string id() const override { return "procedural"; }
  bool concurrent() const override { return true; }
  Stimulus Decode(const LatentIndex& index) override {
    return DecodeProcedural(grid_, index, canvas_);
  }

 private:
  LatentGrid grid_;
  Canvas canvas_;
};

// Binary PPM (P6, 8-bit). Single-channel images are written as grey RGB.
void WritePpm(const std::string& path, const Stimulus& stimulus);
// Lossless sidecar: "MANGOF64", u32 height, u32 width, u32 channels, then
// the pixels as little-endian doubles.
void WriteRawImage(const std::string& path, const Stimulus& stimulus);
Stimulus ReadRawImage(const std::string& path);

// Rounds to 8 bits: round(255 p).
std::vector<std::uint8_t> QuantizePixels(const std::vector<double>& pixels);

}  // namespace mango

#endif  // MANGO_STIMULUS_H_
