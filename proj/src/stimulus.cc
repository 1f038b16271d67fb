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


#include "mango/stimulus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "mango/binary_io.h"
#include "mango/error.h"

namespace mango {
namespace {

constexpr std::string_view kRawMagic = "MANGOF64";

double Factor(const LatentGrid& grid, const LatentIndex& index, int factor) {
  return factor < grid.dimension ? grid.Coordinate(index[static_cast<std::size_t>(factor)]) : 0.0;
}

// Snaps coordinates near the centre to exactly zero.
double Neutral(const LatentGrid& grid, double c) {
  const bool even = grid.points % 2 == 0 && grid.points > 2;
  const double zone = even ? 1.0 / (grid.points - 1) + 1e-9 : 0.0;
  return std::abs(c) <= zone ? 0.0 : c;
}

}  // namespace

void LatentGrid::Validate() const {
  MANGO_REQUIRE(dimension >= 1, "latent dimension must be >= 1");
  MANGO_REQUIRE(points >= 2, "points per dimension must be >= 2");
}

double LatentGrid::Coordinate(int digit) const {
  MANGO_REQUIRE(digit >= 0 && digit < points,
                "digit " + std::to_string(digit) + " outside [0, " + std::to_string(points) + ")");
  // k / (n - 1) * 2 - 1 with an integer numerator, so digits k and n - 1 - k
  // give exactly opposite values.
  return static_cast<double>(2 * digit - (points - 1)) / (points - 1);
}

std::vector<double> LatentGrid::Coordinates(const LatentIndex& index) const {
  CheckIndex(index);
  std::vector<double> c(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) c[i] = Coordinate(index[i]);
  return c;
}

void LatentGrid::CheckIndex(const LatentIndex& index) const {
  MANGO_REQUIRE(static_cast<int>(index.size()) == dimension,
                "latent index has " + std::to_string(index.size()) + " digits, grid has " +
                    std::to_string(dimension));
  for (int k : index) {
    MANGO_REQUIRE(k >= 0 && k < points, "latent digit " + std::to_string(k) + " out of range");
  }
}

LatentIndex LatentGrid::MidIndex() const {
  return LatentIndex(static_cast<std::size_t>(dimension), points / 2);
}

Stimulus DecodeProcedural(const LatentGrid& grid, const LatentIndex& index,
                          const Canvas& canvas) {
  grid.Validate();
  grid.CheckIndex(index);
  MANGO_REQUIRE(canvas.height >= 1 && canvas.width >= 1 && canvas.channels >= 1,
                "canvas sizes must be >= 1");
  using std::numbers::pi;
  // n orientations evenly spaced over [0, pi); digit 0 is vertical stripes.
  const double theta =
      (Factor(grid, index, kOrientation) + 1.0) / 2.0 * pi * (grid.points - 1) / grid.points;
  const double cycles = 1.0 + 1.5 * (Factor(grid, index, kFrequency) + 1.0);
  const double phase = Factor(grid, index, kPhase) * pi;
  const double amplitude = 0.5 * Neutral(grid, Factor(grid, index, kContrast));
  const double background = 0.5 + 0.25 * Neutral(grid, Factor(grid, index, kLuminance));
  const double bx = (Factor(grid, index, kBlobX) + 1.0) / 2.0 - 0.5;
  const double by = (Factor(grid, index, kBlobY) + 1.0) / 2.0 - 0.5;
  const double size = Neutral(grid, Factor(grid, index, kBlobSize));
  const double sigma = 0.08 + 0.2 * std::abs(size);
  const double blob = size > 0.0 ? 0.5 : (size < 0.0 ? -0.5 : 0.0);
  const double kx = std::cos(theta);
  const double ky = std::sin(theta);

  Stimulus s;
  s.canvas = canvas;
  s.index = index;
  s.generator = "procedural";
  s.pixels.resize(static_cast<std::size_t>(canvas.size()));
  for (int y = 0; y < canvas.height; ++y) {
    // Pixel centres in [-0.5, 0.5).
    const double v = (y + 0.5) / canvas.height - 0.5;
    for (int x = 0; x < canvas.width; ++x) {
      const double u = (x + 0.5) / canvas.width - 0.5;
      double p = background;
      if (amplitude != 0.0) p += amplitude * std::cos(2.0 * pi * cycles * (u * kx + v * ky) + phase);
      if (blob != 0.0) {
        const double r2 = (u - bx) * (u - bx) + (v - by) * (v - by);
        p += blob * std::exp(-r2 / (2.0 * sigma * sigma));
      }
      p = std::clamp(p, 0.0, 1.0);
      for (int c = 0; c < canvas.channels; ++c) {
        s.pixels[static_cast<std::size_t>((y * canvas.width + x) * canvas.channels + c)] = p;
      }
    }
  }
  return s;
}

ProceduralGenerator::ProceduralGenerator(LatentGrid grid, Canvas canvas)
    : grid_(grid), canvas_(canvas) {
  grid_.Validate();
  MANGO_REQUIRE(canvas_.height >= 1 && canvas_.width >= 1 && canvas_.channels >= 1,
                "canvas sizes must be >= 1");
}

std::vector<std::uint8_t> QuantizePixels(const std::vector<double>& pixels) {
  std::vector<std::uint8_t> out(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(pixels[i], 0.0, 1.0) * 255.0));
  }
  return out;
}

void WritePpm(const std::string& path, const Stimulus& stimulus) {
  const Canvas& c = stimulus.canvas;
  MANGO_REQUIRE(c.channels == 1 || c.channels == 3, "PPM output needs 1 or 3 channels");
  MANGO_REQUIRE(static_cast<int>(stimulus.pixels.size()) == c.size(), "pixel count does not match canvas");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot open '" + path + "' for writing");
  out << "P6\n" << c.width << ' ' << c.height << "\n255\n";
  const std::vector<std::uint8_t> bytes = QuantizePixels(stimulus.pixels);
  for (int p = 0; p < c.height * c.width; ++p) {
    for (int k = 0; k < 3; ++k) {
      const int ch = c.channels == 3 ? k : 0;
      out.put(static_cast<char>(bytes[static_cast<std::size_t>(p * c.channels + ch)]));
    }
  }
  if (!out) throw RuntimeError("failed to write '" + path + "'");
}

void WriteRawImage(const std::string& path, const Stimulus& stimulus) {
  const Canvas& c = stimulus.canvas;
  MANGO_REQUIRE(static_cast<int>(stimulus.pixels.size()) == c.size(), "pixel count does not match canvas");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot open '" + path + "' for writing");
  binio::WriteMagic(out, kRawMagic);
  binio::Write<std::uint32_t>(out, static_cast<std::uint32_t>(c.height));
  binio::Write<std::uint32_t>(out, static_cast<std::uint32_t>(c.width));
  binio::Write<std::uint32_t>(out, static_cast<std::uint32_t>(c.channels));
  for (double p : stimulus.pixels) binio::Write<double>(out, p);
  if (!out) throw RuntimeError("failed to write '" + path + "'");
}

Stimulus ReadRawImage(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image '" + path + "'");
  binio::ExpectMagic(in, kRawMagic);
  Stimulus s;
  s.canvas.height = static_cast<int>(binio::Read<std::uint32_t>(in));
  s.canvas.width = static_cast<int>(binio::Read<std::uint32_t>(in));
  s.canvas.channels = static_cast<int>(binio::Read<std::uint32_t>(in));
  MANGO_REQUIRE(s.canvas.height >= 1 && s.canvas.width >= 1 && s.canvas.channels >= 1 &&
                    static_cast<long>(s.canvas.height) * s.canvas.width * s.canvas.channels <= (1L << 28),
                "implausible image size in '" + path + "'");
  s.pixels.resize(static_cast<std::size_t>(s.canvas.size()));
  for (double& p : s.pixels) p = binio::Read<double>(in);
  return s;
}

}  // namespace mango
