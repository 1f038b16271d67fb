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


#ifndef MANGO_EXTERNAL_GENERATOR_H_
#define MANGO_EXTERNAL_GENERATOR_H_

// Out-of-process image generator speaking newline-delimited JSON over the
// child's standard input and output. See docs/file_formats.md.

#include <chrono>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mango/error.h"
#include "mango/stimulus.h"

namespace mango {

// Protocol violation, timeout or exit of the generator process.
class GeneratorError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

std::string Base64Encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> Base64Decode(std::string_view text);

// Base64 of little-endian float32 values, and back.
std::string EncodePixels(std::span<const float> pixels);
std::vector<float> DecodePixels(std::string_view text);

class ExternalGenerator : public Generator {
 public:
  // Starts `command` (argv form, no shell) and performs the handshake.
  ExternalGenerator(std::vector<std::string> command, LatentGrid grid, Canvas canvas,
                    std::chrono::milliseconds timeout = std::chrono::seconds(30));
  ~ExternalGenerator() override;
  ExternalGenerator(const ExternalGenerator&) = delete;
  ExternalGenerator& operator=(const ExternalGenerator&) = delete;

  const LatentGrid& grid() const override { return grid_; }
  const Canvas& canvas() const override { return canvas_; }
  std::string id() const override { return "external:" + command_.front(); }
  bool concurrent() const override { return false; }
  // One request in flight at a time; calls from several threads queue up.
  Stimulus Decode(const LatentIndex& index) override;

  std::int64_t requests() const { return next_id_; }
  // Pixels pulled back into [0, 1] after overshooting by at most 1e-6.
  std::int64_t clamped_pixels() const { return clamped_; }

  // Sends "bye" and reaps the process. Called by the destructor.
  void Close();

 private:
  void Send(const std::string& line);
  std::string ReceiveLine();
  [[noreturn]] void Fail(const std::string& what);

  std::vector<std::string> command_;
  LatentGrid grid_;
  Canvas canvas_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int fd_ = -1;
  bool broken_ = false;
  std::string buffer_;
  std::int64_t next_id_ = 0;
  std::int64_t clamped_ = 0;
  std::mutex mutex_;
};

}  // namespace mango

#endif  // MANGO_EXTERNAL_GENERATOR_H_
