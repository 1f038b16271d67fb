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


#include "mango/external_generator.h"

#include <openssl/evp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <iostream>
#include <thread>

#include "json.hpp"

namespace mango {
namespace {

using Json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr double kRangeSlack = 1e-6;

}  // namespace

std::string Base64Encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> Base64Decode(std::string_view text) {
  if (text.size() % 4 != 0) throw GeneratorError("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(text.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw GeneratorError("invalid base64 payload");
  std::size_t padding = 0;
  for (std::size_t i = text.size(); i > 0 && text[i - 1] == '=' && padding < 2; --i) ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

std::string EncodePixels(std::span<const float> pixels) {
  std::vector<std::uint8_t> bytes(pixels.size() * sizeof(float));
  std::memcpy(bytes.data(), pixels.data(), bytes.size());
  return Base64Encode(bytes);
}

std::vector<float> DecodePixels(std::string_view text) {
  const std::vector<std::uint8_t> bytes = Base64Decode(text);
  if (bytes.size() % sizeof(float) != 0) {
    throw GeneratorError("pixel payload is not a whole number of float32 values");
  }
  std::vector<float> pixels(bytes.size() / sizeof(float));
  std::memcpy(pixels.data(), bytes.data(), bytes.size());
  return pixels;
}

ExternalGenerator::ExternalGenerator(std::vector<std::string> command, LatentGrid grid,
                                     Canvas canvas, std::chrono::milliseconds timeout)
    : command_(std::move(command)), grid_(grid), canvas_(canvas), timeout_(timeout) {
  MANGO_REQUIRE(!command_.empty() && !command_.front().empty(), "generator command is empty");
  MANGO_REQUIRE(timeout_.count() > 0, "generator timeout must be > 0");
  grid_.Validate();
  MANGO_REQUIRE(canvas_.height >= 1 && canvas_.width >= 1 && canvas_.channels >= 1,
                "canvas sizes must be >= 1");

  int sv[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    throw GeneratorError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  std::vector<char*> argv;
  for (std::string& a : command_) argv.push_back(a.data());
  argv.push_back(nullptr);
  const pid_t pid = fork();
  if (pid < 0) {
    close(sv[0]);
    close(sv[1]);
    throw GeneratorError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    dup2(sv[1], STDIN_FILENO);
    dup2(sv[1], STDOUT_FILENO);
    execvp(argv[0], argv.data());
    _exit(127);
  }
  close(sv[1]);
  pid_ = pid;
  fd_ = sv[0];

  Send(Json{{"cmd", "hello"},
            {"d", grid_.dimension},
            {"n", grid_.points},
            {"h", canvas_.height},
            {"w", canvas_.width},
            {"c", canvas_.channels}}
           .dump());
  const std::string reply = ReceiveLine();
  Json j;
  try {
    j = Json::parse(reply);
  } catch (const Json::exception&) {
    Fail("handshake reply is not JSON: " + reply.substr(0, 200));
  }
  if (!j.is_object() || !j.contains("ok") || j["ok"] != true) {
    Fail("generator refused the handshake: " + reply.substr(0, 200));
  }
}

ExternalGenerator::~ExternalGenerator() { Close(); }

void ExternalGenerator::Close() {
  std::lock_guard<std::mutex> lock(mutex_);
  if (fd_ >= 0) {
    if (!broken_) {
      const std::string bye = Json{{"cmd", "bye"}}.dump() + "\n";
      (void)send(fd_, bye.data(), bye.size(), MSG_NOSIGNAL);
    }
    close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    // Give the child a moment to exit on its own before killing it.
    const auto deadline = Clock::now() + std::chrono::seconds(2);
    int status = 0;
    while (waitpid(pid_, &status, WNOHANG) == 0) {
      if (Clock::now() >= deadline) {
        kill(pid_, SIGKILL);
        waitpid(pid_, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    pid_ = -1;
  }
}

void ExternalGenerator::Fail(const std::string& what) {
  broken_ = true;
  throw GeneratorError("external generator '" + command_.front() + "': " + what);
}

void ExternalGenerator::Send(const std::string& line) {
  if (broken_ || fd_ < 0) Fail("generator is no longer usable");
  const std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      Fail(std::string("write failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string ExternalGenerator::ReceiveLine() {
  const auto deadline = Clock::now() + timeout_;
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) Fail("timed out after " + std::to_string(timeout_.count()) + " ms");
    pollfd p{fd_, POLLIN, 0};
    const int r = poll(&p, 1, static_cast<int>(left));
    if (r < 0) {
      if (errno == EINTR) continue;
      Fail(std::string("poll failed: ") + std::strerror(errno));
    }
    if (r == 0) continue;
    char chunk[65536];
    const ssize_t n = recv(fd_, chunk, sizeof(chunk), 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      Fail(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) Fail("process exited");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

Stimulus ExternalGenerator::Decode(const LatentIndex& index) {
  grid_.CheckIndex(index);
  std::lock_guard<std::mutex> lock(mutex_);
  const std::int64_t request = next_id_++;
  Send(Json{{"cmd", "decode"}, {"id", request}, {"index", index}}.dump());
  const std::string line = ReceiveLine();
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::exception&) {
    Fail("response is not JSON: " + line.substr(0, 200));
  }
  if (!j.is_object()) Fail("response is not an object");
  if (j.contains("error")) Fail("generator error: " + j["error"].dump());
  if (!j.contains("id") || !j["id"].is_number_integer() || j["id"].get<std::int64_t>() != request) {
    Fail("response id does not match request " + std::to_string(request));
  }
  if (!j.contains("pixels") || !j["pixels"].is_string()) Fail("response has no pixel payload");
  std::vector<float> raw;
  try {
    raw = DecodePixels(j["pixels"].get_ref<const std::string&>());
  } catch (const GeneratorError& e) {
    Fail(e.what());
  }
  if (static_cast<int>(raw.size()) != canvas_.size()) {
    Fail("expected " + std::to_string(canvas_.size()) + " pixels, got " + std::to_string(raw.size()));
  }
  Stimulus s;
  s.canvas = canvas_;
  s.index = index;
  s.generator = id();
  s.pixels.resize(raw.size());
  std::int64_t clamped = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double p = raw[i];
    if (!std::isfinite(p) || p < -kRangeSlack || p > 1.0 + kRangeSlack) {
      Fail("pixel " + std::to_string(i) + " = " + std::to_string(p) + " is outside [0, 1]");
    }
    if (p < 0.0 || p > 1.0) ++clamped;
    s.pixels[i] = std::clamp(p, 0.0, 1.0);
  }
  if (clamped > 0) {
    clamped_ += clamped;
    std::clog << "warning: external generator response " << request << ": clamped " << clamped
              << " pixel(s) overshooting [0, 1] by <= 1e-6\n";
  }
  return s;
}

}  // namespace mango
