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


// Test double for the external generator protocol. Answers every decode
// request with a constant image, or with an image whose value encodes the
// first latent digit. Flags make it misbehave in specific ways.

#include <chrono>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mango/external_generator.h"

int main(int argc, char** argv) {
  CLI::App app{"Echo image generator speaking the mango generator protocol"};
  double value = 0.5;
  std::string mode = "fixed";
  int delay_ms = 0;
  long exit_after = -1;
  std::string corrupt = "none";
  bool refuse = false;
  app.add_option("--value", value, "Pixel value in fixed mode");
  app.add_option("--mode", mode, "fixed | index (pixel = first digit / (n - 1))")
      ->check(CLI::IsMember({"fixed", "index"}));
  app.add_option("--delay-ms", delay_ms, "Sleep before every response");
  app.add_option("--exit-after", exit_after, "Exit after this many decode responses");
  app.add_option("--corrupt", corrupt, "none | id | size | json")
      ->check(CLI::IsMember({"none", "id", "size", "json"}));
  app.add_flag("--refuse", refuse, "Reject the handshake");
  CLI11_PARSE(app, argc, argv);

  using nlohmann::json;
  int n = 2;
  long pixels = 0;
  long served = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    const json req = json::parse(line, nullptr, false);
    if (req.is_discarded()) {
      std::cout << json{{"error", "bad request"}}.dump() << std::endl;
      continue;
    }
    const std::string cmd = req.value("cmd", "");
    if (cmd == "hello") {
      n = req.at("n").get<int>();
      pixels = req.at("h").get<long>() * req.at("w").get<long>() * req.at("c").get<long>();
      std::cout << (refuse ? json{{"ok", false}} : json{{"ok", true}}).dump() << std::endl;
    } else if (cmd == "decode") {
      if (exit_after >= 0 && served >= exit_after) return 0;
      if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      float v = static_cast<float>(value);
      if (mode == "index") v = static_cast<float>(req.at("index").at(0).get<int>()) / static_cast<float>(n - 1);
      std::vector<float> img(static_cast<std::size_t>(pixels + (corrupt == "size" ? 1 : 0)), v);
      long id = req.at("id").get<long>();
      if (corrupt == "id") id += 1;
      if (corrupt == "json") {
        std::cout << "{\"id\": " << id << ", \"pixels\": " << std::endl;
      } else {
        std::cout << json{{"id", id}, {"pixels", mango::EncodePixels(img)}}.dump() << std::endl;
      }
      ++served;
    } else if (cmd == "bye") {
      return 0;
    } else {
      std::cout << json{{"error", "unknown command"}}.dump() << std::endl;
    }
  }
  return 0;
}
