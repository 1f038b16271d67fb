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

#ifndef MANGO_ERROR_H_
#define MANGO_ERROR_H_

#include <stdexcept>
#include <string>

namespace mango {

// Bad arguments, malformed files, shape mismatches. Maps to CLI exit code 1.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Failures that happen while running: external generator died, training
// diverged, I/O errors. Maps to CLI exit code 2.
class RuntimeError : public std::runtime_error {
 public:
  explicit RuntimeError(const std::string& what) : std::runtime_error(what) {}
};

#define MANGO_REQUIRE(cond, msg)                  \
  do {                                            \
    if (!(cond)) throw ::mango::InputError(msg);  \
  } while (0)

}  // namespace mango

#endif  // MANGO_ERROR_H_
