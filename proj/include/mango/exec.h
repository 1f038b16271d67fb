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

#ifndef MANGO_EXEC_H_
#define MANGO_EXEC_H_

namespace mango {

// Execution policy for the data-parallel kernels. kSerial is the reference
// path kept for testing; kParallel uses OpenMP when it is available.
enum class Exec { kSerial, kParallel };

// Number of OpenMP threads the parallel path will use (1 without OpenMP).
int MaxThreads();

}  // namespace mango

#endif  // MANGO_EXEC_H_
