// Copyright 2026 The latflow Authors
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


// Index-parallel loops. Results must be written by index so the outcome does
// not depend on scheduling. LATFLOW_THREADS caps the worker count.

#ifndef LATFLOW_PARALLEL_HPP_
#define LATFLOW_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace latflow {

// Worker count: LATFLOW_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
int thread_count();

// Calls fn(j) for j in [0, n). The first exception thrown by any call is
// rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace latflow

#endif  // LATFLOW_PARALLEL_HPP_
