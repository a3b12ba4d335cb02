/* Copyright (c) 2026 The edgecl Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <algorithm>
#include <chrono>

namespace edgecl {

// Per-experience wall-clock seconds. Feature extraction runs while frames are
// gathered, so it is reported but left out of `overall`.
struct TimingBreakdown {
  double feature_extraction = 0.0;
  double forward = 0.0;
  double backward = 0.0;
  double weights_update = 0.0;

  double overall() const { return forward + backward + weights_update; }

  TimingBreakdown& operator+=(const TimingBreakdown& o) {
    feature_extraction += o.feature_extraction;
    forward += o.forward;
    backward += o.backward;
    weights_update += o.weights_update;
    return *this;
  }
};

// Adds the lifetime of the scope to `slot`.
class ScopedTimer {
 public:
  using clock = std::chrono::steady_clock;
  explicit ScopedTimer(double& slot) : slot_(slot), start_(clock::now()) {}
  ~ScopedTimer() { slot_ += std::chrono::duration<double>(clock::now() - start_).count(); }
  ScopedTimer(const ScopedTimer&) = delete;
  ScopedTimer& operator=(const ScopedTimer&) = delete;

 private:
  double& slot_;
  clock::time_point start_;
};

// Smallest observable steady_clock increment, measured.
inline double timer_granularity() {
  using clock = std::chrono::steady_clock;
  double best = 1.0;
  for (int i = 0; i < 200; ++i) {
    const auto a = clock::now();
    auto b = clock::now();
    while (b == a) b = clock::now();
    best = std::min(best, std::chrono::duration<double>(b - a).count());
  }
  return best;
}

}  // namespace edgecl
