/* Copyright 2026 The Netscale Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace netscale {

// Error categories surfaced to callers. The CLI maps kInvariant to exit 2.
enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kCapacityExceeded,
  kUnreachable,
  kOutOfOrder,
  kUnsupported,
  kInvariant,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

// Simulation time is integer microseconds.
using SimTime = int64_t;

constexpr SimTime kUsPerMs = 1000;
constexpr SimTime kUsPerSec = 1000000;

inline SimTime ms_to_us(double ms) {
  return static_cast<SimTime>(ms * kUsPerMs + (ms >= 0 ? 0.5 : -0.5));
}
inline SimTime sec_to_us(double s) { return ms_to_us(s * 1000.0); }
inline double us_to_ms(SimTime us) { return static_cast<double>(us) / kUsPerMs; }
inline double us_to_sec(SimTime us) {
  return static_cast<double>(us) / kUsPerSec;
}

// Bandwidths are decimal gigabits per second: 1 Gbps = 0.125e9 bytes/s.
constexpr double kBytesPerSecPerGbps = 0.125e9;

// Seconds to move `bytes` over `gbps` scaled by `efficiency`.
inline double transfer_seconds(double bytes, double gbps,
                               double efficiency = 1.0) {
  if (gbps <= 0.0 || efficiency <= 0.0) {
    fail(ErrorCode::kInvalidArgument, "transfer over non-positive bandwidth");
  }
  return bytes / (gbps * efficiency * kBytesPerSecPerGbps);
}

}  // namespace netscale
