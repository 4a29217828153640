#pragma once

#include <cmath>
#include <cstdint>

namespace crsim {

// Simulation time in integer microseconds. Microseconds represent every
// duration used by the model exactly: a 0.1 ms/MHz retune step is 100 us,
// a 0.1 s frame is 100000 us, a 3600 s horizon is 3.6e9 us.
using SimTime = std::int64_t;

constexpr SimTime kMicrosPerSecond = 1'000'000;
constexpr SimTime kMicrosPerMilli = 1'000;

inline SimTime seconds_to_us(double s) {
  return static_cast<SimTime>(std::llround(s * 1e6));
}

inline SimTime millis_to_us(double ms) {
  return static_cast<SimTime>(std::llround(ms * 1e3));
}

inline double us_to_seconds(SimTime us) {
  return static_cast<double>(us) / 1e6;
}

}  // namespace crsim
