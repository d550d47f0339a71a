#pragma once

#include <chrono>
#include <thread>

namespace wattbench {

/// Monotonic run clock: seconds as double since process start.
/// Wall-clock time is stored once per run in host metadata.
class RunClock {
 public:
  using steady = std::chrono::steady_clock;

  static double now() {
    return std::chrono::duration<double>(steady::now() - origin()).count();
  }

  static steady::time_point to_time_point(double t) {
    return origin() + std::chrono::duration_cast<steady::duration>(
                          std::chrono::duration<double>(t));
  }

  static void sleep_until(double t) { std::this_thread::sleep_until(to_time_point(t)); }

 private:
  static steady::time_point origin() {
    static const steady::time_point t0 = steady::now();
    return t0;
  }
};

}  // namespace wattbench
