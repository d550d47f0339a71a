#pragma once

// Telemetry providers and the fixed-rate sampler.

#include <dlfcn.h>

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "wattbench/clock.hpp"
#include "wattbench/error.hpp"
#include "wattbench/synthetic_device.hpp"
#include "wattbench/types.hpp"

namespace wattbench {

class TelemetryProvider {
 public:
  virtual ~TelemetryProvider() = default;
  /// Human-readable device identity, recorded in host metadata.
  virtual std::string identity() const = 0;
  virtual bool available() const = 0;
  /// One acquisition at run-clock time `now`. nullopt means the source is
  /// exhausted (replay) and sampling should end.
  virtual std::optional<TelemetrySample> read(double now) = 0;
};

class SyntheticProvider final : public TelemetryProvider {
 public:
  explicit SyntheticProvider(std::shared_ptr<SyntheticDevice> device) : device_(std::move(device)) {}

  std::string identity() const override { return "synthetic:" + device_->profile().name; }
  bool available() const override { return true; }
  std::optional<TelemetrySample> read(double now) override { return device_->read(now); }

  SyntheticDevice& device() { return *device_; }

 private:
  std::shared_ptr<SyntheticDevice> device_;
};

/// Plays a recorded trace back verbatim, one sample per read, ignoring the
/// clock. With rebase, timestamps are shifted so the first sample lands on
/// the first read instant (for driving live runs from a recording).
class ReplayProvider final : public TelemetryProvider {
 public:
  explicit ReplayProvider(TelemetryTrace trace, std::string source = "memory", bool rebase = false)
      : trace_(std::move(trace)), source_(std::move(source)), rebase_(rebase) {}

  std::string identity() const override { return "replay:" + source_; }
  bool available() const override { return true; }

  std::optional<TelemetrySample> read(double now) override {
    if (next_ >= trace_.samples.size()) return std::nullopt;
    auto s = trace_.samples[next_++];
    if (rebase_) {
      if (!offset_) offset_ = now - s.ts;
      s.ts += *offset_;
    }
    return s;
  }

 private:
  TelemetryTrace trace_;
  std::string source_;
  bool rebase_ = false;
  std::optional<double> offset_;
  std::size_t next_ = 0;
};

/// Thin shim over NVML, resolved at runtime with dlopen so the harness builds
/// and runs on hosts without the vendor library. Only the handful of entry
/// points needed for board power, temperature, utilization, memory and clock
/// are bound.
class NvmlProvider final : public TelemetryProvider {
 public:
  explicit NvmlProvider(unsigned index = 0, const char* library = "libnvidia-ml.so.1") : index_(index) {
    lib_ = dlopen(library, RTLD_NOW | RTLD_LOCAL);
    if (!lib_) return;
    init_ = reinterpret_cast<int (*)()>(dlsym(lib_, "nvmlInit_v2"));
    shutdown_ = reinterpret_cast<int (*)()>(dlsym(lib_, "nvmlShutdown"));
    handle_by_index_ = reinterpret_cast<int (*)(unsigned, void**)>(dlsym(lib_, "nvmlDeviceGetHandleByIndex_v2"));
    get_name_ = reinterpret_cast<int (*)(void*, char*, unsigned)>(dlsym(lib_, "nvmlDeviceGetName"));
    get_power_ = reinterpret_cast<int (*)(void*, unsigned*)>(dlsym(lib_, "nvmlDeviceGetPowerUsage"));
    get_temp_ = reinterpret_cast<int (*)(void*, int, unsigned*)>(dlsym(lib_, "nvmlDeviceGetTemperature"));
    get_util_ = reinterpret_cast<int (*)(void*, Utilization*)>(dlsym(lib_, "nvmlDeviceGetUtilizationRates"));
    get_mem_ = reinterpret_cast<int (*)(void*, Memory*)>(dlsym(lib_, "nvmlDeviceGetMemoryInfo"));
    get_clock_ = reinterpret_cast<int (*)(void*, int, unsigned*)>(dlsym(lib_, "nvmlDeviceGetClockInfo"));
    if (!init_ || !handle_by_index_ || !get_power_ || !get_temp_ || !get_util_ || !get_mem_ || !get_clock_)
      return;
    if (init_() != 0) return;
    initialized_ = true;
    if (handle_by_index_(index_, &device_) != 0) return;
    ready_ = true;
  }

  ~NvmlProvider() override {
    if (initialized_ && shutdown_) shutdown_();
    if (lib_) dlclose(lib_);
  }

  NvmlProvider(const NvmlProvider&) = delete;
  NvmlProvider& operator=(const NvmlProvider&) = delete;

  std::string identity() const override {
    if (!ready_) return "nvml:unavailable";
    char name[96] = {0};
    if (get_name_ && get_name_(device_, name, sizeof(name)) == 0) return fmt::format("nvml:{}:{}", index_, name);
    return fmt::format("nvml:{}", index_);
  }

  bool available() const override { return ready_; }

  std::optional<TelemetrySample> read(double now) override {
    if (!ready_) throw UnavailableError("nvml device not available");
    TelemetrySample s;
    s.ts = now;
    unsigned mw = 0, temp = 0, clock = 0;
    Utilization util{};
    Memory mem{};
    if (get_power_(device_, &mw) != 0) throw UnavailableError("nvmlDeviceGetPowerUsage failed");
    s.power_w = mw / 1000.0;
    if (get_temp_(device_, 0 /* NVML_TEMPERATURE_GPU */, &temp) == 0) s.temp_c = temp;
    if (get_util_(device_, &util) == 0) s.gpu_util_pct = util.gpu;
    if (get_mem_(device_, &mem) == 0) s.mem_used_mb = static_cast<double>(mem.used) / (1024.0 * 1024.0);
    if (get_clock_(device_, 0 /* NVML_CLOCK_GRAPHICS */, &clock) == 0) s.clock_mhz = clock;
    return s;
  }

 private:
  struct Utilization {
    unsigned gpu, memory;
  };
  struct Memory {
    unsigned long long total, free, used;
  };

  unsigned index_;
  void* lib_ = nullptr;
  void* device_ = nullptr;
  bool initialized_ = false;
  bool ready_ = false;
  int (*init_)() = nullptr;
  int (*shutdown_)() = nullptr;
  int (*handle_by_index_)(unsigned, void**) = nullptr;
  int (*get_name_)(void*, char*, unsigned) = nullptr;
  int (*get_power_)(void*, unsigned*) = nullptr;
  int (*get_temp_)(void*, int, unsigned*) = nullptr;
  int (*get_util_)(void*, Utilization*) = nullptr;
  int (*get_mem_)(void*, Memory*) = nullptr;
  int (*get_clock_)(void*, int, unsigned*) = nullptr;
};

/// Fixed-rate sampler running on its own thread. Samples are stamped at
/// acquisition; ticks are scheduled on an absolute grid so jitter does not
/// accumulate. Consumers may poll the growing buffer while sampling runs.
class Sampler {
 public:
  Sampler(TelemetryProvider& provider, double rate_hz) : provider_(provider), rate_hz_(rate_hz) {
    if (!(rate_hz > 0)) throw DomainError("sampler: rate must be > 0");
    if (!provider.available()) throw UnavailableError("telemetry provider unavailable: " + provider.identity());
    thread_ = std::jthread([this](std::stop_token st) { loop(st); });
  }

  ~Sampler() { halt(); }

  Sampler(const Sampler&) = delete;
  Sampler& operator=(const Sampler&) = delete;

  double rate_hz() const { return rate_hz_; }

  /// Copies samples [from, end) acquired so far.
  std::vector<TelemetrySample> poll(std::size_t from) const {
    std::lock_guard lock(mu_);
    if (from >= samples_.size()) return {};
    return {samples_.begin() + static_cast<std::ptrdiff_t>(from), samples_.end()};
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return samples_.size();
  }

  std::optional<double> last_ts() const {
    std::lock_guard lock(mu_);
    if (samples_.empty()) return std::nullopt;
    return samples_.back().ts;
  }

  bool exhausted() const { return exhausted_.load(); }

  /// Provider error that ended sampling early, if any.
  std::string failure() const {
    std::lock_guard lock(mu_);
    return failure_;
  }

  /// Blocks until a sample at or after t has been acquired (or the source ends).
  void wait_for_ts(double t) const {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return exhausted_.load() || (!samples_.empty() && samples_.back().ts >= t); });
  }

  /// Stops the thread and returns the complete, immutable trace.
  TelemetryTrace stop() {
    halt();
    std::lock_guard lock(mu_);
    TelemetryTrace trace;
    trace.nominal_rate_hz = rate_hz_;
    trace.samples = std::move(samples_);
    samples_.clear();
    return trace;
  }

 private:
  void halt() {
    if (thread_.joinable()) {
      thread_.request_stop();
      thread_.join();
    }
  }

  void loop(std::stop_token st) {
    const double start = RunClock::now();
    for (std::uint64_t k = 0; !st.stop_requested(); ++k) {
      const double target = start + static_cast<double>(k) / rate_hz_;
      RunClock::sleep_until(target);
      if (st.stop_requested()) break;
      std::optional<TelemetrySample> s;
      try {
        s = provider_.read(RunClock::now());
      } catch (const std::exception& e) {
        std::lock_guard lock(mu_);
        failure_ = e.what();
        s.reset();
      }
      if (!s) {
        exhausted_ = true;
        cv_.notify_all();
        return;
      }
      {
        std::lock_guard lock(mu_);
        if (samples_.empty() || s->ts > samples_.back().ts) samples_.push_back(*s);
      }
      cv_.notify_all();
    }
  }

  TelemetryProvider& provider_;
  double rate_hz_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<TelemetrySample> samples_;
  std::string failure_;
  std::atomic<bool> exhausted_{false};
  std::jthread thread_;
};

/// Convenience factory mirroring the start/stop contract.
inline std::unique_ptr<Sampler> start_sampling(TelemetryProvider& provider, double rate_hz = 10.0) {
  return std::make_unique<Sampler>(provider, rate_hz);
}

}  // namespace wattbench
