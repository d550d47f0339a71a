#pragma once

// Host description stored on every record. Fields that cannot be read are
// left out rather than failing the run.

#include <sys/utsname.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "wattbench/rng.hpp"

#ifndef WATTBENCH_VERSION
#define WATTBENCH_VERSION "0.0.0"
#endif

namespace wattbench {

namespace host_detail {

inline std::string proc_field(const char* file, const std::string& key) {
  std::ifstream is(file);
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind(key, 0) != 0) continue;
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    auto v = line.substr(colon + 1);
    const auto b = v.find_first_not_of(" \t");
    return b == std::string::npos ? std::string() : v.substr(b);
  }
  return {};
}

}  // namespace host_detail

/// Hex FNV-1a of the raw config bytes.
inline std::string config_hash(const std::string& config_text) {
  return fmt::format("{:016x}", fnv1a64(config_text));
}

inline std::map<std::string, std::string> collect_host_metadata(const std::string& gpu_identity,
                                                                const std::string& config_text,
                                                                const std::filesystem::path& data_dir = ".") {
  std::map<std::string, std::string> m;
  m["harness_version"] = WATTBENCH_VERSION;
  m["gpu_identity"] = gpu_identity;
  m["config_hash"] = config_hash(config_text);
  if (auto cpu = host_detail::proc_field("/proc/cpuinfo", "model name"); !cpu.empty()) m["cpu_model"] = cpu;
  if (const auto n = std::thread::hardware_concurrency(); n > 0) m["cpu_cores"] = std::to_string(n);
  if (auto mem = host_detail::proc_field("/proc/meminfo", "MemTotal"); !mem.empty()) m["memory_total"] = mem;
  std::error_code ec;
  if (auto space = std::filesystem::space(data_dir, ec); !ec)
    m["disk_capacity_bytes"] = std::to_string(space.capacity);
  struct utsname u {};
  if (uname(&u) == 0) {
    m["os"] = fmt::format("{} {}", u.sysname, u.release);
    m["arch"] = u.machine;
    m["hostname"] = u.nodename;
  }
  return m;
}

/// Wall-clock instant, stored once per record next to the monotonic times.
inline std::string wall_clock_utc() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now())));
}

}  // namespace wattbench
