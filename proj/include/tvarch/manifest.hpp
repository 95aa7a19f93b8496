#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "tvarch/version.hpp"

namespace tvarch {

// Reproduction record written next to every command's outputs. Outputs are
// pure functions of (config digest, seed); the timestamp documents the run
// and is the only field that varies between identical runs.
struct RunManifest {
  std::string command;
  std::string config_digest;
  std::uint64_t base_seed = 0;
  std::string version = kVersion;
  std::string timestamp;
  std::vector<std::string> outputs;

  static std::string now_utc() {
    const auto t = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
  }

  void write(std::ostream& os) const {
    os << "command = " << command << "\n";
    os << "config_digest = " << config_digest << "\n";
    os << "base_seed = " << base_seed << "\n";
    os << "version = " << version << "\n";
    os << "timestamp = " << timestamp << "\n";
    for (const auto& o : outputs) os << "output = " << o << "\n";
  }

  void write_file(const std::string& path) const {
    std::ofstream os(path);
    write(os);
  }
};

}  // namespace tvarch
