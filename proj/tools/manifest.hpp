#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lfmgan::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// What a command wrote and under which settings. Emitted once at the end of
// a successful run, via a temp file and rename, so a reader never observes a
// partial manifest. Every listed file must exist at write time.
struct RunManifest {
  std::string command;
  uint64_t seed = 0;
  std::string config_text;
  std::chrono::system_clock::time_point started;
  std::chrono::system_clock::time_point finished;
  std::vector<std::filesystem::path> files;
};

inline std::string utc_stamp(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  namespace fs = std::filesystem;
  const fs::path dir = path.parent_path();
  for (const fs::path& f : m.files) {
    if (!fs::exists(f)) throw std::runtime_error("manifest: listed file missing: " + f.string());
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("manifest: cannot open '" + tmp.string() + "'");
    out << "tool = lfmgan " << kToolVersion << "\n";
    out << "command = " << m.command << "\n";
    out << "seed = " << m.seed << "\n";
    out << "started = " << utc_stamp(m.started) << "\n";
    out << "finished = " << utc_stamp(m.finished) << "\n";
    out << "files:\n";
    for (const fs::path& f : m.files) {
      std::error_code ec;
      fs::path rel = fs::relative(f, dir, ec);
      out << "  " << (ec || rel.empty() ? f.string() : rel.string()) << "\n";
    }
    // Config text goes last: it is free-form lines and ends the record.
    if (!m.config_text.empty()) {
      out << "config:\n" << m.config_text;
      if (m.config_text.back() != '\n') out << "\n";
    }
    if (!out) throw std::runtime_error("manifest: write failed on '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

}  // namespace lfmgan::cli
