#pragma once

#include "emhd/errors.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

namespace emhd {

/// Runs write(stream) into `path.tmp` and renames it over `path`.
template <typename Writer>
void write_atomically(const std::filesystem::path& path, Writer&& write,
                      std::ios::openmode mode = std::ios::openmode{}) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, mode | std::ios::out | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + tmp.string() + " for writing");
    write(os);
    os.flush();
    if (!os) throw FormatError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Shortest round-trip decimal text for a double ("%.17g").
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// splitmix64 finalizer; derives independent stream seeds from (master, index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace emhd
