#pragma once

// `.sfld` field snapshots: one line of JSON metadata terminated by '\n',
// followed by little-endian float64 (re, im) pairs for components x, y, z of
// each mode in lexicographic mode order (kx slowest).

#include "emhd/spectral_field.hpp"

#include <filesystem>
#include <iosfwd>

namespace emhd {

inline constexpr int kSnapshotFormatVersion = 1;

void write_snapshot(std::ostream& os, const Field& u);
Field read_snapshot(std::istream& is);

/// Writes through a temporary file and renames it into place.
void save_snapshot(const std::filesystem::path& path, const Field& u);
Field load_snapshot(const std::filesystem::path& path);

}  // namespace emhd
