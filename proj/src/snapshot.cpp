#include "emhd/snapshot.hpp"

#include "emhd/errors.hpp"
#include "emhd/io_util.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace emhd {

namespace {

void put_le(std::ostream& os, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char bytes[8];
  std::memcpy(bytes, &bits, 8);
  os.write(bytes, 8);
}

double get_le(std::istream& is) {
  char bytes[8];
  if (!is.read(bytes, 8)) throw FormatError("sfld: truncated coefficient payload");
  std::uint64_t bits;
  std::memcpy(&bits, bytes, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

}  // namespace

void write_snapshot(std::ostream& os, const Field& u) {
  const auto& lat = u.lattice();
  nlohmann::json header = {{"format", "sfld"},
                           {"format_version", kSnapshotFormatVersion},
                           {"N", lat.N()},
                           {"lattice_scale", lat.lattice_scale()},
                           {"tag", u.tag()},
                           {"components", 3},
                           {"modes", lat.size()},
                           {"byte_order", "little"}};
  os << header.dump() << '\n';
  for (Eigen::Index i = 0; i < lat.size(); ++i)
    for (int c = 0; c < 3; ++c) {
      put_le(os, u.coeffs()(c, i).real());
      put_le(os, u.coeffs()(c, i).imag());
    }
  if (!os) throw FormatError("sfld: write failed");
}

Field read_snapshot(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("sfld: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("sfld: bad header: ") + e.what());
  }
  if (header.value("format", "") != "sfld" || header.value("format_version", -1) != kSnapshotFormatVersion)
    throw FormatError("sfld: unsupported format or version");
  WaveLattice lat(header.at("N").get<int>(), header.at("lattice_scale").get<double>());
  if (header.value("modes", Eigen::Index(-1)) != lat.size()) throw FormatError("sfld: mode count mismatch");
  Field u(lat, header.value("tag", std::string{}));
  for (Eigen::Index i = 0; i < lat.size(); ++i)
    for (int c = 0; c < 3; ++c) {
      const double re = get_le(is);
      const double im = get_le(is);
      u.coeffs()(c, i) = {re, im};
    }
  return u;
}

void save_snapshot(const std::filesystem::path& path, const Field& u) {
  write_atomically(path, [&](std::ostream& os) { write_snapshot(os, u); }, std::ios::binary);
}

Field load_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("sfld: cannot open " + path.string());
  return read_snapshot(is);
}

}  // namespace emhd
