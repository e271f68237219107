#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace emhd {

using Mode = std::array<int, 3>;

/// Integer wave-vector cube {-N..N}^3; the physical wave vector of mode k is
/// lattice_scale * k. Modes are stored in lexicographic order with kx varying
/// slowest, so the mirror of index i is size() - 1 - i.
class WaveLattice {
 public:
  WaveLattice(int N, double lattice_scale = 1.0) : N_(N), scale_(lattice_scale) {
    if (N < 1) throw std::invalid_argument("WaveLattice: N must be >= 1");
    if (!(lattice_scale > 0.0) || !std::isfinite(lattice_scale))
      throw std::invalid_argument("WaveLattice: lattice_scale must be > 0");
    const int side = 2 * N + 1;
    auto k2 = std::make_shared<Eigen::ArrayXi>(side * side * side);
    for (int i = 0; i < side * side * side; ++i) {
      const Mode k = mode_of(i, N);
      (*k2)(i) = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    }
    norm2_ = std::move(k2);
  }

  int N() const noexcept { return N_; }
  double lattice_scale() const noexcept { return scale_; }
  int side() const noexcept { return 2 * N_ + 1; }
  Eigen::Index size() const noexcept { return Eigen::Index(side()) * side() * side(); }
  Eigen::Index zero_index() const noexcept { return (size() - 1) / 2; }

  bool contains(const Mode& k) const noexcept {
    return std::abs(k[0]) <= N_ && std::abs(k[1]) <= N_ && std::abs(k[2]) <= N_;
  }
  Eigen::Index index(const Mode& k) const noexcept {
    return (Eigen::Index(k[0] + N_) * side() + (k[1] + N_)) * side() + (k[2] + N_);
  }
  Mode mode(Eigen::Index i) const noexcept { return mode_of(i, N_); }
  Eigen::Index mirror(Eigen::Index i) const noexcept { return size() - 1 - i; }

  /// Integer |k|^2 for every stored mode.
  const Eigen::ArrayXi& norm2() const noexcept { return *norm2_; }

  /// Largest physical |lambda k| in the cube.
  double max_wavenumber() const noexcept { return scale_ * N_ * std::sqrt(3.0); }

  friend bool operator==(const WaveLattice& a, const WaveLattice& b) noexcept {
    return a.N_ == b.N_ && a.scale_ == b.scale_;
  }

 private:
  static Mode mode_of(Eigen::Index i, int N) noexcept {
    const int side = 2 * N + 1;
    const int kz = int(i % side) - N;
    const int ky = int((i / side) % side) - N;
    const int kx = int(i / (Eigen::Index(side) * side)) - N;
    return {kx, ky, kz};
  }

  int N_;
  double scale_;
  std::shared_ptr<const Eigen::ArrayXi> norm2_;
};

/// Physical wavenumbers |lambda k|^r for every mode, with the zero mode set to 0.
template <typename Scalar = double>
Eigen::Array<Scalar, Eigen::Dynamic, 1> wavenumber_pow(const WaveLattice& lat, Scalar r) {
  using std::pow;
  using std::sqrt;
  const Scalar scale(lat.lattice_scale());
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out(lat.size());
  for (Eigen::Index i = 0; i < lat.size(); ++i) {
    const int n2 = lat.norm2()(i);
    out(i) = n2 == 0 ? Scalar(0) : pow(scale * sqrt(Scalar(n2)), r);
  }
  return out;
}

}  // namespace emhd
