#pragma once

// Constructors for test ensembles and analytic reference fields.

#include "emhd/spectral.hpp"

#include <cstdint>
#include <random>

namespace emhd {

/// Reality-symmetric, mean-zero, Leray-projected field with
/// |u^(k)| ~ amplitude |k|^{-decay} times a seeded random unit direction.
/// Deterministic in (seed, N, decay, amplitude, lattice_scale).
template <typename S = double>
SpectralField<S> random_divfree_field(std::uint64_t seed, int N, double decay, double amplitude,
                                      double lattice_scale = 1.0) {
  if (!(decay > 0.0)) throw std::invalid_argument("random_divfree_field: decay must be > 0");
  WaveLattice lat(N, lattice_scale);
  SpectralField<S> u(lat, "random_divfree_field");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = lat.zero_index() + 1; i < lat.size(); ++i) {
    Eigen::Vector3cd v;
    for (int c = 0; c < 3; ++c) v(c) = {gauss(rng), gauss(rng)};
    const double len = v.norm();
    const double mag = amplitude * std::pow(std::sqrt(double(lat.norm2()(i))), -decay);
    u.set_mode(lat.mode(i), (v * (mag / len)).template cast<std::complex<S>>());
  }
  return leray_project(u);
}

/// Unit complex vector h with i k x h = helicity |k| h (a curl eigenvector).
inline Eigen::Vector3cd helical_basis(const Mode& k, int helicity) {
  const Eigen::Vector3d kv(k[0], k[1], k[2]);
  const Eigen::Vector3d khat = kv.normalized();
  const Eigen::Vector3d ref = std::abs(khat.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d e1 = khat.cross(ref).normalized();
  const Eigen::Vector3d e2 = khat.cross(e1);
  const std::complex<double> i(0, 1);
  return (e1.cast<std::complex<double>>() + double(helicity) * i * e2.cast<std::complex<double>>()) /
         std::sqrt(2.0);
}

/// B = (sin z, cos z, 0): a curl eigenfield with eigenvalue +1 on the unit shell.
template <typename S = double>
SpectralField<S> beltrami_sin_cos(const WaveLattice& lat) {
  using C = std::complex<S>;
  SpectralField<S> b(lat, "beltrami_sin_cos");
  b.set_mode({0, 0, 1}, typename SpectralField<S>::Vector(C(0, S(-0.5)), C(S(0.5), 0), C(0)));
  return b;
}

/// Random combination of helical modes on the shell |k|^2 = shell_norm2, all of
/// one helicity, so curl B = helicity |k| B exactly. Requires the shell to be
/// nonempty inside the lattice.
template <typename S = double>
SpectralField<S> random_shell_eigenfield(const WaveLattice& lat, int shell_norm2, int helicity,
                                         std::uint64_t seed, double amplitude = 1.0) {
  SpectralField<S> b(lat, "shell_eigenfield");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool any = false;
  for (Eigen::Index i = lat.zero_index() + 1; i < lat.size(); ++i) {
    if (lat.norm2()(i) != shell_norm2) continue;
    const Mode k = lat.mode(i);
    const std::complex<double> c(gauss(rng), gauss(rng));
    b.set_mode(k, (amplitude * c * helical_basis(k, helicity)).template cast<std::complex<S>>());
    any = true;
  }
  if (!any) throw std::invalid_argument("random_shell_eigenfield: shell has no lattice points");
  return b;
}

/// Keeps only modes with max(|kx|,|ky|,|kz|) <= radius.
template <typename S>
SpectralField<S> band_limit(SpectralField<S> u, int radius) {
  const auto& lat = u.lattice();
  for (Eigen::Index i = 0; i < lat.size(); ++i) {
    const Mode k = lat.mode(i);
    if (std::max({std::abs(k[0]), std::abs(k[1]), std::abs(k[2])}) > radius) u.coeffs().col(i).setZero();
  }
  return u;
}

/// Copies the overlapping modes of u onto another lattice with the same scale.
template <typename S>
SpectralField<S> resample(const SpectralField<S>& u, const WaveLattice& target) {
  if (u.lattice().lattice_scale() != target.lattice_scale())
    throw std::invalid_argument("resample: lattice_scale mismatch");
  SpectralField<S> out(target, u.tag());
  for (Eigen::Index i = 0; i < target.size(); ++i) {
    const Mode k = target.mode(i);
    if (u.lattice().contains(k)) out.coeffs().col(i) = u.coeffs().col(u.lattice().index(k));
  }
  return out;
}

/// u rescaled so that its Gevrey norm at (radius, sigma, s) equals target.
template <typename S>
SpectralField<S> scale_to_gevrey_norm(const SpectralField<S>& u, S target, S radius, S sigma, S s) {
  const S g = gevrey_norm(u, radius, sigma, s);
  if (!(g > S(0))) throw std::invalid_argument("scale_to_gevrey_norm: field has zero norm");
  return (target / g) * u;
}

}  // namespace emhd
