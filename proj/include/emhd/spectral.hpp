#pragma once

// Fourier multipliers, differential operators and norms on SpectralField.
// All norms use the coefficient-space convention: (sum_k w(k) |u^(k)|^2)^(1/2)
// with no volume factor.

#include "emhd/errors.hpp"
#include "emhd/spectral_field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace emhd {

/// Lambda^r: mode k scaled by |lambda k|^r; the zero mode maps to 0.
template <typename S>
SpectralField<S> lambda_pow(const SpectralField<S>& u, S r) {
  return apply_multiplier(u, wavenumber_pow<S>(u.lattice(), r));
}

/// Throws AmplificationOverflow if e^{phi |lambda k|^s} can exceed e^700 on
/// the lattice (only positive phi can trip it).
inline void check_amplification(const WaveLattice& lat, double phi, double s, const char* who) {
  const double arg = phi * std::pow(lat.max_wavenumber(), s);
  if (arg > kMaxExponent) {
    std::ostringstream os;
    os << who << ": exponent " << arg << " exceeds " << kMaxExponent << " (phi=" << phi << ", s=" << s
       << ", N=" << lat.N() << ")";
    throw AmplificationOverflow(os.str());
  }
}

/// e^{phi Lambda^s}; negative phi realizes the damping direction.
template <typename S>
SpectralField<S> gevrey_mult(const SpectralField<S>& u, S phi, S s) {
  using std::exp;
  check_amplification(u.lattice(), double(phi), double(s), "gevrey_mult");
  if (phi == S(0)) return u;
  Eigen::Array<S, Eigen::Dynamic, 1> f = wavenumber_pow<S>(u.lattice(), s);
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = exp(phi * f(i));
  return apply_multiplier(u, f);
}

/// i (lambda k) x u^(k).
template <typename S>
SpectralField<S> curl(const SpectralField<S>& u) {
  using C = std::complex<S>;
  const auto& lat = u.lattice();
  const S scale(lat.lattice_scale());
  SpectralField<S> out(lat, u.tag());
  for (Eigen::Index i = 0; i < lat.size(); ++i) {
    const Mode k = lat.mode(i);
    const C ikx(0, scale * k[0]), iky(0, scale * k[1]), ikz(0, scale * k[2]);
    const auto v = u.coeffs().col(i);
    out.coeffs()(0, i) = iky * v(2) - ikz * v(1);
    out.coeffs()(1, i) = ikz * v(0) - ikx * v(2);
    out.coeffs()(2, i) = ikx * v(1) - iky * v(0);
  }
  return out;
}

/// u^(k) - k (k . u^(k)) / |k|^2; removes the gradient part.
template <typename S>
SpectralField<S> leray_project(const SpectralField<S>& u) {
  using C = std::complex<S>;
  const auto& lat = u.lattice();
  SpectralField<S> out = u;
  for (Eigen::Index i = 0; i < lat.size(); ++i) {
    const int n2 = lat.norm2()(i);
    if (n2 == 0) {
      out.coeffs().col(i).setZero();
      continue;
    }
    const Mode k = lat.mode(i);
    const Eigen::Matrix<C, 3, 1> kv{C(S(k[0])), C(S(k[1])), C(S(k[2]))};
    const C kdotu = kv.transpose() * u.coeffs().col(i);
    out.coeffs().col(i) -= kv * (kdotu / S(n2));
  }
  return out;
}

/// Scaled sqrt(sum a_i^2) that survives entries near the overflow limit.
template <typename S>
S scaled_l2(const Eigen::Array<S, Eigen::Dynamic, 1>& a) {
  using std::sqrt;
  const S m = a.size() ? a.abs().maxCoeff() : S(0);
  if (m == S(0) || !std::isfinite(double(m))) return m;
  return m * sqrt((a / m).square().sum());
}

template <typename S>
Eigen::Array<S, Eigen::Dynamic, 1> mode_magnitudes(const SpectralField<S>& u) {
  return u.coeffs().colwise().stableNorm().transpose().array();
}

/// (sum_k |lambda k|^{2r} |u^(k)|^2)^(1/2) over all stored modes.
template <typename S>
S sobolev_norm(const SpectralField<S>& u, S r) {
  return scaled_l2<S>(mode_magnitudes(u) * wavenumber_pow<S>(u.lattice(), r));
}

template <typename S>
S l2_norm(const SpectralField<S>& u) {
  return scaled_l2<S>(mode_magnitudes(u));
}

/// (sum_k e^{2 phi |lambda k|^s} |lambda k|^{2 sigma s} |u^(k)|^2)^(1/2).
template <typename S>
S gevrey_norm(const SpectralField<S>& u, S phi, S sigma, S s) {
  using std::exp;
  check_amplification(u.lattice(), double(phi), double(s), "gevrey_norm");
  const auto ks = wavenumber_pow<S>(u.lattice(), s);
  Eigen::Array<S, Eigen::Dynamic, 1> a = mode_magnitudes(u);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (ks(i) == S(0)) {
      a(i) = S(0);
      continue;
    }
    a(i) *= exp(phi * ks(i)) * exp(sigma * std::log(ks(i)));
  }
  return scaled_l2<S>(a);
}

/// Real L^2 pairing sum_k u^(k) . conj(v^(k)).
template <typename S>
S inner(const SpectralField<S>& u, const SpectralField<S>& v) {
  u.check_same(v);
  return (u.coeffs().array() * v.coeffs().array().conjugate()).sum().real();
}

/// max_k |k . u^(k)| / (|k| |u^(k)|) over modes with u^(k) != 0.
template <typename S>
S divergence_residual(const SpectralField<S>& u) {
  using std::abs;
  using std::sqrt;
  const auto& lat = u.lattice();
  S worst(0);
  for (Eigen::Index i = 0; i < lat.size(); ++i) {
    const int n2 = lat.norm2()(i);
    const S mag = u.coeffs().col(i).norm();
    if (n2 == 0 || mag == S(0)) continue;
    const Mode k = lat.mode(i);
    const auto c = u.coeffs().col(i);
    const std::complex<S> d = S(k[0]) * c(0) + S(k[1]) * c(1) + S(k[2]) * c(2);
    worst = std::max(worst, S(abs(d) / (sqrt(S(n2)) * mag)));
  }
  return worst;
}

/// max_k |u^(-k) - conj(u^(k))| relative to the largest coefficient, plus |u^(0)|.
template <typename S>
S reality_residual(const SpectralField<S>& u) {
  const auto& lat = u.lattice();
  const S scale = std::max(mode_magnitudes(u).maxCoeff(), S(1e-300));
  S worst = u.coeffs().col(lat.zero_index()).norm() / scale;
  for (Eigen::Index i = 0; i < lat.zero_index(); ++i)
    worst = std::max(worst, S((u.coeffs().col(lat.mirror(i)) - u.coeffs().col(i).conjugate()).norm() / scale));
  return worst;
}

}  // namespace emhd
