#pragma once

// The EMHD nonlinearity P(B) = curl((curl B) x B) = (B.grad)J - (J.grad)B and
// its shifted form Q(U) = Gamma P(Gamma^{-1} U) with Gamma = e^{-theta Lambda^a}.

#include "emhd/errors.hpp"
#include "emhd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace emhd {

enum class NonlinearForm { Curl, Transport };

/// Fft: zero-padded dealiased transforms (double only). Direct: exact mode
/// sums. Auto: Fft for unshifted evaluation, Direct otherwise.
enum class Evaluator { Auto, Fft, Direct };

template <typename S>
using CVec3 = Eigen::Matrix<std::complex<S>, 3, 1>;

template <typename S>
inline CVec3<S> cross(const CVec3<S>& a, const CVec3<S>& b) {
  return {a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0)};
}

template <typename S>
inline CVec3<S> i_wavevector(const Mode& k, S scale) {
  using C = std::complex<S>;
  return {C(0, scale * k[0]), C(0, scale * k[1]), C(0, scale * k[2])};
}

// ---------------------------------------------------------------------------
// Oracle: literal O(M^2) double sum over mode pairs.

/// Bilinear stencils: contribution of the pair (A at j, C at l) to mode j + l.
namespace stencil {

/// i(j+l) x ((i j x a) x c): the curl form.
template <typename S>
struct CurlForm {
  S scale = S(1);
  CVec3<S> operator()(const Mode& j, const Mode& l, const CVec3<S>& a, const CVec3<S>& c) const {
    const Mode k{j[0] + l[0], j[1] + l[1], j[2] + l[2]};
    return cross<S>(i_wavevector<S>(k, scale), cross<S>(cross<S>(i_wavevector<S>(j, scale), a), c));
  }
};

/// (a . i l)(i l x c) - ((i j x a) . i l) c: the transport form with A = C = B.
template <typename S>
struct TransportForm {
  S scale = S(1);
  CVec3<S> operator()(const Mode& j, const Mode& l, const CVec3<S>& a, const CVec3<S>& c) const {
    const CVec3<S> il = i_wavevector<S>(l, scale);
    const CVec3<S> jc = cross<S>(il, c);
    const CVec3<S> ja = cross<S>(i_wavevector<S>(j, scale), a);
    return (a.transpose() * il)(0) * jc - (ja.transpose() * il)(0) * c;
  }
};

/// Componentwise product a_c * c_c.
template <typename S>
struct Pointwise {
  CVec3<S> operator()(const Mode&, const Mode&, const CVec3<S>& a, const CVec3<S>& c) const {
    return a.cwiseProduct(c);
  }
};

}  // namespace stencil

/// Exact double sum of `rule` over all pairs (j, l) of nonzero stored modes,
/// accumulated on the padded cube of radius 2N.
template <typename S, typename Rule>
SpectralField<S> convolution_oracle_padded(const SpectralField<S>& A, const SpectralField<S>& C, const Rule& rule) {
  A.check_same(C);
  const auto& lat = A.lattice();
  const WaveLattice padded(2 * lat.N(), lat.lattice_scale());
  SpectralField<S> out(padded, "convolution_oracle");
  std::vector<Eigen::Index> nzA, nzC;
  for (Eigen::Index i = 0; i < lat.size(); ++i) {
    if (A.coeffs().col(i).squaredNorm() != S(0)) nzA.push_back(i);
    if (C.coeffs().col(i).squaredNorm() != S(0)) nzC.push_back(i);
  }
  for (Eigen::Index ia : nzA) {
    const Mode j = lat.mode(ia);
    const CVec3<S> a = A.coeffs().col(ia);
    for (Eigen::Index ic : nzC) {
      const Mode l = lat.mode(ic);
      const Mode k{j[0] + l[0], j[1] + l[1], j[2] + l[2]};
      out.coeffs().col(padded.index(k)) += rule(j, l, a, CVec3<S>(C.coeffs().col(ic)));
    }
  }
  return out;
}

/// convolution_oracle_padded restricted back to the input lattice.
template <typename S, typename Rule>
SpectralField<S> convolution_oracle(const SpectralField<S>& A, const SpectralField<S>& C, const Rule& rule) {
  const SpectralField<S> padded = convolution_oracle_padded(A, C, rule);
  const auto& lat = A.lattice();
  SpectralField<S> out(lat, "convolution_oracle");
  for (Eigen::Index i = 0; i < lat.size(); ++i) out.coeffs().col(i) = padded[lat.mode(i)];
  return out;
}

/// P(B) evaluated by the oracle double sum.
template <typename S>
SpectralField<S> p_nonlinear_oracle(const SpectralField<S>& B, NonlinearForm form) {
  const S scale(B.lattice().lattice_scale());
  if (form == NonlinearForm::Curl) return convolution_oracle(B, B, stencil::CurlForm<S>{scale});
  return convolution_oracle(B, B, stencil::TransportForm<S>{scale});
}

/// Gamma P(Gamma^{-1} U) composed literally from three multiplier/oracle steps.
template <typename S>
SpectralField<S> q_shifted_oracle(const SpectralField<S>& U, S theta, S shift_exp) {
  return gevrey_mult(p_nonlinear_oracle(gevrey_mult(U, theta, shift_exp), NonlinearForm::Curl), -theta, shift_exp);
}

// ---------------------------------------------------------------------------
// Exact direct-sum evaluator for the shifted curl form.

/// Optional pruning for the direct sum. Modes j with
/// e^{rho |j|^a} (1 + |j|) |U_j| < drop_tol * max(...) are treated as zero,
/// where rho = max(weight_radius, theta). For output weights e^{rho |k|^a}
/// the discarded pairs change no weighted coefficient by more than
/// drop_tol * max^2 per pair. drop_tol = 0 keeps every nonzero mode.
struct DirectSumOptions {
  double weight_radius = 0.0;
  double drop_tol = 0.0;
};

/// Bound that the pair weight e^{theta(|j|^a + |k-j|^a - |k|^a)} and its
/// factors stay below e^700 on the lattice.
inline void check_shift_guard(const WaveLattice& lat, double theta, double shift_exp) {
  const double arg = std::abs(theta) * std::pow(2.0 * lat.max_wavenumber(), shift_exp);
  if (arg > kMaxExponent) {
    throw AmplificationOverflow("q_shifted: |theta| (2 lambda N sqrt3)^a = " + std::to_string(arg) +
                                " exceeds 700 (theta=" + std::to_string(theta) + ")");
  }
}

/// Q(U) = e^{-theta Lambda^a} curl((curl U~) x U~), U~ = e^{theta Lambda^a} U,
/// as an exact sum over pairs (j, k-j) inside the cube. The pair weight
/// e^{theta(|j|^a + |k-j|^a - |k|^a)} is applied as its three per-mode
/// factors; for fixed k the outer factor is common to every term.
template <typename S>
SpectralField<S> q_shifted_direct(const SpectralField<S>& U, S theta, S shift_exp, const DirectSumOptions& opt = {}) {
  using C = std::complex<S>;
  using std::exp;
  const auto& lat = U.lattice();
  check_shift_guard(lat, double(theta), double(shift_exp));
  const int N = lat.N();
  const int side = lat.side();
  const Eigen::Index M = lat.size();
  const S scale(lat.lattice_scale());
  const auto ka = wavenumber_pow<S>(lat, shift_exp);

  // Amplified field and its curl in structure-of-arrays layout (re/im split).
  enum { BXr, BXi, BYr, BYi, BZr, BZi, JXr, JXi, JYr, JYi, JZr, JZi, kArrays };
  std::vector<std::vector<S>> f(kArrays, std::vector<S>(M));
  for (Eigen::Index i = 0; i < M; ++i) {
    const S amp = theta == S(0) ? S(1) : exp(theta * ka(i));
    const auto u = U.coeffs().col(i);
    const C b0 = amp * u(0), b1 = amp * u(1), b2 = amp * u(2);
    const Mode k = lat.mode(i);
    const C ikx(0, scale * k[0]), iky(0, scale * k[1]), ikz(0, scale * k[2]);
    const C j0 = iky * b2 - ikz * b1, j1 = ikz * b0 - ikx * b2, j2 = ikx * b1 - iky * b0;
    const C vals[6] = {b0, b1, b2, j0, j1, j2};
    for (int c = 0; c < 6; ++c) {
      f[2 * c][i] = vals[c].real();
      f[2 * c + 1][i] = vals[c].imag();
    }
  }

  // Active box radius (max-norm) after pruning.
  int R = 0;
  {
    const double rho = std::max(opt.weight_radius, double(theta));
    std::vector<double> w(M, 0.0);
    double wmax = 0.0;
    for (Eigen::Index i = 0; i < M; ++i) {
      const double mag = double(U.coeffs().col(i).norm());
      if (mag == 0.0) continue;
      const double kk = double(ka(i));
      w[i] = opt.drop_tol > 0.0 ? mag * std::exp(rho * kk) * (1.0 + std::sqrt(double(lat.norm2()(i))) * double(scale))
                                : mag;
      wmax = std::max(wmax, w[i]);
    }
    const double cut = opt.drop_tol * wmax;
    for (Eigen::Index i = 0; i < M; ++i) {
      if (w[i] == 0.0 || w[i] < cut) continue;
      const Mode k = lat.mode(i);
      R = std::max({R, std::abs(k[0]), std::abs(k[1]), std::abs(k[2])});
    }
  }

  SpectralField<S> out(lat, "q_shifted");
  if (R == 0) return out;
  const int K = std::min(N, 2 * R);
  auto idx = [&](int x, int y, int z) { return (Eigen::Index(x + N) * side + (y + N)) * side + (z + N); };
  const S *bxr = f[BXr].data(), *bxi = f[BXi].data(), *byr = f[BYr].data(), *byi = f[BYi].data();
  const S *bzr = f[BZr].data(), *bzi = f[BZi].data(), *jxr = f[JXr].data(), *jxi = f[JXi].data();
  const S *jyr = f[JYr].data(), *jyi = f[JYi].data(), *jzr = f[JZr].data(), *jzi = f[JZi].data();

  for (int kx = 0; kx <= K; ++kx) {
    for (int ky = (kx == 0 ? 0 : -K); ky <= K; ++ky) {
      for (int kz = (kx == 0 && ky == 0 ? 1 : -K); kz <= K; ++kz) {
        // X_k = sum_j J_j x B_{k-j}, with B_{k-j} = conj(B_{j-k}) so that both
        // operands are read in increasing memory order.
        S xr(0), xi(0), yr(0), yi(0), zr(0), zi(0);
        const int x0 = std::max(-R, kx - R), x1 = std::min(R, kx + R);
        const int y0 = std::max(-R, ky - R), y1 = std::min(R, ky + R);
        const int z0 = std::max(-R, kz - R), z1 = std::min(R, kz + R);
        const int nz = z1 - z0 + 1;
        for (int px = x0; px <= x1; ++px) {
          for (int py = y0; py <= y1; ++py) {
            const Eigen::Index a = idx(px, py, z0);
            const Eigen::Index b = idx(px - kx, py - ky, z0 - kz);
            for (int t = 0; t < nz; ++t) {
              const S Jxr = jxr[a + t], Jxi = jxi[a + t], Jyr = jyr[a + t], Jyi = jyi[a + t];
              const S Jzr = jzr[a + t], Jzi = jzi[a + t];
              // conj(B_{j-k})
              const S Bxr = bxr[b + t], Bxi = -bxi[b + t], Byr = byr[b + t], Byi = -byi[b + t];
              const S Bzr = bzr[b + t], Bzi = -bzi[b + t];
              xr += (Jyr * Bzr - Jyi * Bzi) - (Jzr * Byr - Jzi * Byi);
              xi += (Jyr * Bzi + Jyi * Bzr) - (Jzr * Byi + Jzi * Byr);
              yr += (Jzr * Bxr - Jzi * Bxi) - (Jxr * Bzr - Jxi * Bzi);
              yi += (Jzr * Bxi + Jzi * Bxr) - (Jxr * Bzi + Jxi * Bzr);
              zr += (Jxr * Byr - Jxi * Byi) - (Jyr * Bxr - Jyi * Bxi);
              zi += (Jxr * Byi + Jxi * Byr) - (Jyr * Bxi + Jyi * Bxr);
            }
          }
        }
        const C sx(xr, xi), sy(yr, yi), sz(zr, zi);
        const Eigen::Index i = idx(kx, ky, kz);
        const S damp = theta == S(0) ? S(1) : exp(-theta * ka(i));
        const C ikx(0, scale * kx), iky(0, scale * ky), ikz(0, scale * kz);
        const CVec3<S> q(damp * (iky * sz - ikz * sy), damp * (ikz * sx - ikx * sz), damp * (ikx * sy - iky * sx));
        out.set_mode({kx, ky, kz}, q);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dealiased FFT evaluator (double precision, FFTW backend).

/// Smallest grid size >= 3N+1 with prime factors in {2,3,5,7}: products of two
/// cube-limited fields then alias only onto modes outside the cube.
int dealiased_grid_size(int N);

/// P(B) via zero-padded transforms on a grid of `grid` points per dimension.
/// Throws TruncationOverflow if grid < 3N+1 (the product would alias).
Field p_nonlinear_fft(const Field& B, NonlinearForm form, int grid = 0);

/// P(B) = curl((curl B) x B) or (B.grad)J - (J.grad)B.
template <typename S>
SpectralField<S> p_nonlinear(const SpectralField<S>& B, NonlinearForm form = NonlinearForm::Curl,
                             Evaluator ev = Evaluator::Auto) {
  if constexpr (std::is_same_v<S, double>) {
    if (ev != Evaluator::Direct) return p_nonlinear_fft(B, form);
  }
  if (form == NonlinearForm::Curl) return q_shifted_direct(B, S(0), S(1));
  return p_nonlinear_oracle(B, form);
}

/// Q(U) = Gamma P(Gamma^{-1} U) with Gamma = e^{-theta Lambda^{shift_exp}}.
/// theta = 0 with Auto evaluates exactly p_nonlinear(U, Curl).
template <typename S>
SpectralField<S> q_shifted(const SpectralField<S>& U, S theta, S shift_exp, Evaluator ev = Evaluator::Auto,
                           const DirectSumOptions& opt = {}) {
  check_shift_guard(U.lattice(), double(theta), double(shift_exp));
  if (theta == S(0) && ev != Evaluator::Direct) return p_nonlinear(U, NonlinearForm::Curl, ev);
  if (ev == Evaluator::Fft) {
    if constexpr (std::is_same_v<S, double>)
      return gevrey_mult(p_nonlinear_fft(gevrey_mult(U, theta, shift_exp), NonlinearForm::Curl), -theta, shift_exp);
  }
  return q_shifted_direct(U, theta, shift_exp, opt);
}

}  // namespace emhd
