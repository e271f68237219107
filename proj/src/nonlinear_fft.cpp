#include "emhd/nonlinear.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace emhd {

namespace {

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

RealBuffer real_buffer(std::size_t n) { return RealBuffer(fftw_alloc_real(n)); }
ComplexBuffer complex_buffer(std::size_t n) { return ComplexBuffer(fftw_alloc_complex(n)); }

struct PlanPair {
  fftw_plan forward = nullptr;   // r2c
  fftw_plan backward = nullptr;  // c2r
};

// The FFTW planner is not thread-safe; plans are created once per grid size
// with FFTW_ESTIMATE (deterministic algorithm choice) and then shared.
const PlanPair& plans_for(int M) {
  static std::mutex mutex;
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(M);
  if (it != cache.end()) return it->second;
  const std::size_t nreal = std::size_t(M) * M * M;
  const std::size_t ncplx = std::size_t(M) * M * (M / 2 + 1);
  auto r = real_buffer(nreal);
  auto c = complex_buffer(ncplx);
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_3d(M, M, M, r.get(), c.get(), FFTW_ESTIMATE);
  p.backward = fftw_plan_dft_c2r_3d(M, M, M, c.get(), r.get(), FFTW_ESTIMATE);
  return cache.emplace(M, p).first->second;
}

/// Physical-space samples of one component on an M^3 grid.
class Grid {
 public:
  Grid(const WaveLattice& lat, int M)
      : lat_(lat), M_(M), H_(M / 2 + 1), plans_(plans_for(M)), spec_(complex_buffer(std::size_t(M) * M * H_)) {}

  std::size_t real_size() const { return std::size_t(M_) * M_ * M_; }

  /// Samples sum_k c(k) e^{i k.x} where c(k) = coeff(component, k) * factor(k).
  template <typename Coef>
  RealBuffer to_physical(Coef&& coef) {
    std::fill_n(&spec_[0][0], 2 * std::size_t(M_) * M_ * H_, 0.0);
    const int N = lat_.N();
    for (int kx = -N; kx <= N; ++kx)
      for (int ky = -N; ky <= N; ++ky)
        for (int kz = 0; kz <= N; ++kz) {
          const std::complex<double> v = coef(Mode{kx, ky, kz});
          const std::size_t at = (std::size_t(wrap(kx)) * M_ + wrap(ky)) * H_ + kz;
          spec_[at][0] = v.real();
          spec_[at][1] = v.imag();
        }
    RealBuffer out = real_buffer(real_size());
    fftw_execute_dft_c2r(plans_.backward, spec_.get(), out.get());
    return out;
  }

  /// Cube-restricted Fourier coefficients of real samples, written to
  /// component `c` of `dst` with exact conjugate symmetry.
  void from_physical(double* samples, Field& dst, int c) {
    fftw_execute_dft_r2c(plans_.forward, samples, spec_.get());
    const double norm = 1.0 / double(real_size());
    const int N = lat_.N();
    for (int kx = -N; kx <= N; ++kx)
      for (int ky = -N; ky <= N; ++ky)
        for (int kz = 0; kz <= N; ++kz) {
          const std::size_t at = (std::size_t(wrap(kx)) * M_ + wrap(ky)) * H_ + kz;
          const std::complex<double> v(spec_[at][0] * norm, spec_[at][1] * norm);
          const Eigen::Index i = lat_.index({kx, ky, kz});
          dst.coeffs()(c, i) = v;
          dst.coeffs()(c, lat_.mirror(i)) = std::conj(v);
        }
    dst.coeffs()(c, lat_.zero_index()) = std::complex<double>(dst.coeffs()(c, lat_.zero_index()).real(), 0.0);
  }

 private:
  int wrap(int k) const { return k >= 0 ? k : k + M_; }

  WaveLattice lat_;
  int M_, H_;
  const PlanPair& plans_;
  ComplexBuffer spec_;
};

}  // namespace

int dealiased_grid_size(int N) {
  for (int M = 3 * N + 1;; ++M) {
    int r = M;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return M;
  }
}

Field p_nonlinear_fft(const Field& B, NonlinearForm form, int grid) {
  const auto& lat = B.lattice();
  const int N = lat.N();
  const int M = grid == 0 ? dealiased_grid_size(N) : grid;
  if (M < 3 * N + 1)
    throw TruncationOverflow("p_nonlinear_fft: grid " + std::to_string(M) + " < 3N+1 = " +
                             std::to_string(3 * N + 1) + " would alias the quadratic product");
  const double scale = lat.lattice_scale();
  Grid g(lat, M);
  const std::size_t n = g.real_size();
  const Field J = curl(B);

  auto component = [&](const Field& f, int c) {
    return g.to_physical([&](const Mode& k) { return f.coeffs()(c, lat.index(k)); });
  };

  Field X(lat, "p_nonlinear");
  if (form == NonlinearForm::Curl) {
    RealBuffer b[3] = {component(B, 0), component(B, 1), component(B, 2)};
    RealBuffer j[3] = {component(J, 0), component(J, 1), component(J, 2)};
    RealBuffer x[3] = {real_buffer(n), real_buffer(n), real_buffer(n)};
    for (std::size_t p = 0; p < n; ++p) {
      x[0][p] = j[1][p] * b[2][p] - j[2][p] * b[1][p];
      x[1][p] = j[2][p] * b[0][p] - j[0][p] * b[2][p];
      x[2][p] = j[0][p] * b[1][p] - j[1][p] * b[0][p];
    }
    for (int c = 0; c < 3; ++c) g.from_physical(x[c].get(), X, c);
    Field P = curl(X);
    P.set_tag("p_nonlinear");
    return P;
  }

  // Transport form: (B.grad)J - (J.grad)B, with gradients taken spectrally.
  auto gradient = [&](const Field& f, int c, int d) {
    return g.to_physical([&](const Mode& k) {
      return std::complex<double>(0.0, scale * k[d]) * f.coeffs()(c, lat.index(k));
    });
  };
  RealBuffer b[3] = {component(B, 0), component(B, 1), component(B, 2)};
  RealBuffer j[3] = {component(J, 0), component(J, 1), component(J, 2)};
  for (int c = 0; c < 3; ++c) {
    RealBuffer acc = real_buffer(n);
    std::fill_n(acc.get(), n, 0.0);
    for (int d = 0; d < 3; ++d) {
      RealBuffer dJ = gradient(J, c, d);
      RealBuffer dB = gradient(B, c, d);
      for (std::size_t p = 0; p < n; ++p) acc[p] += b[d][p] * dJ[p] - j[d][p] * dB[p];
    }
    g.from_physical(acc.get(), X, c);
  }
  X.coeffs().col(lat.zero_index()).setZero();
  return X;
}

}  // namespace emhd
