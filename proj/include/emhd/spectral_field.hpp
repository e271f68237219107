#pragma once

#include "emhd/lattice.hpp"

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace emhd {

/// Truncated Fourier coefficients u^(k) of a real, mean-zero 3-vector field.
///
/// Coefficients live in a 3 x size() Eigen matrix, one column per lattice
/// mode. The reality condition u^(-k) = conj(u^(k)) is maintained by every
/// library operation; `set_mode` writes both halves of a conjugate pair.
template <typename Scalar = double>
class SpectralField {
 public:
  using Real = Scalar;
  using Complex = std::complex<Scalar>;
  using Vector = Eigen::Matrix<Complex, 3, 1>;
  using Coeffs = Eigen::Matrix<Complex, 3, Eigen::Dynamic>;

  explicit SpectralField(WaveLattice lattice, std::string tag = {})
      : lattice_(std::move(lattice)), coeffs_(Coeffs::Zero(3, lattice_.size())), tag_(std::move(tag)) {}

  SpectralField(WaveLattice lattice, Coeffs coeffs, std::string tag = {})
      : lattice_(std::move(lattice)), coeffs_(std::move(coeffs)), tag_(std::move(tag)) {
    if (coeffs_.cols() != lattice_.size())
      throw std::invalid_argument("SpectralField: coefficient count does not match lattice");
  }

  const WaveLattice& lattice() const noexcept { return lattice_; }
  const Coeffs& coeffs() const noexcept { return coeffs_; }
  Coeffs& coeffs() noexcept { return coeffs_; }
  const std::string& tag() const noexcept { return tag_; }
  void set_tag(std::string tag) { tag_ = std::move(tag); }

  auto operator[](const Mode& k) const { return coeffs_.col(lattice_.index(k)); }

  /// Writes v at k and conj(v) at -k. The zero mode is pinned to 0.
  void set_mode(const Mode& k, const Vector& v) {
    const Eigen::Index i = lattice_.index(k);
    if (i == lattice_.zero_index()) return;
    coeffs_.col(i) = v;
    coeffs_.col(lattice_.mirror(i)) = v.conjugate();
  }

  template <typename Other>
  SpectralField<Other> cast() const {
    return SpectralField<Other>(lattice_, coeffs_.template cast<std::complex<Other>>(), tag_);
  }

  SpectralField& operator+=(const SpectralField& o) {
    check_same(o);
    coeffs_ += o.coeffs_;
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    check_same(o);
    coeffs_ -= o.coeffs_;
    return *this;
  }
  SpectralField& operator*=(Scalar c) {
    coeffs_ *= Complex(c);
    return *this;
  }

  void check_same(const SpectralField& o) const {
    if (!(lattice_ == o.lattice_)) throw std::invalid_argument("SpectralField: lattice mismatch");
  }

 private:
  WaveLattice lattice_;
  Coeffs coeffs_;
  std::string tag_;
};

using Field = SpectralField<double>;

template <typename S>
SpectralField<S> operator+(SpectralField<S> a, const SpectralField<S>& b) {
  return a += b;
}
template <typename S>
SpectralField<S> operator-(SpectralField<S> a, const SpectralField<S>& b) {
  return a -= b;
}
template <typename S>
SpectralField<S> operator*(S c, SpectralField<S> a) {
  return a *= c;
}
template <typename S>
SpectralField<S> operator-(SpectralField<S> a) {
  return a *= S(-1);
}

/// Scales every mode k by factors(k); factors must be real and radial so
/// that reality is preserved.
template <typename S>
SpectralField<S> apply_multiplier(SpectralField<S> u, const Eigen::Array<S, Eigen::Dynamic, 1>& factors) {
  u.coeffs().array().rowwise() *= factors.transpose().template cast<std::complex<S>>();
  return u;
}

}  // namespace emhd
