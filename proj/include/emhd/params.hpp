#pragma once

#include "emhd/errors.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace emhd {

/// Gevrey weight parameters: norm index sigma, order exponent s and the
/// linearly growing radius phi(t) = alpha + beta t, plus a fixed offset delta.
struct GevreyParams {
  double sigma = 1.8;
  double s = 1.0;
  double alpha = 1.0;
  double beta = 0.25;
  double delta = 0.0;

  double radius(double t) const noexcept { return alpha + beta * t; }
};

/// Which random system is being solved. `Standard` has noise Lambda^s and
/// random dissipation Lambda^{2s}; `Strong` has noise Lambda^{(s+1)/2} and
/// dissipation Lambda^{s+1}.
enum class NoiseVariant { Standard, Strong };

/// Multiplicative noise mu Lambda^{noise_exp} dW and the induced dissipation
/// (1/2) mu^2 Lambda^{dissipation_exp} of the transformed equation.
struct NoiseModel {
  double mu = 1.0;
  double noise_exp = 1.0;
  double dissipation_exp = 2.0;

  static NoiseModel for_variant(NoiseVariant v, double mu, double s) {
    const double a = v == NoiseVariant::Standard ? s : 0.5 * (s + 1.0);
    return {mu, a, 2.0 * a};
  }
  void validate() const {
    if (!(mu >= 0.0)) throw ConfigError("NoiseModel: mu must be >= 0");
    if (dissipation_exp != 2.0 * noise_exp) throw ConfigError("NoiseModel: dissipation_exp must equal 2*noise_exp");
  }
};

/// beta < mu^2 / 2: the radius grows slower than the random dissipation.
inline bool radius_growth_admissible(double beta, double mu) { return beta < 0.5 * mu * mu; }

/// Local theory range: s in (7/8, 1], sigma in (7/(4s), 2).
inline bool in_local_range(double s, double sigma) {
  return s > 7.0 / 8.0 && s <= 1.0 && sigma > 7.0 / (4.0 * s) && sigma < 2.0;
}

/// Global theory range: s in (3/4, 1], sigma in (7/(4s), 2).
inline bool in_global_range(double s, double sigma) {
  return s > 0.75 && s <= 1.0 && sigma > 7.0 / (4.0 * s) && sigma < 2.0;
}

}  // namespace emhd
