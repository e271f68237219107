#pragma once

// Time evolution of the transformed random equation
//   dU/dt + Q(U, mu W_t) = -(1/2) mu^2 Lambda^{2a} U
// and of the original Ito equation dB + P(B) dt = mu Lambda^a B dW_t.

#include "emhd/nonlinear.hpp"
#include "emhd/params.hpp"
#include "emhd/spectral.hpp"
#include "emhd/stochastic.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace emhd {

/// e^{-(1/2) mu^2 tau Lambda^{dissipation_exp}}.
template <typename S>
SpectralField<S> propagator(const SpectralField<S>& u, S tau, const NoiseModel& noise) {
  if (tau < S(0)) throw std::invalid_argument("propagator: tau must be >= 0");
  const S mu(noise.mu);
  return gevrey_mult(u, S(-0.5) * mu * mu * tau, S(noise.dissipation_exp));
}

/// phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, stable near 0.
double phi1(double z);
double phi2(double z);

enum class Scheme { ExponentialEuler, ETDRK2, EulerMaruyama, ExponentialIto };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme s);

struct StepperConfig {
  double dt = 1e-2;
  Scheme scheme = Scheme::ETDRK2;
  int output_every = 1;  // record every k-th step; the final time is always recorded
  Evaluator evaluator = Evaluator::Direct;
  double drop_tol = 0.0;  // direct-sum pruning, weighted at the record radius

  void validate() const;
};

struct RecordRow {
  double t;
  double W_t;
  double phi_t;
  double l2_norm;
  double sobolev_norm;
  double gevrey_norm;
  double div_residual;
  bool overflow;
};

/// Per-output-time diagnostics. The Gevrey norm is taken at radius
/// phi(t) + delta for the transformed unknown and at delta for B.
struct RunRecord {
  std::vector<RecordRow> rows;
  void write_csv(std::ostream& os) const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> states;
  RunRecord record;
};

/// Norm row for one state; `radius` is the Gevrey radius used. Overflowing
/// weights set the flag and leave the Gevrey norm as +inf.
RecordRow record_row(const Field& u, double t, double W_t, double phi_t, double radius, const GevreyParams& params);

/// Number of steps T/dt (0 for T = 0); throws ConfigError unless dt divides T.
std::size_t step_count(double T, double dt);

/// Integrates the transformed equation on [0, T] with theta(t) = mu W(t).
/// Throws ConfigError if the path is shorter than T or leaves the global
/// set before T; StepRejected if a step grows the L2 norm more than 10x.
Trajectory integrate_rpde(const Field& U0, const BrownianPath& path, const NoiseModel& noise,
                          const GevreyParams& params, const StepperConfig& cfg, double T);

/// Integrates the Ito equation with EulerMaruyama or ExponentialIto.
Trajectory integrate_spde(const Field& B0, const BrownianPath& path, const NoiseModel& noise,
                          const GevreyParams& params, const StepperConfig& cfg, double T);

struct PicardConfig {
  double T = 0.05;
  int n_iter = 50;
  int quad_points = 16;
  double tol = 1e-12;
  Evaluator evaluator = Evaluator::Direct;

  void validate() const;
};

struct PicardReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> differences;  // sup_t ||U^{m+1} - U^m||
  std::vector<double> ratios;       // differences[m] / differences[m-1]
  double residual = 0.0;            // sup_t ||U - Phi(U)|| for the returned U
};

struct PicardResult {
  Trajectory trajectory;  // nodes t_i = i T / M
  PicardReport report;
};

/// Fixed point of the Duhamel map on M+1 uniform nodes, starting from the
/// free evolution of U0. Q is interpolated linearly between nodes and the
/// kernel integrated exactly. Differences use the Gevrey norm at phi(t)+delta.
/// Throws NoContraction after three consecutive ratios above 1.
PicardResult picard_solve(const Field& U0, const BrownianPath& path, const NoiseModel& noise,
                          const GevreyParams& params, const PicardConfig& cfg);

/// B(t) = e^{mu W(t) Lambda^a} U(t) at each trajectory time.
Trajectory gamma_bridge(const Trajectory& U, const BrownianPath& path, const NoiseModel& noise,
                        const GevreyParams& params);

/// U(t) = e^{-mu W(t) Lambda^a} B(t).
Trajectory gamma_bridge_inverse(const Trajectory& B, const BrownianPath& path, const NoiseModel& noise,
                                const GevreyParams& params);

/// sup over times of ||a - b|| / ||b|| in L2; trajectories must share times.
double max_relative_difference(const Trajectory& a, const Trajectory& b);

}  // namespace emhd
