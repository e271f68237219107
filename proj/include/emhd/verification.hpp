#pragma once

// Numerical checks of the Gevrey-class estimates: the fractional triangle
// inequality, propagator bounds, the bilinear estimate and monotone decay.

#include "emhd/evolution.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace emhd {

struct InequalityReport {
  std::string name;
  std::vector<std::pair<std::string, double>> parameters;
  std::string criterion;
  double observed = 0.0;
  std::size_t samples = 0;
  bool pass = false;
  std::vector<std::pair<int, double>> by_N;  // stability record
  std::vector<std::pair<std::string, double>> details;
  std::string note;

  nlohmann::ordered_json to_json() const;
  double detail(const std::string& key) const;
};

/// name,observed,samples,pass for a batch of reports.
void write_reports_csv(std::ostream& os, const std::vector<InequalityReport>& reports);

/// |k|^s <= |j|^s + |k-j|^s on random nonzero lattice pairs k != j with
/// components in [-box, box]. Violations are counted with relative slack
/// 1e-14 for rounding. For s outside (0, 1] the report records the range
/// breach and passes only if no violation is found.
InequalityReport check_triangle(double s, std::size_t n_samples, std::uint64_t seed, int box = 32);

/// u_i = t - tau_i for t = 1 and tau uniformly in [0, 0.8] (81 points).
std::vector<double> default_tau_grid();

/// sup over k in the cube and tau of
///   (t-tau)^sigma |k|^{2 sigma s} e^{2(beta |k|^s - mu^2/2 |k|^d)(t-tau)}
/// (d the dissipation exponent) and of the companion
///   (t-tau)^sigma |k|^{sigma s} e^{2(beta - mu^2/2) |k|^s (t-tau)},
/// on the lattices N and 2N. Passes if neither supremum grows by more than
/// 1e-6 relative under the doubling. Throws ConfigError if beta >= mu^2/2.
InequalityReport check_propagator_bound(const GevreyParams& params, const NoiseModel& noise, int N,
                                        const std::vector<double>& tau_grid, double t = 1.0,
                                        double lattice_scale = 1.0);

/// K = sum_k e^{2 phi |k|^s} |k|^{2 sigma s} Re(conj(U_k) . Q_k), Q = Q(U) at shift theta.
double bilinear_pairing(const Field& U, double phi, double theta, const GevreyParams& params,
                        const NoiseModel& noise);

/// |K| / (|U|_{phi,sigma,s} |U|_{phi,sigma+1/2+1/(2s),s}^2).
double bilinear_ratio(const Field& U, double phi, double theta, const GevreyParams& params, const NoiseModel& noise);

struct BilinearEnsemble {
  int n_fields = 100;
  std::vector<int> N_list{4, 8, 12};
  double decay = 2.0;
  double damping = 1.0;  // fields are e^{-(phi + damping) Lambda^s} applied to power-law data
  std::uint64_t seed = 1;
  double phi = 0.2;
  double theta = 0.1;
  unsigned threads = 1;
};

/// Max and median of the ratio per N over random divergence-free fields
/// with |k|^{-decay} spectra, damped past the weight radius.
/// Passes if the max at the largest N is within a factor 5 of the max at
/// the smallest N. `observed` is the overall max ratio.
InequalityReport estimate_bilinear_constant(const GevreyParams& params, const NoiseModel& noise,
                                            const BilinearEnsemble& ens);

struct MonotonicityOptions {
  double c_hat = 0.0;   // empirical bilinear constant; 0 skips the smallness check
  double margin = 2.0;  // require |U0| <= (mu^2 - 2 beta) / (margin c_hat)
  double rel_tol = 1e-9;
  Scheme scheme = Scheme::ETDRK2;
  double drop_tol = 1e-13;
  Evaluator evaluator = Evaluator::Direct;
};

/// Integrates the transformed equation and checks that the Gevrey norm at
/// radius phi(t) + delta never increases by more than rel_tol between output
/// times. Throws ConfigError if the path leaves the global set or U0 is not
/// small enough, MonotonicityViolation on the first uptick.
InequalityReport check_energy_monotonicity(const Field& U0, const BrownianPath& path, const NoiseModel& noise,
                                           const GevreyParams& params, double T, double dt,
                                           const MonotonicityOptions& opt = {}, Trajectory* trajectory = nullptr);

struct InflationArm {
  std::vector<double> times;
  std::vector<double> sobolev;
  bool terminated = false;  // StepRejected ended the run early
  double terminated_at = 0.0;
};

struct InflationReport {
  double sobolev_index = 0.0;
  InflationArm deterministic;
  std::vector<InflationArm> noisy;
  std::vector<std::vector<double>> ratio;  // noisy / deterministic on common times

  nlohmann::ordered_json to_json() const;
};

/// Arm A: mu = 0. Arm B: the Ito equation with `noise` on each path. Both use
/// `cfg` from the same B0 and report H^{sigma s} norms. Reports only.
InflationReport inflation_comparison(const Field& B0, const NoiseModel& noise, const std::vector<BrownianPath>& paths,
                                     const GevreyParams& params, const StepperConfig& cfg, double T);

}  // namespace emhd
