#pragma once

// Brownian sample paths, the stopping time of the drifted barrier
// mu W_t > alpha + beta t, and first-passage probabilities.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

namespace emhd {

/// Barrier alpha + beta t against the scaled path mu W_t; all strictly positive.
struct CrossingQuery {
  double alpha = 1.0;
  double beta = 1.0;
  double mu = 1.0;

  void validate() const;
  double barrier(double t) const noexcept { return alpha + beta * t; }
};

/// Discrete Brownian path W_0 = 0, W_1, ..., W_n on the grid t_i = i dt, with
/// linear interpolation between grid points.
class BrownianPath {
 public:
  BrownianPath(std::uint64_t seed, double dt, std::vector<double> values);

  std::uint64_t seed() const noexcept { return seed_; }
  double dt() const noexcept { return dt_; }
  double horizon() const noexcept { return dt_ * double(values_.size() - 1); }
  std::size_t steps() const noexcept { return values_.size() - 1; }
  const std::vector<double>& values() const noexcept { return values_; }
  double time(std::size_t i) const noexcept { return dt_ * double(i); }

  /// W(t) by linear interpolation; throws std::out_of_range outside [0, horizon].
  double operator()(double t) const;

 private:
  std::uint64_t seed_;
  double dt_;
  std::vector<double> values_;
};

/// Number of steps floor(horizon/dt), tolerant to rounding in the quotient.
std::size_t grid_steps(double dt, double horizon);

/// Seeded path with N(0, dt) increments from std::mt19937_64(seed).
BrownianPath sample_path(std::uint64_t seed, double dt, double horizon);

/// W(t) = rate * t on the grid (deterministic test paths).
BrownianPath linear_path(double rate, double dt, double horizon);

inline constexpr double kNever = std::numeric_limits<double>::infinity();

/// inf{t : mu W(t) > alpha + beta t} for the piecewise-linear path; kNever if
/// no crossing by the horizon.
double stopping_time(const BrownianPath& path, const CrossingQuery& q);

/// As stopping_time, but inside each step where both grid values stay below
/// the barrier a crossing is also declared with the exact Brownian-bridge
/// probability exp(-2 d0 d1 / dt) (d = barrier distance in W units), using
/// uniforms from std::mt19937_64(bridge_seed). Bridge crossings report the
/// step midpoint.
double stopping_time_bridge(const BrownianPath& path, const CrossingQuery& q, std::uint64_t bridge_seed);

/// Whether alpha + beta t >= mu W(t) on the whole path. The answer only
/// covers [0, checked_until].
struct GlobalSetMembership {
  bool in_set;
  double checked_until;
};
GlobalSetMembership in_global_set(const BrownianPath& path, const CrossingQuery& q);

/// P(exists t >= 0 : mu W_t > alpha + beta t) = exp(-2 alpha beta / mu^2).
double crossing_probability(const CrossingQuery& q);

struct PathOutcome {
  std::uint64_t seed;
  bool crossed;
  double t_omega;  // kNever if not crossed
};

struct McEstimate {
  double estimate;
  double stderr_;
  double closed_form;
  double z_score;
  std::size_t n_paths;
  double horizon;
  std::vector<PathOutcome> outcomes;
};

struct McOptions {
  std::size_t n_paths = 100000;
  double dt = 1e-2;
  double horizon = 25.0;
  bool bridge_correction = true;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool keep_outcomes = true;
};

/// Monte Carlo crossing probability. Path i uses seed derive_seed(seed, i)
/// and is bit-identical to sample_path(derive_seed(seed, i), dt, horizon);
/// results do not depend on the thread count.
McEstimate mc_crossing(const CrossingQuery& q, const McOptions& opt);

/// Columns seed,crossed,T_omega,horizon.
void write_outcomes_csv(std::ostream& os, const McEstimate& est);

/// Bridge-stream seed used by mc_crossing for a path seed.
std::uint64_t bridge_seed_for(std::uint64_t path_seed);

/// Rejection sampling of a path in the global set over [0, horizon]. Tries
/// seeds derive_seed(master, attempt) for attempt = first_attempt, ...;
/// `attempts_used` receives the number of draws.
BrownianPath sample_conditioned_path(const CrossingQuery& q, double dt, double horizon, std::uint64_t master,
                                     std::uint64_t first_attempt = 0, std::size_t* attempts_used = nullptr,
                                     std::size_t max_attempts = 100000);

}  // namespace emhd
