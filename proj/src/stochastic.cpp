#include "emhd/stochastic.hpp"

#include "emhd/errors.hpp"
#include "emhd/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

namespace emhd {

void CrossingQuery::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(mu > 0.0))
    throw ConfigError("CrossingQuery: alpha, beta and mu must be > 0");
}

BrownianPath::BrownianPath(std::uint64_t seed, double dt, std::vector<double> values)
    : seed_(seed), dt_(dt), values_(std::move(values)) {
  if (!(dt > 0.0)) throw std::invalid_argument("BrownianPath: dt must be > 0");
  if (values_.size() < 2) throw std::invalid_argument("BrownianPath: need at least one step");
  if (values_.front() != 0.0) throw std::invalid_argument("BrownianPath: W_0 must be 0");
}

double BrownianPath::operator()(double t) const {
  const double x = t / dt_;
  const double last = double(values_.size() - 1);
  if (x < 0.0 || x > last * (1.0 + 1e-12)) throw std::out_of_range("BrownianPath: time outside horizon");
  const double near = std::round(x);
  if (std::abs(x - near) < 1e-9) return values_[std::min(std::size_t(near), values_.size() - 1)];
  const double fl = std::floor(x);
  const std::size_t i = std::min(std::size_t(fl), values_.size() - 1);
  if (i + 1 >= values_.size()) return values_.back();
  const double w = x - fl;
  if (w == 0.0) return values_[i];
  return values_[i] + w * (values_[i + 1] - values_[i]);
}

std::size_t grid_steps(double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon >= dt)) throw std::invalid_argument("grid_steps: need dt > 0 and horizon >= dt");
  return std::size_t(std::floor(horizon / dt * (1.0 + 1e-12)));
}

namespace {

template <typename Visit>
void generate_increments(std::uint64_t seed, double dt, std::size_t steps, Visit&& visit) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(dt));
  double w = 0.0;
  for (std::size_t i = 1; i <= steps; ++i) {
    w += gauss(rng);
    if (!visit(i, w)) return;
  }
}

// Root of the linear function g on [t0, t0 + dt] with g(t0) = g0 <= 0 < g1.
double crossing_root(double t0, double dt, double g0, double g1) { return t0 + dt * (-g0) / (g1 - g0); }

// Crossing of the Brownian bridge between two sub-barrier grid values.
bool bridge_fires(double u, double d0, double d1, double dt) {
  const double x = 2.0 * d0 * d1 / dt;
  return x < 745.0 && u < std::exp(-x);
}

}  // namespace

BrownianPath sample_path(std::uint64_t seed, double dt, double horizon) {
  const std::size_t steps = grid_steps(dt, horizon);
  std::vector<double> values(steps + 1, 0.0);
  generate_increments(seed, dt, steps, [&](std::size_t i, double w) {
    values[i] = w;
    return true;
  });
  return BrownianPath(seed, dt, std::move(values));
}

BrownianPath linear_path(double rate, double dt, double horizon) {
  const std::size_t steps = grid_steps(dt, horizon);
  std::vector<double> values(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) values[i] = rate * dt * double(i);
  return BrownianPath(0, dt, std::move(values));
}

double stopping_time(const BrownianPath& path, const CrossingQuery& q) {
  const auto& w = path.values();
  double g0 = q.mu * w[0] - q.barrier(0.0);
  if (g0 > 0.0) return 0.0;
  for (std::size_t i = 1; i < w.size(); ++i) {
    const double g1 = q.mu * w[i] - q.barrier(path.time(i));
    if (g1 > 0.0) return crossing_root(path.time(i - 1), path.dt(), g0, g1);
    g0 = g1;
  }
  return kNever;
}

double stopping_time_bridge(const BrownianPath& path, const CrossingQuery& q, std::uint64_t bridge_seed) {
  const auto& w = path.values();
  const double dt = path.dt();
  std::mt19937_64 rng(bridge_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double d0 = q.barrier(0.0) / q.mu - w[0];
  if (d0 < 0.0) return 0.0;
  for (std::size_t i = 1; i < w.size(); ++i) {
    const double d1 = q.barrier(path.time(i)) / q.mu - w[i];
    const double u = unif(rng);
    if (d1 < 0.0) return crossing_root(path.time(i - 1), dt, -d0, -d1);
    if (bridge_fires(u, d0, d1, dt)) return path.time(i - 1) + 0.5 * dt;
    d0 = d1;
  }
  return kNever;
}

GlobalSetMembership in_global_set(const BrownianPath& path, const CrossingQuery& q) {
  return {stopping_time(path, q) == kNever, path.horizon()};
}

double crossing_probability(const CrossingQuery& q) {
  q.validate();
  // through the unit-noise level and drift, so rescaling by mu is exact
  const double a = q.alpha / q.mu, b = q.beta / q.mu;
  return std::exp(-2.0 * a * b);
}

std::uint64_t bridge_seed_for(std::uint64_t path_seed) { return derive_seed(path_seed, 0x62726964ULL); }

namespace {

PathOutcome simulate_outcome(const CrossingQuery& q, std::uint64_t seed, double dt, std::size_t steps,
                             bool bridge) {
  // Drift-removed frame: barrier a(t) = (alpha + beta t) / mu against W.
  std::mt19937_64 bridge_rng(bridge_seed_for(seed));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  PathOutcome out{seed, false, kNever};
  double d0 = q.alpha / q.mu;
  generate_increments(seed, dt, steps, [&](std::size_t i, double w) {
    const double t1 = dt * double(i);
    const double d1 = q.barrier(t1) / q.mu - w;
    const double u = bridge ? unif(bridge_rng) : 1.0;
    if (d1 < 0.0) {
      out.crossed = true;
      out.t_omega = crossing_root(t1 - dt, dt, -d0, -d1);
      return false;
    }
    if (bridge && bridge_fires(u, d0, d1, dt)) {
      out.crossed = true;
      out.t_omega = t1 - 0.5 * dt;
      return false;
    }
    d0 = d1;
    return true;
  });
  return out;
}

}  // namespace

McEstimate mc_crossing(const CrossingQuery& q, const McOptions& opt) {
  q.validate();
  if (opt.n_paths < 1) throw ConfigError("mc_crossing: n_paths must be >= 1");
  const std::size_t steps = grid_steps(opt.dt, opt.horizon);
  std::vector<PathOutcome> outcomes(opt.n_paths);
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, unsigned(opt.n_paths)));
  auto work = [&](unsigned t) {
    for (std::size_t i = t; i < opt.n_paths; i += threads)
      outcomes[i] = simulate_outcome(q, derive_seed(opt.seed, i), opt.dt, steps, opt.bridge_correction);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  std::size_t hits = 0;
  for (const auto& o : outcomes) hits += o.crossed ? 1 : 0;
  const double n = double(opt.n_paths);
  const double p = double(hits) / n;
  const double se = std::sqrt(p * (1.0 - p) / n);
  const double closed = crossing_probability(q);
  McEstimate est{p, se, closed, se > 0.0 ? (p - closed) / se : 0.0, opt.n_paths, opt.horizon, {}};
  if (opt.keep_outcomes) est.outcomes = std::move(outcomes);
  return est;
}

void write_outcomes_csv(std::ostream& os, const McEstimate& est) {
  os << "seed,crossed,T_omega,horizon\n";
  for (const auto& o : est.outcomes)
    os << o.seed << ',' << (o.crossed ? 1 : 0) << ',' << (o.crossed ? format_double(o.t_omega) : "inf") << ','
       << format_double(est.horizon) << '\n';
}

BrownianPath sample_conditioned_path(const CrossingQuery& q, double dt, double horizon, std::uint64_t master,
                                     std::uint64_t first_attempt, std::size_t* attempts_used,
                                     std::size_t max_attempts) {
  for (std::size_t a = 0; a < max_attempts; ++a) {
    BrownianPath p = sample_path(derive_seed(master, first_attempt + a), dt, horizon);
    if (in_global_set(p, q).in_set) {
      if (attempts_used) *attempts_used = a + 1;
      return p;
    }
  }
  throw ConfigError("sample_conditioned_path: no path in the global set after max_attempts draws");
}

}  // namespace emhd
