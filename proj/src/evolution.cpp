#include "emhd/evolution.hpp"

#include "emhd/errors.hpp"
#include "emhd/io_util.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace emhd {

double phi1(double z) {
  if (std::abs(z) < 1e-2) return 1.0 + z / 2.0 * (1.0 + z / 3.0 * (1.0 + z / 4.0 * (1.0 + z / 5.0 * (1.0 + z / 6.0))));
  return std::expm1(z) / z;
}

double phi2(double z) {
  if (std::abs(z) < 1e-2) return 0.5 + z / 6.0 * (1.0 + z / 4.0 * (1.0 + z / 5.0 * (1.0 + z / 6.0 * (1.0 + z / 7.0))));
  return (std::expm1(z) - z) / (z * z);
}

Scheme parse_scheme(const std::string& name) {
  if (name == "ExponentialEuler") return Scheme::ExponentialEuler;
  if (name == "ETDRK2") return Scheme::ETDRK2;
  if (name == "EulerMaruyama") return Scheme::EulerMaruyama;
  if (name == "ExponentialIto") return Scheme::ExponentialIto;
  throw ConfigError("unknown scheme '" + name + "'");
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::ExponentialEuler: return "ExponentialEuler";
    case Scheme::ETDRK2: return "ETDRK2";
    case Scheme::EulerMaruyama: return "EulerMaruyama";
    case Scheme::ExponentialIto: return "ExponentialIto";
  }
  return "?";
}

void StepperConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("stepper: dt must be > 0");
  if (output_every < 1) throw ConfigError("stepper: output_every must be >= 1");
  if (!(drop_tol >= 0.0 && drop_tol < 1.0)) throw ConfigError("stepper: drop_tol must be in [0, 1)");
}

void PicardConfig::validate() const {
  if (!(T > 0.0)) throw ConfigError("picard: T must be > 0");
  if (quad_points < 2) throw ConfigError("picard: quad_points must be >= 2");
  if (n_iter < 1) throw ConfigError("picard: n_iter must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("picard: tol must be > 0");
}

void RunRecord::write_csv(std::ostream& os) const {
  os << "t,W_t,phi_t,l2_norm,sobolev_norm_sigma_s,gevrey_norm,div_residual,overflow_flag\n";
  for (const auto& r : rows) {
    os << format_double(r.t) << ',' << format_double(r.W_t) << ',' << format_double(r.phi_t) << ','
       << format_double(r.l2_norm) << ',' << format_double(r.sobolev_norm) << ',' << format_double(r.gevrey_norm)
       << ',' << format_double(r.div_residual) << ',' << (r.overflow ? 1 : 0) << '\n';
  }
}

RecordRow record_row(const Field& u, double t, double W_t, double phi_t, double radius, const GevreyParams& params) {
  RecordRow row{t, W_t, phi_t, l2_norm(u), sobolev_norm(u, params.sigma * params.s), 0.0, divergence_residual(u),
                false};
  try {
    row.gevrey_norm = gevrey_norm(u, radius, params.sigma, params.s);
  } catch (const AmplificationOverflow&) {
    row.gevrey_norm = std::numeric_limits<double>::infinity();
  }
  row.overflow = !std::isfinite(row.gevrey_norm) || !std::isfinite(row.l2_norm);
  return row;
}

std::size_t step_count(double T, double dt) {
  if (!(dt > 0.0)) throw ConfigError("step_count: dt must be > 0");
  if (T == 0.0) return 0;
  if (!(T > 0.0)) throw ConfigError("step_count: T must be >= 0");
  const double n = std::round(T / dt);
  if (n < 1.0 || std::abs(n * dt - T) > 1e-9 * T) throw ConfigError("step_count: dt must divide T");
  return std::size_t(n);
}

namespace {

double path_value(const BrownianPath& path, double t) {
  try {
    return path(t);
  } catch (const std::out_of_range&) {
    std::ostringstream os;
    os << "Brownian path horizon " << path.horizon() << " does not cover t = " << t;
    throw ConfigError(os.str());
  }
}

// mu W(t) <= phi(t) on [0, T] for the piecewise-linear path.
void check_global_set(const BrownianPath& path, const NoiseModel& noise, const GevreyParams& params, double T) {
  path_value(path, T);
  auto above = [&](double t) { return noise.mu * path_value(path, t) > params.radius(t); };
  for (std::size_t i = 0; i <= path.steps() && path.time(i) <= T; ++i) {
    if (above(path.time(i))) {
      std::ostringstream os;
      os << "path leaves the global set at t = " << path.time(i) << " before T = " << T;
      throw ConfigError(os.str());
    }
  }
  if (above(T)) throw ConfigError("path leaves the global set before T");
}

Eigen::ArrayXd dissipation_rates(const WaveLattice& lat, const NoiseModel& noise) {
  return -0.5 * noise.mu * noise.mu * wavenumber_pow<double>(lat, noise.dissipation_exp);
}

struct ExpFactors {
  Eigen::ArrayXd E, P1, P2;  // e^{L h}, h phi1(L h), h phi2(L h)
};

ExpFactors exp_factors(const WaveLattice& lat, const NoiseModel& noise, double h) {
  const Eigen::ArrayXd L = dissipation_rates(lat, noise);
  ExpFactors f{L, L, L};
  for (Eigen::Index i = 0; i < L.size(); ++i) {
    const double z = L(i) * h;
    f.E(i) = std::exp(z);
    f.P1(i) = h * phi1(z);
    f.P2(i) = h * phi2(z);
  }
  return f;
}

void guard_step(const Field& before, const Field& after, double t) {
  const double a = l2_norm(before);
  const double b = l2_norm(after);
  if (!std::isfinite(b) || (a > 0.0 && b > 10.0 * a)) {
    std::ostringstream os;
    os << "step ending at t = " << t << " grew the L2 norm from " << a << " to " << b;
    throw StepRejected(os.str());
  }
}

bool is_output_step(std::size_t n, std::size_t steps, int every) { return n % std::size_t(every) == 0 || n == steps; }

}  // namespace

Trajectory integrate_rpde(const Field& U0, const BrownianPath& path, const NoiseModel& noise,
                          const GevreyParams& params, const StepperConfig& cfg, double T) {
  noise.validate();
  cfg.validate();
  if (cfg.scheme != Scheme::ExponentialEuler && cfg.scheme != Scheme::ETDRK2)
    throw ConfigError("integrate_rpde: scheme must be ExponentialEuler or ETDRK2");
  const std::size_t steps = step_count(T, cfg.dt);
  check_global_set(path, noise, params, T);
  const ExpFactors f = exp_factors(U0.lattice(), noise, cfg.dt);
  const double a = noise.noise_exp;

  auto Q = [&](const Field& U, double t) {
    const DirectSumOptions opt{params.radius(t) + params.delta, cfg.drop_tol};
    return q_shifted(U, noise.mu * path_value(path, t), a, cfg.evaluator, opt);
  };
  Trajectory out;
  auto record = [&](const Field& U, double t) {
    out.times.push_back(t);
    out.states.push_back(U);
    out.record.rows.push_back(
        record_row(U, t, path_value(path, t), params.radius(t), params.radius(t) + params.delta, params));
  };

  Field U = U0;
  record(U, 0.0);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t0 = cfg.dt * double(n);
    const double t1 = cfg.dt * double(n + 1);
    const Field Q0 = Q(U, t0);
    Field next = cfg.scheme == Scheme::ExponentialEuler
                     ? apply_multiplier(U - cfg.dt * Q0, f.E)
                     : apply_multiplier(U, f.E) - apply_multiplier(Q0, f.P1);
    if (cfg.scheme == Scheme::ETDRK2) next -= apply_multiplier(Q(next, t1) - Q0, f.P2);
    guard_step(U, next, t1);
    U = std::move(next);
    if (is_output_step(n + 1, steps, cfg.output_every)) record(U, n + 1 == steps ? T : t1);
  }
  return out;
}

Trajectory integrate_spde(const Field& B0, const BrownianPath& path, const NoiseModel& noise,
                          const GevreyParams& params, const StepperConfig& cfg, double T) {
  noise.validate();
  cfg.validate();
  if (cfg.scheme != Scheme::EulerMaruyama && cfg.scheme != Scheme::ExponentialIto)
    throw ConfigError("integrate_spde: scheme must be EulerMaruyama or ExponentialIto");
  const std::size_t steps = step_count(T, cfg.dt);
  path_value(path, T);
  const double a = noise.noise_exp;
  const DirectSumOptions opt{params.delta, cfg.drop_tol};

  Trajectory out;
  auto record = [&](const Field& B, double t) {
    out.times.push_back(t);
    out.states.push_back(B);
    out.record.rows.push_back(record_row(B, t, path_value(path, t), params.radius(t), params.delta, params));
  };

  Field B = B0;
  record(B, 0.0);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t0 = cfg.dt * double(n);
    const double t1 = cfg.dt * double(n + 1);
    const double dW = path_value(path, t1) - path_value(path, t0);
    const Field drift = B - cfg.dt * q_shifted(B, 0.0, a, cfg.evaluator, opt);
    Field next = cfg.scheme == Scheme::EulerMaruyama
                     ? drift + (noise.mu * dW) * lambda_pow(B, a)
                     : gevrey_mult(propagator(drift, cfg.dt, noise), noise.mu * dW, a);
    guard_step(B, next, t1);
    B = std::move(next);
    if (is_output_step(n + 1, steps, cfg.output_every)) record(B, n + 1 == steps ? T : t1);
  }
  return out;
}

PicardResult picard_solve(const Field& U0, const BrownianPath& path, const NoiseModel& noise,
                          const GevreyParams& params, const PicardConfig& cfg) {
  noise.validate();
  cfg.validate();
  check_global_set(path, noise, params, cfg.T);
  const int M = cfg.quad_points;
  const double h = cfg.T / M;
  const ExpFactors f = exp_factors(U0.lattice(), noise, h);
  const double a = noise.noise_exp;

  std::vector<double> t(M + 1), theta(M + 1), radius(M + 1);
  std::vector<Field> free(M + 1, U0);
  for (int i = 0; i <= M; ++i) {
    t[i] = i == M ? cfg.T : h * i;
    theta[i] = noise.mu * path_value(path, t[i]);
    radius[i] = params.radius(t[i]) + params.delta;
    free[i] = propagator(U0, t[i], noise);
  }

  auto Phi = [&](const std::vector<Field>& U) {
    std::vector<Field> Q;
    Q.reserve(M + 1);
    for (int i = 0; i <= M; ++i) Q.push_back(q_shifted(U[i], theta[i], a, cfg.evaluator));
    std::vector<Field> out(M + 1, U0);
    Field I = 0.0 * U0;
    for (int i = 1; i <= M; ++i) {
      I = apply_multiplier(I, f.E) + apply_multiplier(Q[i - 1], f.P1) + apply_multiplier(Q[i] - Q[i - 1], f.P2);
      out[i] = free[i] - I;
    }
    return out;
  };
  auto dist = [&](const std::vector<Field>& A, const std::vector<Field>& B) {
    double d = 0.0;
    for (int i = 0; i <= M; ++i) d = std::max(d, gevrey_norm(A[i] - B[i], radius[i], params.sigma, params.s));
    return d;
  };

  PicardResult res;
  auto& rep = res.report;
  std::vector<Field> U = free;
  int above_one = 0;
  for (int m = 1; m <= cfg.n_iter; ++m) {
    std::vector<Field> next = Phi(U);
    const double d = dist(next, U);
    if (!rep.differences.empty()) {
      const double prev = rep.differences.back();
      double r = prev > 0.0 ? d / prev : (d > 0.0 ? HUGE_VAL : 0.0);
      if (!std::isfinite(d)) r = HUGE_VAL;
      rep.ratios.push_back(r);
      above_one = r > 1.0 ? above_one + 1 : 0;
    }
    rep.differences.push_back(d);
    rep.iterations = m;
    U = std::move(next);
    if (d < cfg.tol) {
      rep.converged = true;
      break;
    }
    if (above_one >= 3) {
      std::ostringstream os;
      os << "Picard ratios exceeded 1 for 3 consecutive iterations (last difference " << d << ", T = " << cfg.T
         << ")";
      throw NoContraction(os.str());
    }
  }
  rep.residual = dist(U, Phi(U));

  auto& traj = res.trajectory;
  for (int i = 0; i <= M; ++i) {
    traj.times.push_back(t[i]);
    traj.record.rows.push_back(
        record_row(U[i], t[i], path_value(path, t[i]), params.radius(t[i]), radius[i], params));
  }
  traj.states = std::move(U);
  return res;
}

namespace {

Trajectory shift_trajectory(const Trajectory& in, const BrownianPath& path, const NoiseModel& noise,
                            const GevreyParams& params, double sign, bool to_b) {
  Trajectory out;
  out.times = in.times;
  for (double t : in.times) {
    const double W = path_value(path, t);
    try {
      out.states.push_back(gevrey_mult(in.states[out.states.size()], sign * noise.mu * W, noise.noise_exp));
    } catch (const AmplificationOverflow& e) {
      std::ostringstream os;
      os << "gamma_bridge at t = " << t << ": " << e.what();
      throw AmplificationOverflow(os.str());
    }
    const double radius = to_b ? params.delta : params.radius(t) + params.delta;
    out.record.rows.push_back(record_row(out.states.back(), t, W, params.radius(t), radius, params));
  }
  return out;
}

}  // namespace

Trajectory gamma_bridge(const Trajectory& U, const BrownianPath& path, const NoiseModel& noise,
                        const GevreyParams& params) {
  return shift_trajectory(U, path, noise, params, 1.0, true);
}

Trajectory gamma_bridge_inverse(const Trajectory& B, const BrownianPath& path, const NoiseModel& noise,
                                const GevreyParams& params) {
  return shift_trajectory(B, path, noise, params, -1.0, false);
}

double max_relative_difference(const Trajectory& a, const Trajectory& b) {
  if (a.times.size() != b.times.size()) throw std::invalid_argument("max_relative_difference: time grids differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    if (std::abs(a.times[i] - b.times[i]) > 1e-12 * (1.0 + std::abs(a.times[i])))
      throw std::invalid_argument("max_relative_difference: time grids differ");
    const double ref = l2_norm(b.states[i]);
    const double d = l2_norm(a.states[i] - b.states[i]);
    worst = std::max(worst, ref > 0.0 ? d / ref : d);
  }
  return worst;
}

}  // namespace emhd
