#include "emhd/verification.hpp"

#include "emhd/errors.hpp"
#include "emhd/fields.hpp"
#include "emhd/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace emhd {

namespace {

nlohmann::ordered_json number(double x) {
  if (std::isfinite(x)) return x;
  return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

nlohmann::ordered_json pairs(const std::vector<std::pair<std::string, double>>& v) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, x] : v) j[k] = number(x);
  return j;
}

}  // namespace

nlohmann::ordered_json InequalityReport::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["parameters"] = pairs(parameters);
  j["criterion"] = criterion;
  j["observed"] = number(observed);
  j["samples"] = samples;
  j["pass"] = pass;
  j["by_N"] = nlohmann::ordered_json::array();
  for (const auto& [n, x] : by_N) j["by_N"].push_back({{"N", n}, {"value", number(x)}});
  j["details"] = pairs(details);
  if (!note.empty()) j["note"] = note;
  return j;
}

double InequalityReport::detail(const std::string& key) const {
  for (const auto& [k, x] : details)
    if (k == key) return x;
  throw std::out_of_range("InequalityReport: no detail '" + key + "'");
}

void write_reports_csv(std::ostream& os, const std::vector<InequalityReport>& reports) {
  os << "name,observed,samples,pass\n";
  for (const auto& r : reports)
    os << r.name << ',' << format_double(r.observed) << ',' << r.samples << ',' << (r.pass ? 1 : 0) << '\n';
}

InequalityReport check_triangle(double s, std::size_t n_samples, std::uint64_t seed, int box) {
  if (!(s > 0.0)) throw ConfigError("check_triangle: s must be > 0");
  if (box < 1) throw ConfigError("check_triangle: box must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> comp(-box, box);
  auto norm_pow = [s](long x, long y, long z) { return std::pow(double(x * x + y * y + z * z), 0.5 * s); };
  std::size_t violations = 0;
  double worst = 0.0;
  for (std::size_t n = 0; n < n_samples;) {
    const long k0 = comp(rng), k1 = comp(rng), k2 = comp(rng);
    const long j0 = comp(rng), j1 = comp(rng), j2 = comp(rng);
    if ((k0 == 0 && k1 == 0 && k2 == 0) || (j0 == 0 && j1 == 0 && j2 == 0) || (k0 == j0 && k1 == j1 && k2 == j2))
      continue;
    ++n;
    const double lhs = norm_pow(k0, k1, k2);
    const double rhs = norm_pow(j0, j1, j2) + norm_pow(k0 - j0, k1 - j1, k2 - j2);
    worst = std::max(worst, lhs / rhs);
    if (lhs > rhs * (1.0 + 1e-14)) ++violations;
  }
  // The extremal configuration k = 2j along an axis, included in every run.
  const double edge = std::pow(2.0, s) / 2.0;
  worst = std::max(worst, edge);
  if (edge > 1.0 + 1e-14) ++violations;

  const bool in_range = s <= 1.0;
  InequalityReport r;
  r.name = "triangle";
  r.parameters = {{"s", s}, {"box", double(box)}};
  r.criterion = "zero violations of |k|^s <= |j|^s + |k-j|^s";
  r.observed = worst;
  r.samples = n_samples + 1;
  r.pass = violations == 0;
  r.details = {{"violations", double(violations)}, {"max_ratio", worst}, {"in_range", in_range ? 1.0 : 0.0}};
  if (!in_range) r.note = "s outside (0, 1]: the inequality is not expected to hold";
  return r;
}

std::vector<double> default_tau_grid() {
  std::vector<double> g(81);
  for (int i = 0; i <= 80; ++i) g[i] = 0.01 * i;
  return g;
}

namespace {

// Distinct |k|^2 values of the cube [-N, N]^3 without 0.
std::vector<int> cube_norm2_values(int N) {
  std::vector<char> seen(std::size_t(3 * N * N + 1), 0);
  for (int a = 0; a <= N; ++a)
    for (int b = a; b <= N; ++b)
      for (int c = b; c <= N; ++c) seen[std::size_t(a * a + b * b + c * c)] = 1;
  std::vector<int> out;
  for (std::size_t n = 1; n < seen.size(); ++n)
    if (seen[n]) out.push_back(int(n));
  return out;
}

struct PropagatorSup {
  double main = 0.0, companion = 0.0;
  double main_k = 0.0, companion_k = 0.0;
};

PropagatorSup propagator_sup(const GevreyParams& p, const NoiseModel& noise, int N, const std::vector<double>& taus,
                             double t, double scale) {
  const double half_mu2 = 0.5 * noise.mu * noise.mu;
  PropagatorSup out;
  for (int n2 : cube_norm2_values(N)) {
    const double k = scale * std::sqrt(double(n2));
    const double ks = std::pow(k, p.s);
    const double kd = std::pow(k, noise.dissipation_exp);
    const double log_main = 2.0 * p.sigma * std::log(ks);
    const double log_comp = p.sigma * std::log(ks);
    for (double tau : taus) {
      const double u = t - tau;
      const double lu = p.sigma * std::log(u);
      const double m = std::exp(lu + log_main + 2.0 * (p.beta * ks - half_mu2 * kd) * u);
      const double c = std::exp(lu + log_comp + 2.0 * (p.beta - half_mu2) * ks * u);
      if (m > out.main) out.main = m, out.main_k = k;
      if (c > out.companion) out.companion = c, out.companion_k = k;
    }
  }
  return out;
}

}  // namespace

InequalityReport check_propagator_bound(const GevreyParams& params, const NoiseModel& noise, int N,
                                        const std::vector<double>& tau_grid, double t, double lattice_scale) {
  if (!radius_growth_admissible(params.beta, noise.mu))
    throw ConfigError("check_propagator_bound: requires beta < mu^2/2");
  if (N < 1) throw ConfigError("check_propagator_bound: N must be >= 1");
  if (tau_grid.empty()) throw ConfigError("check_propagator_bound: empty tau grid");
  for (double tau : tau_grid)
    if (!(tau >= 0.0 && tau < t)) throw ConfigError("check_propagator_bound: tau must lie in [0, t)");
  const PropagatorSup a = propagator_sup(params, noise, N, tau_grid, t, lattice_scale);
  const PropagatorSup b = propagator_sup(params, noise, 2 * N, tau_grid, t, lattice_scale);
  const bool main_ok = b.main <= a.main * (1.0 + 1e-6);
  const bool comp_ok = b.companion <= a.companion * (1.0 + 1e-6);

  InequalityReport r;
  r.name = "propagator_bound";
  r.parameters = {{"sigma", params.sigma}, {"s", params.s},    {"beta", params.beta},
                  {"mu", noise.mu},        {"t", t},           {"dissipation_exp", noise.dissipation_exp},
                  {"N", double(N)},        {"lattice_scale", lattice_scale}};
  r.criterion = "S(2N) <= S(N) (1 + 1e-6) for both weights";
  r.observed = b.main;
  r.samples = tau_grid.size();
  r.pass = main_ok && comp_ok;
  r.by_N = {{N, a.main}, {2 * N, b.main}};
  r.details = {{"companion_N", a.companion},
               {"companion_2N", b.companion},
               {"argmax_k", b.main_k},
               {"companion_argmax_k", b.companion_k},
               {"kernel_integral", params.sigma < 2.0 ? std::pow(t, 1.0 - 0.5 * params.sigma) / (1.0 - 0.5 * params.sigma)
                                                      : HUGE_VAL}};
  return r;
}

double bilinear_pairing(const Field& U, double phi, double theta, const GevreyParams& params,
                        const NoiseModel& noise) {
  check_amplification(U.lattice(), 2.0 * phi, params.s, "bilinear_pairing");
  const Field Q = q_shifted(U, theta, noise.noise_exp, Evaluator::Direct);
  const auto& lat = U.lattice();
  const Eigen::ArrayXd ks = wavenumber_pow<double>(lat, params.s);
  double K = 0.0;
  for (Eigen::Index i = 0; i < lat.size(); ++i) {
    if (lat.norm2()(i) == 0) continue;
    const double w = std::exp(2.0 * phi * ks(i)) * std::pow(ks(i), 2.0 * params.sigma);
    K += w * (U.coeffs().col(i).conjugate().transpose() * Q.coeffs().col(i)).value().real();
  }
  return K;
}

double bilinear_ratio(const Field& U, double phi, double theta, const GevreyParams& params, const NoiseModel& noise) {
  const double lo = gevrey_norm(U, phi, params.sigma, params.s);
  if (lo == 0.0) return 0.0;
  const double hi = gevrey_norm(U, phi, params.sigma + 0.5 + 0.5 / params.s, params.s);
  return std::abs(bilinear_pairing(U, phi, theta, params, noise)) / (lo * hi * hi);
}

InequalityReport estimate_bilinear_constant(const GevreyParams& params, const NoiseModel& noise,
                                            const BilinearEnsemble& ens) {
  if (ens.n_fields < 1 || ens.N_list.empty()) throw ConfigError("estimate_bilinear_constant: empty ensemble");
  if (!(ens.theta <= ens.phi)) throw ConfigError("estimate_bilinear_constant: requires theta <= phi");
  InequalityReport r;
  r.name = "bilinear_constant";
  r.parameters = {{"sigma", params.sigma}, {"s", params.s},         {"phi", ens.phi},
                  {"theta", ens.theta},    {"decay", ens.decay},    {"damping", ens.damping},
                  {"shift_exp", noise.noise_exp},
                  {"n_fields", double(ens.n_fields)}};
  r.criterion = "max ratio at largest N within a factor 5 of max ratio at smallest N";
  for (int N : ens.N_list) {
    std::vector<double> ratios(std::size_t(ens.n_fields));
    const unsigned threads = std::max(1u, std::min<unsigned>(ens.threads, unsigned(ens.n_fields)));
    auto work = [&](unsigned t) {
      for (std::size_t i = t; i < ratios.size(); i += threads) {
        Field U = random_divfree_field(derive_seed(ens.seed, i), N, ens.decay, 1.0);
        if (ens.damping > 0.0) U = gevrey_mult(U, -(ens.phi + ens.damping), params.s);
        ratios[i] = bilinear_ratio(U, ens.phi, ens.theta, params, noise);
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
      for (auto& th : pool) th.join();
    }
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const double mx = sorted.back();
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    r.by_N.push_back({N, mx});
    r.details.push_back({"median_N" + std::to_string(N), median});
    r.samples += n;
    r.observed = std::max(r.observed, mx);
  }
  const double first = r.by_N.front().second, last = r.by_N.back().second;
  r.pass = first > 0.0 && last <= 5.0 * first && last >= first / 5.0;
  return r;
}

InequalityReport check_energy_monotonicity(const Field& U0, const BrownianPath& path, const NoiseModel& noise,
                                           const GevreyParams& params, double T, double dt,
                                           const MonotonicityOptions& opt, Trajectory* trajectory) {
  if (!radius_growth_admissible(params.beta, noise.mu))
    throw ConfigError("check_energy_monotonicity: requires beta < mu^2/2");
  const double g0 = gevrey_norm(U0, params.alpha + params.delta, params.sigma, params.s);
  const double bound = opt.c_hat > 0.0 ? (noise.mu * noise.mu - 2.0 * params.beta) / (opt.margin * opt.c_hat)
                                       : HUGE_VAL;
  if (!(g0 <= bound)) {
    std::ostringstream os;
    os << "check_energy_monotonicity: initial Gevrey norm " << g0 << " exceeds the smallness bound " << bound;
    throw ConfigError(os.str());
  }
  StepperConfig cfg{dt, opt.scheme, 1, opt.evaluator, opt.drop_tol};
  Trajectory tr = integrate_rpde(U0, path, noise, params, cfg, T);

  double worst = 0.0;
  const auto& rows = tr.record.rows;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double prev = rows[i - 1].gevrey_norm, cur = rows[i].gevrey_norm;
    const double uptick = prev > 0.0 ? (cur - prev) / prev : (cur > 0.0 ? HUGE_VAL : 0.0);
    worst = std::max(worst, uptick);
    if (!(uptick <= opt.rel_tol)) {
      std::ostringstream os;
      os.precision(17);
      os << "Gevrey norm increased at t = " << rows[i].t << ": " << prev << " -> " << cur << " (relative "
         << uptick << ")";
      if (trajectory) *trajectory = std::move(tr);
      throw MonotonicityViolation(os.str());
    }
  }
  InequalityReport r;
  r.name = "energy_monotonicity";
  r.parameters = {{"mu", noise.mu},         {"beta", params.beta},   {"alpha", params.alpha},
                  {"delta", params.delta},  {"sigma", params.sigma}, {"s", params.s},
                  {"dissipation_exp", noise.dissipation_exp},        {"N", double(U0.lattice().N())},
                  {"T", T},                 {"dt", dt}};
  r.criterion = "Gevrey norm at phi(t)+delta nonincreasing, relative uptick <= " + format_double(opt.rel_tol);
  r.observed = worst;
  r.samples = rows.size();
  r.pass = true;
  r.details = {{"initial_norm", g0},
               {"smallness_bound", bound},
               {"final_norm", rows.back().gevrey_norm},
               {"path_seed", double(path.seed())}};
  if (trajectory) *trajectory = std::move(tr);
  return r;
}

namespace {

InflationArm run_arm(const Field& B0, const BrownianPath& path, const NoiseModel& noise, const GevreyParams& params,
                     const StepperConfig& cfg, double T) {
  InflationArm arm;
  const double index = params.sigma * params.s;
  if (T == 0.0) {
    arm.times = {0.0};
    arm.sobolev = {sobolev_norm(B0, index)};
    return arm;
  }
  const std::size_t steps = step_count(T, cfg.dt);
  const double a = noise.noise_exp;
  Field B = B0;
  arm.times.push_back(0.0);
  arm.sobolev.push_back(sobolev_norm(B, index));
  // Same steps as integrate_spde, kept here so a rejected step still leaves
  // the norms recorded so far.
  for (std::size_t n = 0; n < steps; ++n) {
    const double t0 = cfg.dt * double(n), t1 = cfg.dt * double(n + 1);
    const double dW = noise.mu == 0.0 ? 0.0 : path(t1) - path(t0);
    Field next = cfg.scheme == Scheme::EulerMaruyama
                     ? B - cfg.dt * q_shifted(B, 0.0, a, cfg.evaluator) + (noise.mu * dW) * lambda_pow(B, a)
                     : gevrey_mult(propagator(B - cfg.dt * q_shifted(B, 0.0, a, cfg.evaluator), cfg.dt, noise),
                                   noise.mu * dW, a);
    const double before = l2_norm(B), after = l2_norm(next);
    if (!std::isfinite(after) || (before > 0.0 && after > 10.0 * before)) {
      arm.terminated = true;
      arm.terminated_at = t1;
      break;
    }
    B = std::move(next);
    if ((n + 1) % std::size_t(cfg.output_every) == 0 || n + 1 == steps) {
      arm.times.push_back(n + 1 == steps ? T : t1);
      arm.sobolev.push_back(sobolev_norm(B, index));
    }
  }
  return arm;
}

}  // namespace

InflationReport inflation_comparison(const Field& B0, const NoiseModel& noise, const std::vector<BrownianPath>& paths,
                                     const GevreyParams& params, const StepperConfig& cfg, double T) {
  noise.validate();
  cfg.validate();
  if (!(T >= 0.0)) throw ConfigError("inflation_comparison: T must be >= 0");
  if (cfg.scheme != Scheme::EulerMaruyama && cfg.scheme != Scheme::ExponentialIto)
    throw ConfigError("inflation_comparison: scheme must be EulerMaruyama or ExponentialIto");
  for (const auto& p : paths)
    if (p.horizon() < T * (1.0 - 1e-12)) throw ConfigError("inflation_comparison: path shorter than T");
  InflationReport rep;
  rep.sobolev_index = params.sigma * params.s;
  const NoiseModel quiet{0.0, noise.noise_exp, noise.dissipation_exp};
  const BrownianPath flat = linear_path(0.0, cfg.dt, std::max(T, cfg.dt));
  rep.deterministic = run_arm(B0, flat, quiet, params, cfg, T);
  for (const auto& p : paths) {
    rep.noisy.push_back(run_arm(B0, p, noise, params, cfg, T));
    const auto& arm = rep.noisy.back();
    std::vector<double> ratio;
    const std::size_t n = std::min(arm.sobolev.size(), rep.deterministic.sobolev.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double d = rep.deterministic.sobolev[i];
      ratio.push_back(d > 0.0 ? arm.sobolev[i] / d : 0.0);
    }
    rep.ratio.push_back(std::move(ratio));
  }
  return rep;
}

nlohmann::ordered_json InflationReport::to_json() const {
  auto arm_json = [](const InflationArm& a) {
    nlohmann::ordered_json j;
    j["times"] = a.times;
    nlohmann::ordered_json s = nlohmann::ordered_json::array();
    for (double x : a.sobolev) s.push_back(number(x));
    j["sobolev"] = s;
    j["terminated"] = a.terminated;
    if (a.terminated) j["terminated_at"] = a.terminated_at;
    return j;
  };
  nlohmann::ordered_json j;
  j["sobolev_index"] = sobolev_index;
  j["deterministic"] = arm_json(deterministic);
  j["noisy"] = nlohmann::ordered_json::array();
  for (const auto& a : noisy) j["noisy"].push_back(arm_json(a));
  j["ratio"] = nlohmann::ordered_json::array();
  for (const auto& r : ratio) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (double x : r) row.push_back(number(x));
    j["ratio"].push_back(row);
  }
  return j;
}

}  // namespace emhd
