#include "emhd/harness.hpp"

#include "emhd/errors.hpp"
#include "emhd/fields.hpp"
#include "emhd/io_util.hpp"
#include "emhd/snapshot.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace emhd {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

ExperimentKind parse_kind(const std::string& name) {
  if (name == "simulate") return ExperimentKind::Simulate;
  if (name == "picard") return ExperimentKind::Picard;
  if (name == "montecarlo") return ExperimentKind::MonteCarlo;
  if (name == "verify") return ExperimentKind::Verify;
  if (name == "inflate") return ExperimentKind::Inflate;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::Picard: return "picard";
    case ExperimentKind::MonteCarlo: return "montecarlo";
    case ExperimentKind::Verify: return "verify";
    case ExperimentKind::Inflate: return "inflate";
  }
  return "?";
}

namespace {

Evaluator parse_evaluator(const std::string& s) {
  if (s == "auto") return Evaluator::Auto;
  if (s == "fft") return Evaluator::Fft;
  if (s == "direct") return Evaluator::Direct;
  throw ConfigError("unknown evaluator '" + s + "'");
}

std::string evaluator_name(Evaluator e) {
  switch (e) {
    case Evaluator::Auto: return "auto";
    case Evaluator::Fft: return "fft";
    case Evaluator::Direct: return "direct";
  }
  return "?";
}

NoiseVariant parse_variant(const std::string& s) {
  if (s == "Standard") return NoiseVariant::Standard;
  if (s == "Strong") return NoiseVariant::Strong;
  throw ConfigError("unknown noise variant '" + s + "'");
}

std::string variant_name(NoiseVariant v) { return v == NoiseVariant::Standard ? "Standard" : "Strong"; }

// Reads the keys of one JSON object, rejecting unknown ones.
class Section {
 public:
  Section(const json& parent, const std::string& key, std::string name) : name_(std::move(name)) {
    if (parent.contains(key)) {
      j_ = &parent.at(key);
      if (!j_->is_object()) throw ConfigError(name_ + ": expected an object");
    }
  }
  explicit Section(const json& root) : j_(&root), name_("config") {
    if (!root.is_object()) throw ConfigError("config: expected a JSON object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    known_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    try {
      out = j_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }

  template <typename T, typename Parse>
  void get_as(const std::string& key, T& out, Parse parse) {
    std::string s;
    bool present = j_ && j_->contains(key);
    get(key, s);
    if (present) out = parse(s);
  }

  void declare(const std::string& key) { known_.insert(key); }

  void finish() const {
    if (!j_) return;
    for (const auto& item : j_->items())
      if (!known_.count(item.key())) throw ConfigError("unknown key " + name_ + "." + item.key());
  }

 private:
  const json* j_ = nullptr;
  std::string name_;
  std::set<std::string> known_;
};

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Section root(j);
  root.get("format_version", c.format_version);
  if (c.format_version != kConfigFormatVersion)
    throw ConfigError("config.format_version: expected " + std::to_string(kConfigFormatVersion));
  root.get_as("kind", c.kind, parse_kind);
  root.get("exploratory", c.exploratory);
  root.get("seed", c.seed);
  root.get("threads", c.threads);
  std::string out = c.output_dir.string();
  root.get("output_dir", out);
  c.output_dir = out;

  Section lat(j, "lattice", "lattice");
  root.declare("lattice");
  lat.get("N", c.N);
  lat.get("lattice_scale", c.lattice_scale);
  lat.finish();

  Section g(j, "gevrey", "gevrey");
  root.declare("gevrey");
  g.get("sigma", c.gevrey.sigma);
  g.get("s", c.gevrey.s);
  g.get("alpha", c.gevrey.alpha);
  g.get("beta", c.gevrey.beta);
  g.get("delta", c.gevrey.delta);
  g.finish();

  Section n(j, "noise", "noise");
  root.declare("noise");
  n.get("mu", c.mu);
  n.get_as("variant", c.variant, parse_variant);
  n.finish();

  Section in(j, "initial", "initial");
  root.declare("initial");
  in.get("type", c.initial.type);
  in.get("decay", c.initial.decay);
  in.get("damping", c.initial.damping);
  in.get("gevrey_norm", c.initial.gevrey_norm);
  in.get("amplitude", c.initial.amplitude);
  in.get("shell", c.initial.shell);
  in.get("helicity", c.initial.helicity);
  in.get("band_limit", c.initial.band_limit);
  in.get("file", c.initial.file);
  in.finish();

  Section p(j, "path", "path");
  root.declare("path");
  p.get("dt", c.path.dt);
  p.get("conditioned", c.path.conditioned);
  p.finish();

  Section sim(j, "simulate", "simulate");
  root.declare("simulate");
  sim.get("system", c.simulate.system);
  sim.get_as("scheme", c.simulate.scheme, parse_scheme);
  sim.get("dt", c.simulate.dt);
  sim.get("T", c.simulate.T);
  sim.get("output_every", c.simulate.output_every);
  sim.get_as("evaluator", c.simulate.evaluator, parse_evaluator);
  sim.get("drop_tol", c.simulate.drop_tol);
  sim.get("snapshot_times", c.simulate.snapshot_times);
  sim.finish();

  Section pic(j, "picard", "picard");
  root.declare("picard");
  pic.get("T", c.picard.T);
  pic.get("n_iter", c.picard.n_iter);
  pic.get("quad_points", c.picard.quad_points);
  pic.get("tol", c.picard.tol);
  pic.get("compare_etdrk2", c.picard.compare_etdrk2);
  pic.finish();

  Section mc(j, "montecarlo", "montecarlo");
  root.declare("montecarlo");
  mc.get("alpha", c.montecarlo.alpha);
  mc.get("beta", c.montecarlo.beta);
  mc.get("mu", c.montecarlo.mu);
  mc.get("n_paths", c.montecarlo.n_paths);
  mc.get("dt", c.montecarlo.dt);
  mc.get("horizon", c.montecarlo.horizon);
  mc.get("bridge_correction", c.montecarlo.bridge_correction);
  mc.finish();

  Section v(j, "verify", "verify");
  root.declare("verify");
  v.get("checks", c.verify.checks);
  v.get("triangle_samples", c.verify.triangle_samples);
  v.get("triangle_s", c.verify.triangle_s);
  v.get("propagator_N", c.verify.propagator_N);
  v.get("propagator_matrix", c.verify.propagator_matrix);
  v.declare("bilinear");
  v.declare("monotonicity");
  v.finish();
  if (j.contains("verify")) {
    const json& vj = j.at("verify");
    Section b(vj, "bilinear", "verify.bilinear");
    auto& e = c.verify.bilinear;
    b.get("n_fields", e.n_fields);
    b.get("N_list", e.N_list);
    b.get("decay", e.decay);
    b.get("damping", e.damping);
    b.get("phi", e.phi);
    b.get("theta", e.theta);
    b.finish();
    Section m(vj, "monotonicity", "verify.monotonicity");
    auto& mo = c.verify.monotonicity;
    m.get("n_paths", mo.n_paths);
    m.get("T", mo.T);
    m.get("dt", mo.dt);
    m.get("margin", mo.margin);
    m.get("data_fraction", mo.data_fraction);
    m.get("drop_tol", mo.drop_tol);
    m.get("c_hat_fields", mo.c_hat_fields);
    m.get("c_hat_N", mo.c_hat_N);
    m.get("decay", mo.decay);
    m.get("damping", mo.damping);
    m.finish();
  }

  Section inf(j, "inflate", "inflate");
  root.declare("inflate");
  inf.get("T", c.inflate.T);
  inf.get("dt", c.inflate.dt);
  inf.get("n_paths", c.inflate.n_paths);
  inf.get_as("scheme", c.inflate.scheme, parse_scheme);
  inf.get_as("evaluator", c.inflate.evaluator, parse_evaluator);
  inf.get("output_every", c.inflate.output_every);
  inf.finish();

  root.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

ojson canonical_json(const ExperimentConfig& c) {
  ojson j;
  j["format_version"] = c.format_version;
  j["kind"] = to_string(c.kind);
  j["exploratory"] = c.exploratory;
  j["seed"] = c.seed;
  j["lattice"] = {{"N", c.N}, {"lattice_scale", c.lattice_scale}};
  j["gevrey"] = {{"sigma", c.gevrey.sigma}, {"s", c.gevrey.s},         {"alpha", c.gevrey.alpha},
                 {"beta", c.gevrey.beta},   {"delta", c.gevrey.delta}};
  j["noise"] = {{"mu", c.mu}, {"variant", variant_name(c.variant)}};
  const auto& in = c.initial;
  j["initial"] = {{"type", in.type},           {"decay", in.decay},   {"damping", in.damping},
                  {"gevrey_norm", in.gevrey_norm}, {"amplitude", in.amplitude}, {"shell", in.shell},
                  {"helicity", in.helicity},   {"band_limit", in.band_limit}, {"file", in.file}};
  j["path"] = {{"dt", c.path.dt}, {"conditioned", c.path.conditioned}};
  const auto& s = c.simulate;
  j["simulate"] = {{"system", s.system},           {"scheme", to_string(s.scheme)},
                   {"dt", s.dt},                   {"T", s.T},
                   {"output_every", s.output_every}, {"evaluator", evaluator_name(s.evaluator)},
                   {"drop_tol", s.drop_tol},       {"snapshot_times", s.snapshot_times}};
  const auto& p = c.picard;
  j["picard"] = {{"T", p.T},
                 {"n_iter", p.n_iter},
                 {"quad_points", p.quad_points},
                 {"tol", p.tol},
                 {"compare_etdrk2", p.compare_etdrk2}};
  const auto& m = c.montecarlo;
  j["montecarlo"] = {{"alpha", m.alpha},     {"beta", m.beta},       {"mu", m.mu},
                     {"n_paths", m.n_paths}, {"dt", m.dt},           {"horizon", m.horizon},
                     {"bridge_correction", m.bridge_correction}};
  const auto& v = c.verify;
  const auto& b = v.bilinear;
  const auto& mo = v.monotonicity;
  j["verify"] = {{"checks", v.checks},
                 {"triangle_samples", v.triangle_samples},
                 {"triangle_s", v.triangle_s},
                 {"propagator_N", v.propagator_N},
                 {"propagator_matrix", v.propagator_matrix},
                 {"bilinear",
                  {{"n_fields", b.n_fields},
                   {"N_list", b.N_list},
                   {"decay", b.decay},
                   {"damping", b.damping},
                   {"phi", b.phi},
                   {"theta", b.theta}}},
                 {"monotonicity",
                  {{"n_paths", mo.n_paths},
                   {"T", mo.T},
                   {"dt", mo.dt},
                   {"margin", mo.margin},
                   {"data_fraction", mo.data_fraction},
                   {"drop_tol", mo.drop_tol},
                   {"c_hat_fields", mo.c_hat_fields},
                   {"c_hat_N", mo.c_hat_N},
                   {"decay", mo.decay},
                   {"damping", mo.damping}}}};
  const auto& f = c.inflate;
  j["inflate"] = {{"T", f.T},
                  {"dt", f.dt},
                  {"n_paths", f.n_paths},
                  {"scheme", to_string(f.scheme)},
                  {"evaluator", evaluator_name(f.evaluator)},
                  {"output_every", f.output_every}};
  return j;
}

std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_json(c).dump())));
  return buf;
}

std::vector<Violation> validate_config(const ExperimentConfig& c) {
  std::vector<Violation> out;
  auto fail = [&](std::string field, std::string msg) { out.push_back({std::move(field), std::move(msg), true}); };
  auto range = [&](std::string field, std::string msg) {
    out.push_back({std::move(field), std::move(msg) + (c.exploratory ? " (exploratory run)" : ""), !c.exploratory});
  };
  const auto& g = c.gevrey;
  if (c.N < 1) fail("lattice.N", "must be >= 1");
  if (!(c.lattice_scale > 0.0)) fail("lattice.lattice_scale", "must be > 0");
  if (c.threads < 1) fail("threads", "must be >= 1");
  if (!(g.s > 0.0 && g.s <= 1.0)) fail("gevrey.s", "must lie in (0, 1]");
  if (!(g.sigma >= 0.0)) fail("gevrey.sigma", "must be >= 0");
  if (!(g.alpha > 0.0)) fail("gevrey.alpha", "must be > 0");
  if (!(g.beta > 0.0)) fail("gevrey.beta", "must be > 0");
  if (!(g.delta >= 0.0)) fail("gevrey.delta", "must be >= 0");
  if (!(c.mu >= 0.0)) fail("noise.mu", "must be >= 0");
  if (c.mu > 0.0 && !radius_growth_admissible(g.beta, c.mu))
    fail("gevrey.beta", "requires beta < mu^2/2 (radius growth slower than the random dissipation)");
  if (c.mu == 0.0 && c.kind != ExperimentKind::MonteCarlo)
    out.push_back({"noise.mu", "mu = 0: no random dissipation, beta < mu^2/2 cannot hold", false});
  if (!(c.path.dt > 0.0)) fail("path.dt", "must be > 0");

  const auto& in = c.initial;
  static const std::set<std::string> types{"random", "beltrami", "shell", "zero", "snapshot"};
  if (!types.count(in.type)) fail("initial.type", "must be one of random, beltrami, shell, zero, snapshot");
  if (in.type == "random" && !(in.decay > 0.0)) fail("initial.decay", "must be > 0");
  if (!(in.damping >= 0.0)) fail("initial.damping", "must be >= 0");
  if (!(in.gevrey_norm >= 0.0)) fail("initial.gevrey_norm", "must be >= 0");
  if (in.type == "shell" && in.shell < 1) fail("initial.shell", "must be >= 1");
  if (in.type == "shell" && std::abs(in.helicity) != 1) fail("initial.helicity", "must be +1 or -1");
  if (in.type == "snapshot" && in.file.empty()) fail("initial.file", "required for snapshot data");
  if (in.band_limit < 0) fail("initial.band_limit", "must be >= 0");

  switch (c.kind) {
    case ExperimentKind::Simulate: {
      const auto& s = c.simulate;
      const bool rpde = s.system == "rpde";
      if (!rpde && s.system != "spde") fail("simulate.system", "must be rpde or spde");
      if (rpde && s.scheme != Scheme::ExponentialEuler && s.scheme != Scheme::ETDRK2)
        fail("simulate.scheme", "rpde needs ExponentialEuler or ETDRK2");
      if (!rpde && s.scheme != Scheme::EulerMaruyama && s.scheme != Scheme::ExponentialIto)
        fail("simulate.scheme", "spde needs EulerMaruyama or ExponentialIto");
      if (!(s.dt > 0.0)) fail("simulate.dt", "must be > 0");
      if (!(s.T >= 0.0)) fail("simulate.T", "must be >= 0");
      if (s.dt > 0.0 && s.T > 0.0 && std::abs(std::round(s.T / s.dt) * s.dt - s.T) > 1e-9 * s.T)
        fail("simulate.T", "must be a multiple of dt");
      if (s.output_every < 1) fail("simulate.output_every", "must be >= 1");
      if (!(s.drop_tol >= 0.0 && s.drop_tol < 1.0)) fail("simulate.drop_tol", "must lie in [0, 1)");
      if (!in_global_range(g.s, g.sigma)) range("gevrey", "(s, sigma) outside s in (3/4, 1], sigma in (7/(4s), 2)");
      break;
    }
    case ExperimentKind::Picard: {
      const auto& p = c.picard;
      if (!(p.T > 0.0)) fail("picard.T", "must be > 0");
      if (p.n_iter < 1) fail("picard.n_iter", "must be >= 1");
      if (p.quad_points < 2) fail("picard.quad_points", "must be >= 2");
      if (!(p.tol > 0.0)) fail("picard.tol", "must be > 0");
      if (!in_local_range(g.s, g.sigma)) range("gevrey", "(s, sigma) outside s in (7/8, 1], sigma in (7/(4s), 2)");
      break;
    }
    case ExperimentKind::MonteCarlo: {
      const auto& m = c.montecarlo;
      if (!(m.alpha > 0.0 && m.beta > 0.0 && m.mu > 0.0))
        fail("montecarlo", "alpha, beta and mu must be > 0");
      if (m.n_paths < 1) fail("montecarlo.n_paths", "must be >= 1");
      if (!(m.dt > 0.0) || !(m.horizon >= m.dt)) fail("montecarlo", "need dt > 0 and horizon >= dt");
      break;
    }
    case ExperimentKind::Verify: {
      const auto& v = c.verify;
      static const std::set<std::string> known{"triangle", "propagator", "bilinear", "monotonicity"};
      for (const auto& ch : v.checks)
        if (!known.count(ch)) fail("verify.checks", "unknown check '" + ch + "'");
      for (double s : v.triangle_s)
        if (!(s > 0.0 && s <= 1.0)) range("verify.triangle_s", "s outside (0, 1]");
      if (v.propagator_N < 1) fail("verify.propagator_N", "must be >= 1");
      for (const auto& row : v.propagator_matrix)
        if (!(row[3] > 0.0) || !radius_growth_admissible(row[2], row[3]))
          fail("verify.propagator_matrix", "each row needs beta < mu^2/2");
      const auto& b = v.bilinear;
      if (b.n_fields < 1 || b.N_list.empty()) fail("verify.bilinear", "needs n_fields >= 1 and a nonempty N_list");
      if (!(b.theta <= b.phi)) fail("verify.bilinear", "theta must not exceed phi");
      const auto& m = v.monotonicity;
      if (m.n_paths < 1) fail("verify.monotonicity.n_paths", "must be >= 1");
      if (!(m.T > 0.0) || !(m.dt > 0.0)) fail("verify.monotonicity", "T and dt must be > 0");
      if (!(m.margin >= 1.0)) fail("verify.monotonicity.margin", "must be >= 1");
      if (!(m.data_fraction > 0.0 && m.data_fraction <= 1.0))
        fail("verify.monotonicity.data_fraction", "must lie in (0, 1]");
      if (m.c_hat_fields < 1 || m.c_hat_N.empty()) fail("verify.monotonicity", "needs c_hat_fields and c_hat_N");
      if (std::count(v.checks.begin(), v.checks.end(), "monotonicity") && !(c.mu > 0.0))
        fail("noise.mu", "monotonicity check needs mu > 0");
      if (!in_global_range(g.s, g.sigma)) range("gevrey", "(s, sigma) outside s in (3/4, 1], sigma in (7/(4s), 2)");
      break;
    }
    case ExperimentKind::Inflate: {
      const auto& f = c.inflate;
      if (!(f.dt > 0.0) || !(f.T >= 0.0)) fail("inflate", "need dt > 0 and T >= 0");
      if (f.n_paths < 0) fail("inflate.n_paths", "must be >= 0");
      if (f.scheme != Scheme::EulerMaruyama && f.scheme != Scheme::ExponentialIto)
        fail("inflate.scheme", "must be EulerMaruyama or ExponentialIto");
      if (f.output_every < 1) fail("inflate.output_every", "must be >= 1");
      break;
    }
  }
  return out;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const FormatError*>(&e)) return 2;
  if (dynamic_cast<const MonotonicityViolation*>(&e)) return 4;
  if (dynamic_cast<const Error*>(&e)) return 3;
  return 1;
}

ojson error_json(const std::exception& e) {
  ojson j;
  const auto* err = dynamic_cast<const Error*>(&e);
  j["error"] = err ? err->kind() : std::string("InternalError");
  j["message"] = e.what();
  j["exit_code"] = exit_code_for(e);
  return j;
}

Field make_initial_field(const ExperimentConfig& c) {
  const auto& in = c.initial;
  const auto& g = c.gevrey;
  const WaveLattice lat(c.N, c.lattice_scale);
  Field u(lat, "initial");
  if (in.type == "random") {
    u = random_divfree_field(derive_seed(c.seed, 0), c.N, in.decay, in.amplitude, c.lattice_scale);
    if (in.damping > 0.0) u = gevrey_mult(u, -(g.alpha + g.delta + in.damping), g.s);
  } else if (in.type == "beltrami") {
    u = in.amplitude * beltrami_sin_cos(lat);
  } else if (in.type == "shell") {
    u = random_shell_eigenfield(lat, in.shell, in.helicity, derive_seed(c.seed, 0), in.amplitude);
  } else if (in.type == "snapshot") {
    u = load_snapshot(in.file);
    if (u.lattice().N() != c.N || u.lattice().lattice_scale() != c.lattice_scale)
      throw ConfigError("initial.file: snapshot lattice does not match the config");
  } else if (in.type != "zero") {
    throw ConfigError("initial.type: unknown '" + in.type + "'");
  }
  if (in.band_limit > 0) u = band_limit(u, in.band_limit);
  if (in.gevrey_norm > 0.0 && in.type != "zero" && gevrey_norm(u, g.alpha + g.delta, g.sigma, g.s) > 0.0)
    u = scale_to_gevrey_norm(u, in.gevrey_norm, g.alpha + g.delta, g.sigma, g.s);
  return u;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, unsigned(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

BrownianPath make_path(const ExperimentConfig& c, double T, std::uint64_t stream, bool conditioned) {
  const double horizon = std::max(T, c.path.dt);
  if (conditioned && c.path.conditioned && c.mu > 0.0)
    return sample_conditioned_path({c.gevrey.alpha, c.gevrey.beta, c.mu}, c.path.dt, horizon,
                                   derive_seed(c.seed, stream));
  return sample_path(derive_seed(c.seed, stream), c.path.dt, horizon);
}

void write_path_csv(std::ostream& os, const BrownianPath& p, double T) {
  os << "t,W_t\n";
  for (std::size_t i = 0; i <= p.steps() && p.time(i) <= T * (1.0 + 1e-12); ++i)
    os << format_double(p.time(i)) << ',' << format_double(p.values()[i]) << '\n';
}

class Outputs {
 public:
  explicit Outputs(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  template <typename Writer>
  void text(const std::string& name, Writer&& w) {
    const auto path = dir_ / name;
    write_atomically(path, std::forward<Writer>(w));
    files.push_back(path);
  }
  void json_file(const std::string& name, const ojson& j) {
    text(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }
  void snapshot(const std::string& name, const Field& u) {
    const auto path = dir_ / name;
    save_snapshot(path, u);
    files.push_back(path);
  }

  std::vector<std::filesystem::path> files;

 private:
  std::filesystem::path dir_;
};

ojson row_json(const RecordRow& r) {
  return {{"t", r.t}, {"l2_norm", r.l2_norm}, {"sobolev_norm_sigma_s", r.sobolev_norm},
          {"gevrey_norm", std::isfinite(r.gevrey_norm) ? ojson(r.gevrey_norm) : ojson("inf")}};
}

void run_simulate(const ExperimentConfig& c, Outputs& out, ojson& summary) {
  const auto& s = c.simulate;
  const bool rpde = s.system == "rpde";
  const Field u0 = make_initial_field(c);
  const BrownianPath path = make_path(c, s.T, 1, rpde);
  const StepperConfig cfg{s.dt, s.scheme, s.output_every, s.evaluator, s.drop_tol};
  const Trajectory tr = rpde ? integrate_rpde(u0, path, c.noise(), c.gevrey, cfg, s.T)
                             : integrate_spde(u0, path, c.noise(), c.gevrey, cfg, s.T);
  out.text("record.csv", [&](std::ostream& os) { tr.record.write_csv(os); });
  out.text("path.csv", [&](std::ostream& os) { write_path_csv(os, path, s.T); });
  for (std::size_t k = 0; k < s.snapshot_times.size(); ++k) {
    const double t = s.snapshot_times[k];
    std::size_t hit = tr.times.size();
    for (std::size_t i = 0; i < tr.times.size(); ++i)
      if (std::abs(tr.times[i] - t) <= 1e-9 * (1.0 + t)) hit = i;
    if (hit == tr.times.size())
      throw ConfigError("simulate.snapshot_times: " + format_double(t) + " is not an output time");
    out.snapshot("snapshot_" + std::to_string(k) + ".sfld", tr.states[hit]);
  }
  out.snapshot("final.sfld", tr.states.back());
  summary["system"] = s.system;
  summary["rows"] = tr.record.rows.size();
  summary["initial"] = row_json(tr.record.rows.front());
  summary["final"] = row_json(tr.record.rows.back());
}

void run_picard(const ExperimentConfig& c, Outputs& out, ojson& summary) {
  const auto& p = c.picard;
  const Field u0 = make_initial_field(c);
  const BrownianPath path = make_path(c, p.T, 1, true);
  const PicardConfig pc{p.T, p.n_iter, p.quad_points, p.tol, Evaluator::Direct};
  const PicardResult res = picard_solve(u0, path, c.noise(), c.gevrey, pc);
  out.text("record.csv", [&](std::ostream& os) { res.trajectory.record.write_csv(os); });
  ojson rep;
  rep["iterations"] = res.report.iterations;
  rep["converged"] = res.report.converged;
  rep["differences"] = res.report.differences;
  rep["ratios"] = res.report.ratios;
  rep["residual"] = res.report.residual;
  rep["tol"] = p.tol;
  if (p.compare_etdrk2) {
    const StepperConfig cfg{p.T / p.quad_points, Scheme::ETDRK2};
    const Trajectory et = integrate_rpde(u0, path, c.noise(), c.gevrey, cfg, p.T);
    rep["etdrk2_max_relative_difference"] = max_relative_difference(res.trajectory, et);
  }
  out.json_file("picard.json", rep);
  summary["picard"] = rep;
}

void run_montecarlo(const ExperimentConfig& c, Outputs& out, ojson& summary) {
  const auto& m = c.montecarlo;
  McOptions opt;
  opt.n_paths = m.n_paths;
  opt.dt = m.dt;
  opt.horizon = m.horizon;
  opt.bridge_correction = m.bridge_correction;
  opt.seed = c.seed;
  opt.threads = c.threads;
  const McEstimate est = mc_crossing({m.alpha, m.beta, m.mu}, opt);
  out.text("paths.csv", [&](std::ostream& os) { write_outcomes_csv(os, est); });
  ojson j;
  j["estimate"] = est.estimate;
  j["stderr"] = est.stderr_;
  j["closed_form"] = est.closed_form;
  j["z_score"] = est.z_score;
  j["n_paths"] = est.n_paths;
  j["horizon"] = est.horizon;
  j["dt"] = m.dt;
  j["bridge_correction"] = m.bridge_correction;
  out.json_file("montecarlo.json", j);
  summary["montecarlo"] = j;
}

void run_verify(const ExperimentConfig& c, Outputs& out, ojson& summary, int& exit_code) {
  const auto& v = c.verify;
  auto wants = [&](const char* name) { return std::count(v.checks.begin(), v.checks.end(), name) > 0; };
  std::vector<InequalityReport> reports;
  if (wants("triangle"))
    for (std::size_t i = 0; i < v.triangle_s.size(); ++i)
      reports.push_back(check_triangle(v.triangle_s[i], v.triangle_samples, derive_seed(c.seed, 10 + i)));
  if (wants("propagator")) {
    if (v.propagator_matrix.empty()) {
      reports.push_back(check_propagator_bound(c.gevrey, c.noise(), v.propagator_N, default_tau_grid(), 1.0,
                                               c.lattice_scale));
    }
    for (const auto& row : v.propagator_matrix) {
      GevreyParams gp = c.gevrey;
      gp.sigma = row[0], gp.s = row[1], gp.beta = row[2];
      const NoiseModel nm = NoiseModel::for_variant(c.variant, row[3], gp.s);
      reports.push_back(check_propagator_bound(gp, nm, v.propagator_N, default_tau_grid(), 1.0, c.lattice_scale));
    }
  }
  if (wants("bilinear")) {
    BilinearEnsemble ens = v.bilinear;
    ens.seed = derive_seed(c.seed, 2);
    ens.threads = c.threads;
    reports.push_back(estimate_bilinear_constant(c.gevrey, c.noise(), ens));
  }
  if (wants("monotonicity")) {
    MonotonicityRun run = run_monotonicity(c);
    reports.push_back(run.c_hat_report);
    for (std::size_t i = 0; i < run.reports.size(); ++i) {
      reports.push_back(run.reports[i]);
      out.text("monotonicity_path" + std::to_string(i) + ".csv",
               [&](std::ostream& os) { run.trajectories[i].record.write_csv(os); });
    }
    summary["c_hat"] = run.c_hat;
    summary["monotonicity_initial_norm"] = run.initial_norm;
  }
  ojson arr = ojson::array();
  bool all = true;
  for (const auto& r : reports) {
    arr.push_back(r.to_json());
    all = all && r.pass;
  }
  out.json_file("reports.json", arr);
  out.text("reports.csv", [&](std::ostream& os) { write_reports_csv(os, reports); });
  summary["checks_passed"] = all;
  summary["reports"] = reports.size();
  if (!all) exit_code = 4;
}

void run_inflate(const ExperimentConfig& c, Outputs& out, ojson& summary) {
  const auto& f = c.inflate;
  const Field b0 = make_initial_field(c);
  std::vector<BrownianPath> paths;
  for (int i = 0; i < f.n_paths; ++i)
    paths.push_back(sample_path(derive_seed(c.seed, 2000 + std::uint64_t(i)), f.dt, std::max(f.T, f.dt)));
  StepperConfig cfg{f.dt, f.scheme, f.output_every, f.evaluator};
  const InflationReport rep = inflation_comparison(b0, c.noise(), paths, c.gevrey, cfg, f.T);
  out.text("inflation.csv", [&](std::ostream& os) {
    os << "arm,path,t,sobolev_norm\n";
    auto arm = [&](const InflationArm& a, const std::string& name, int idx) {
      for (std::size_t i = 0; i < a.times.size(); ++i)
        os << name << ',' << idx << ',' << format_double(a.times[i]) << ',' << format_double(a.sobolev[i]) << '\n';
    };
    arm(rep.deterministic, "deterministic", -1);
    for (std::size_t i = 0; i < rep.noisy.size(); ++i) arm(rep.noisy[i], "noisy", int(i));
  });
  out.json_file("inflation.json", rep.to_json());
  summary["deterministic_terminated"] = rep.deterministic.terminated;
}

}  // namespace

MonotonicityRun run_monotonicity(const ExperimentConfig& c) {
  const auto& m = c.verify.monotonicity;
  const GevreyParams& gp = c.gevrey;
  const NoiseModel noise = c.noise();
  MonotonicityRun run;

  BilinearEnsemble ens;
  ens.n_fields = m.c_hat_fields;
  ens.N_list = m.c_hat_N;
  ens.decay = m.decay;
  ens.damping = m.damping;
  ens.seed = derive_seed(c.seed, 3);
  ens.phi = gp.alpha + gp.delta;
  ens.theta = gp.alpha;
  ens.threads = c.threads;
  run.c_hat_report = estimate_bilinear_constant(gp, noise, ens);
  run.c_hat = run.c_hat_report.observed;
  const double bound = (noise.mu * noise.mu - 2.0 * gp.beta) / (m.margin * run.c_hat);

  Field u0 = random_divfree_field(derive_seed(c.seed, 4), c.N, m.decay, 1.0, c.lattice_scale);
  u0 = gevrey_mult(u0, -(gp.alpha + gp.delta + m.damping), gp.s);
  u0 = scale_to_gevrey_norm(u0, m.data_fraction * bound, gp.alpha + gp.delta, gp.sigma, gp.s);
  run.initial_norm = gevrey_norm(u0, gp.alpha + gp.delta, gp.sigma, gp.s);

  MonotonicityOptions opt;
  opt.c_hat = run.c_hat;
  opt.margin = m.margin;
  opt.drop_tol = m.drop_tol;
  run.reports.resize(std::size_t(m.n_paths));
  run.trajectories.resize(std::size_t(m.n_paths));
  parallel_for(std::size_t(m.n_paths), c.threads, [&](std::size_t i) {
    const BrownianPath path = sample_conditioned_path({gp.alpha, gp.beta, noise.mu}, c.path.dt, m.T,
                                                      derive_seed(c.seed, 1000 + i));
    Trajectory tr;
    try {
      run.reports[i] = check_energy_monotonicity(u0, path, noise, gp, m.T, m.dt, opt, &tr);
    } catch (const MonotonicityViolation& e) {
      InequalityReport r;
      r.name = "energy_monotonicity";
      r.criterion = "Gevrey norm at phi(t)+delta nonincreasing";
      r.pass = false;
      r.samples = tr.record.rows.size();
      r.note = e.what();
      r.details = {{"path_seed", double(path.seed())}};
      run.reports[i] = r;
    }
    tr.states.clear();
    tr.states.shrink_to_fit();
    run.trajectories[i] = std::move(tr);
  });
  return run;
}

RunResult run_experiment(const ExperimentConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> warnings;
  std::string fatal;
  for (const auto& v : validate_config(c)) {
    if (v.fatal)
      fatal += (fatal.empty() ? "" : "; ") + v.field + ": " + v.message;
    else
      warnings.push_back(v.field + ": " + v.message);
  }
  if (!fatal.empty()) throw ConfigError("invalid config: " + fatal);

  RunResult res;
  res.config_hash = config_hash(c);
  Outputs out(c.output_dir);
  ojson summary;
  summary["format_version"] = kConfigFormatVersion;
  summary["kind"] = to_string(c.kind);
  summary["config_hash"] = res.config_hash;
  summary["exploratory"] = c.exploratory;
  summary["warnings"] = warnings;
  out.json_file("config.json", canonical_json(c));

  switch (c.kind) {
    case ExperimentKind::Simulate: run_simulate(c, out, summary); break;
    case ExperimentKind::Picard: run_picard(c, out, summary); break;
    case ExperimentKind::MonteCarlo: run_montecarlo(c, out, summary); break;
    case ExperimentKind::Verify: run_verify(c, out, summary, res.exit_code); break;
    case ExperimentKind::Inflate: run_inflate(c, out, summary); break;
  }
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  summary["status"] = res.exit_code == 0 ? "ok" : "assertion_failed";
  summary["exit_code"] = res.exit_code;
  summary["wall_time_s"] = res.wall_time;
  out.json_file("summary.json", summary);
  res.summary = std::move(summary);
  res.artifacts = std::move(out.files);
  return res;
}

}  // namespace emhd
