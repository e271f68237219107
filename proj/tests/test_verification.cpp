#include "emhd/errors.hpp"
#include "emhd/fields.hpp"
#include "emhd/verification.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace emhd;

TEST_CASE("fractional triangle inequality") {
  // k = (2,0,0), j = (1,0,0): 2 <= 1 + 1 with equality
  CHECK(std::pow(2.0, 1.0) == std::pow(1.0, 1.0) + std::pow(1.0, 1.0));
  for (double s : {0.76, 0.875, 0.9, 1.0}) {
    const auto r = check_triangle(s, 200000, 3);
    CHECK(r.pass);
    CHECK(r.detail("violations") == 0.0);
    CHECK(r.detail("in_range") == 1.0);
    CHECK(r.observed <= 1.0 + 1e-14);
  }
  CHECK(check_triangle(1.0, 10, 1).observed == doctest::Approx(1.0));
  const auto bad = check_triangle(1.5, 10000, 3);
  CHECK_FALSE(bad.pass);
  CHECK(bad.detail("violations") > 0.0);
  CHECK(bad.detail("in_range") == 0.0);
  CHECK(bad.observed >= std::pow(2.0, 1.5) / 2.0);
  CHECK_THROWS_AS(check_triangle(0.0, 10, 1), ConfigError);
}

TEST_CASE("propagator bound saturates at finite k") {
  const GevreyParams gp{1.8, 1.0, 1.0, 0.25, 0.0};
  const NoiseModel nm = NoiseModel::for_variant(NoiseVariant::Standard, 1.0, 1.0);
  const auto r = check_propagator_bound(gp, nm, 32, default_tau_grid());
  CHECK(r.pass);
  REQUIRE(r.by_N.size() == 2);
  CHECK(r.by_N[1].second == doctest::Approx(r.by_N[0].second).epsilon(1e-6));
  CHECK(r.detail("argmax_k") < 32.0);
  CHECK(r.detail("companion_argmax_k") < 32.0);
  CHECK(r.detail("companion_2N") == doctest::Approx(r.detail("companion_N")).epsilon(1e-6));
  // sup of u^sigma y^sigma e^{-2 c y u} over y is (sigma / (2 c e))^sigma
  const double c = 0.5 - 0.25;
  CHECK(r.detail("companion_N") <= std::pow(1.8 / (2 * c * std::exp(1.0)), 1.8) * (1 + 1e-12));
  CHECK(r.detail("companion_N") >= 0.99 * std::pow(1.8 / (2 * c * std::exp(1.0)), 1.8));
  // the Duhamel kernel (t - tau)^{-sigma/2} is integrable for sigma < 2
  CHECK(r.detail("kernel_integral") == doctest::Approx(1.0 / 0.1));

  const GevreyParams bad{1.8, 1.0, 1.0, 0.5, 0.0};
  CHECK_THROWS_AS(check_propagator_bound(bad, nm, 8, default_tau_grid()), ConfigError);
  CHECK_THROWS_AS(check_propagator_bound(gp, nm, 8, {1.0}), ConfigError);

  // small N cannot contain the maximiser: the doubling changes the sup
  const auto small = check_propagator_bound(gp, nm, 2, default_tau_grid());
  CHECK_FALSE(small.pass);
}

TEST_CASE("bilinear ratio") {
  const GevreyParams gp;
  const NoiseModel nm = NoiseModel::for_variant(NoiseVariant::Standard, 1.0, 1.0);
  const Field b = random_shell_eigenfield(WaveLattice(4), 2, 1, 5, 1.0);
  CHECK(bilinear_ratio(b, 0.2, 0.1, gp, nm) <= 1e-13);
  CHECK(bilinear_ratio(Field(WaveLattice(3)), 0.2, 0.1, gp, nm) == 0.0);

  const Field u = gevrey_mult(random_divfree_field(4, 5, 2.0, 1.0), -1.2, 1.0);
  const double r1 = bilinear_ratio(u, 0.2, 0.1, gp, nm);
  CHECK(r1 > 0.0);
  CHECK(bilinear_ratio(2.0 * u, 0.2, 0.1, gp, nm) == doctest::Approx(r1).epsilon(1e-10));
  CHECK(bilinear_ratio(1e-3 * u, 0.2, 0.1, gp, nm) == doctest::Approx(r1).epsilon(1e-10));
  CHECK(bilinear_pairing(2.0 * u, 0.2, 0.1, gp, nm) == doctest::Approx(8.0 * bilinear_pairing(u, 0.2, 0.1, gp, nm)));

  BilinearEnsemble ens;
  ens.n_fields = 12;
  ens.N_list = {4, 6};
  const auto rep = estimate_bilinear_constant(gp, nm, ens);
  CHECK(rep.pass);
  CHECK(rep.samples == 24);
  CHECK(rep.observed > 0.0);
  ens.threads = 3;
  const auto rep3 = estimate_bilinear_constant(gp, nm, ens);
  CHECK(rep3.to_json().dump() == rep.to_json().dump());
  ens.theta = 0.5;
  CHECK_THROWS_AS(estimate_bilinear_constant(gp, nm, ens), ConfigError);
}

TEST_CASE("monotone decay") {
  const GevreyParams gp{1.8, 1.0, 1.0, 4.0, 0.1};
  const NoiseModel nm = NoiseModel::for_variant(NoiseVariant::Strong, 4.0, 1.0);
  auto path = sample_conditioned_path({gp.alpha, gp.beta, nm.mu}, 1e-3, 0.5, 9);

  const auto zero = check_energy_monotonicity(Field(WaveLattice(4)), path, nm, gp, 0.5, 0.05);
  CHECK(zero.pass);
  CHECK(zero.observed == 0.0);

  // single shell: norm = const * e^{(phi(t) + delta) rho - mu^2/2 rho^2 t}
  const Field b = random_shell_eigenfield(WaveLattice(3), 2, -1, 2, 0.3);
  Trajectory tr;
  const auto r = check_energy_monotonicity(b, path, nm, gp, 0.5, 0.05, {}, &tr);
  CHECK(r.pass);
  const double rho = std::sqrt(2.0);
  const double g0 = gevrey_norm(b, gp.alpha + gp.delta, gp.sigma, gp.s);
  for (const auto& row : tr.record.rows)
    CHECK(row.gevrey_norm == doctest::Approx(g0 * std::exp(gp.beta * row.t * rho - 8.0 * rho * rho * row.t))
                                 .epsilon(1e-12));

  // small random data under the smallness bound
  const Field u = scale_to_gevrey_norm(gevrey_mult(random_divfree_field(3, 5, 2.0, 1.0), -2.1, 1.0), 0.5, 1.1, 1.8,
                                       1.0);
  MonotonicityOptions mo;
  mo.c_hat = 0.05;
  const auto ok = check_energy_monotonicity(u, path, nm, gp, 0.5, 0.025, mo);
  CHECK(ok.pass);
  CHECK(ok.detail("smallness_bound") == doctest::Approx(8.0 / 0.1));
  CHECK(ok.detail("final_norm") < ok.detail("initial_norm"));

  CHECK_THROWS_AS(check_energy_monotonicity(200.0 * u, path, nm, gp, 0.5, 0.025, mo), ConfigError);
  CHECK_THROWS_AS(check_energy_monotonicity(200.0 * u, path, nm, gp, 0.5, 0.025), MonotonicityViolation);
  CHECK_THROWS_AS(check_energy_monotonicity(u, linear_path(10.0, 0.01, 0.5), nm, gp, 0.5, 0.025), ConfigError);
  const GevreyParams fast{1.8, 1.0, 1.0, 9.0, 0.1};
  CHECK_THROWS_AS(check_energy_monotonicity(u, path, nm, fast, 0.5, 0.025), ConfigError);
}

TEST_CASE("inflation comparison reports both arms") {
  const GevreyParams gp;
  const NoiseModel loud = NoiseModel::for_variant(NoiseVariant::Standard, 3.0, 1.0);
  std::vector<BrownianPath> paths{sample_path(1, 0.01, 0.2), sample_path(2, 0.01, 0.2)};
  StepperConfig cfg{0.01, Scheme::ExponentialIto};
  cfg.evaluator = Evaluator::Fft;

  const Field b = beltrami_sin_cos(WaveLattice(4));
  const auto flat = inflation_comparison(b, loud, paths, gp, cfg, 0.2);
  CHECK_FALSE(flat.deterministic.terminated);
  for (double x : flat.deterministic.sobolev) CHECK(x == doctest::Approx(flat.deterministic.sobolev[0]).epsilon(1e-12));
  REQUIRE(flat.noisy.size() == 2);
  CHECK(flat.noisy[0].sobolev.back() < flat.noisy[0].sobolev.front());

  const auto t0 = inflation_comparison(b, loud, paths, gp, cfg, 0.0);
  CHECK(t0.deterministic.sobolev.size() == 1);
  CHECK(t0.noisy[1].sobolev[0] == t0.deterministic.sobolev[0]);
  CHECK(t0.ratio[0][0] == 1.0);

  const Field r = random_divfree_field(6, 6, 0.5, 5.0);
  const auto rep = inflation_comparison(r, loud, paths, gp, cfg, 0.2);
  const auto j = rep.to_json();
  CHECK(j.contains("deterministic"));
  CHECK(j["noisy"].size() == 2);
  CHECK(rep.ratio.size() == 2);
}

TEST_CASE("report serialisation") {
  InequalityReport r;
  r.name = "x";
  r.parameters = {{"a", 1.0}};
  r.observed = HUGE_VAL;
  r.samples = 3;
  r.pass = true;
  r.by_N = {{4, 0.5}};
  const auto j = r.to_json();
  CHECK(j["observed"] == "inf");
  CHECK(j["by_N"][0]["N"] == 4);
  std::ostringstream os;
  write_reports_csv(os, {r});
  CHECK(os.str() == "name,observed,samples,pass\nx,inf,3,1\n");
  CHECK_THROWS(r.detail("missing"));
}
