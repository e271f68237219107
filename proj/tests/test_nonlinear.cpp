#include "emhd/fields.hpp"
#include "emhd/nonlinear.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace emhd;
using emhd::test::rel_diff;
using C = std::complex<double>;

namespace {

// Natural size of a quadratic term with two derivatives.
double quad_scale(const Field& b) { return l2_norm(b) * sobolev_norm(b, 2.0); }

Field single_mode(const WaveLattice& lat, const Mode& k, const Field::Vector& v) {
  Field f(lat);
  f.set_mode(k, v);
  return f;
}

}  // namespace

TEST_CASE("Beltrami fields are steady: P = 0") {
  const Field b = beltrami_sin_cos(WaveLattice(4));
  for (auto form : {NonlinearForm::Curl, NonlinearForm::Transport}) {
    CHECK(l2_norm(p_nonlinear(b, form)) <= 1e-12 * quad_scale(b));
    CHECK(l2_norm(p_nonlinear_oracle(b, form)) <= 1e-12 * quad_scale(b));
  }
  for (int shell : {1, 3, 6}) {
    const Field s = random_shell_eigenfield(WaveLattice(4), shell, shell % 2 ? 1 : -1, 100 + shell);
    CHECK(l2_norm(p_nonlinear(s, NonlinearForm::Curl)) <= 1e-12 * quad_scale(s));
    CHECK(l2_norm(p_nonlinear(s, NonlinearForm::Transport)) <= 1e-12 * quad_scale(s));
  }
  const Field zero(WaveLattice(3));
  CHECK(l2_norm(p_nonlinear(zero)) == 0.0);
}

TEST_CASE("convolution_oracle support and product-to-sum") {
  WaveLattice lat(3);
  const Field a = single_mode(lat, {1, 0, 2}, {C(1), C(0.5), C(0, 1)});
  const Field c = single_mode(lat, {0, 1, -1}, {C(0.3), C(-1), C(2)});
  const Field out = convolution_oracle_padded(a, c, stencil::Pointwise<double>{});
  const std::vector<Mode> support{{1, 1, 1}, {1, -1, 3}, {-1, 1, -3}, {-1, -1, -1}};
  for (Eigen::Index i = 0; i < out.lattice().size(); ++i) {
    const Mode k = out.lattice().mode(i);
    const bool in = std::any_of(support.begin(), support.end(), [&](const Mode& m) {
      return m[0] == k[0] && m[1] == k[1] && m[2] == k[2];
    });
    if (!in) CHECK(out.coeffs().col(i).norm() == 0.0);
    else CHECK(out.coeffs().col(i).norm() > 0.0);
  }

  // cos x * cos y = (1/4) sum over (+-1, +-1, 0).
  const Field cx = test::sample_field(lat, 8, [](double x, double, double) { return test::Vec3(std::cos(x), 0, 0); });
  const Field cy = test::sample_field(lat, 8, [](double, double y, double) { return test::Vec3(std::cos(y), 0, 0); });
  const Field prod = convolution_oracle(cx, cy, stencil::Pointwise<double>{});
  for (Mode k : std::vector<Mode>{{1, 1, 0}, {1, -1, 0}, {-1, 1, 0}, {-1, -1, 0}})
    CHECK(std::abs(prod[k](0) - C(0.25)) < 1e-15);
  CHECK(std::abs(prod.coeffs().row(0).norm() - 0.5) < 1e-15);
}

TEST_CASE("fast dealiased evaluator agrees with the oracle") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Field b = random_divfree_field(seed, 6, 1.0, 1.0);
    const Field curl_fast = p_nonlinear(b, NonlinearForm::Curl);
    const Field curl_oracle = p_nonlinear_oracle(b, NonlinearForm::Curl);
    const Field trans_fast = p_nonlinear(b, NonlinearForm::Transport);
    const Field trans_oracle = p_nonlinear_oracle(b, NonlinearForm::Transport);
    CHECK(rel_diff(curl_fast, curl_oracle) <= 1e-10);
    CHECK(rel_diff(trans_fast, trans_oracle) <= 1e-10);
    CHECK(rel_diff(curl_oracle, trans_oracle) <= 1e-10);
    CHECK(rel_diff(p_nonlinear(b, NonlinearForm::Curl, Evaluator::Direct), curl_oracle) <= 1e-12);
  }
}

TEST_CASE("curl-form invariants") {
  const Field b = random_divfree_field(21, 5, 1.5, 1.0);
  const Field p = p_nonlinear(b);
  CHECK(divergence_residual(p) <= 1e-13);
  CHECK(p.coeffs().col(p.lattice().zero_index()).norm() == 0.0);
  CHECK(reality_residual(p) == 0.0);

  // Form equivalence with alias-free evaluation.
  const Field pc = p_nonlinear_oracle(b, NonlinearForm::Curl);
  const Field pt = p_nonlinear_oracle(b, NonlinearForm::Transport);
  CHECK(l2_norm(pc - pt) <= 1e-12 * quad_scale(b));

  // P(aB) = a^2 P(B).
  CHECK(rel_diff(p_nonlinear(-3.0 * b), 9.0 * p) <= 1e-13);

  // <P(B), B> = <J x B, J> = 0.
  for (std::uint64_t seed = 30; seed < 35; ++seed) {
    const Field r = random_divfree_field(seed, 5, 1.0, 1.0);
    CHECK(std::abs(inner(p_nonlinear(r), r)) <= 1e-12 * l2_norm(r) * quad_scale(r));
  }
}

TEST_CASE("undersized grids are rejected") {
  const Field b = random_divfree_field(1, 4, 1.0, 1.0);
  CHECK_THROWS_AS(p_nonlinear_fft(b, NonlinearForm::Curl, 12), TruncationOverflow);
  CHECK(rel_diff(p_nonlinear_fft(b, NonlinearForm::Curl, 13), p_nonlinear_fft(b, NonlinearForm::Curl, 16)) < 1e-13);
  CHECK(dealiased_grid_size(6) == 20);
  CHECK(dealiased_grid_size(16) == 49);
}

TEST_CASE("q_shifted") {
  const Field u = random_divfree_field(77, 6, 1.5, 1.0);

  SUBCASE("theta = 0 is bit-identical to p_nonlinear") {
    const Field q = q_shifted(u, 0.0, 1.0);
    const Field p = p_nonlinear(u, NonlinearForm::Curl);
    CHECK((q.coeffs().array() == p.coeffs().array()).all());
  }
  SUBCASE("combined weights match the literal three-step composition") {
    for (double s : {1.0, 0.9}) {
      const Field direct = q_shifted(u, 0.1, s);
      const Field oracle = q_shifted_oracle(u, 0.1, s);
      CHECK(rel_diff(direct, oracle) <= 1e-10);
      CHECK(rel_diff(q_shifted(u, 0.1, s, Evaluator::Fft), oracle) <= 1e-10);
      CHECK(rel_diff(q_shifted(u, -0.2, s), q_shifted_oracle(u, -0.2, s)) <= 1e-10);
    }
  }
  SUBCASE("single-shell eigenfields stay steady under the shift") {
    const Field b = random_shell_eigenfield(WaveLattice(4), 2, 1, 3);
    CHECK(l2_norm(q_shifted(b, 0.7, 1.0)) <= 1e-12 * quad_scale(gevrey_mult(b, 0.7, 1.0)));
  }
  SUBCASE("bilinear scaling at fixed theta") {
    CHECK(rel_diff(q_shifted(2.0 * u, 0.3, 1.0), 4.0 * q_shifted(u, 0.3, 1.0)) <= 1e-13);
  }
  SUBCASE("overflow guard") {
    // 700 / (2 * 6 sqrt3) ~ 33.7
    CHECK_THROWS_AS(q_shifted(u, 40.0, 1.0), AmplificationOverflow);
    CHECK_THROWS_AS(q_shifted(u, -40.0, 1.0), AmplificationOverflow);
  }
}

TEST_CASE("direct-sum pruning respects the weighted bound") {
  // Gevrey-decaying data: pruning in the rho-weighted frame only perturbs
  // rho-weighted output at the drop_tol level.
  const Field u = gevrey_mult(random_divfree_field(5, 8, 1.0, 1.0), -3.0, 1.0);
  const double theta = 0.2, rho = 0.6;
  const Field full = q_shifted_direct(u, theta, 1.0);
  const Field pruned = q_shifted_direct(u, theta, 1.0, {rho, 1e-6});
  const Field dw = gevrey_mult(full - pruned, rho, 1.0);
  CHECK(l2_norm(dw) <= 1e-4 * l2_norm(gevrey_mult(full, rho, 1.0)));
  CHECK(l2_norm(full - pruned) > 0.0);

  const Field band = band_limit(random_divfree_field(6, 8, 1.0, 1.0), 2);
  CHECK(rel_diff(q_shifted_direct(band, 0.3, 1.0), q_shifted_oracle(band, 0.3, 1.0)) <= 1e-12);
}
