#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wkblab/dirac_sphere.hpp"
#include "wkblab/errors.hpp"
#include "wkblab/quadrature.hpp"

using namespace wkblab;

namespace {

// ∫_0^π (C^2/2)(φ^2 + ψ^2) sin^{d-1}θ dθ in θ directly
double theta_mass(const SpinorEigenfunction& f) {
  auto g = [&](double t) {
    const double p = f.radial_phi(t), s = f.radial_psi(t);
    return 0.5 * f.norm_const * f.norm_const * (p * p + s * s) * std::pow(std::sin(t), f.d - 1);
  };
  return composite_gauss_legendre<double>(g, 0.0, std::numbers::pi, 32);
}

}  // namespace

TEST_CASE("gamma matrices in low dimension") {
  GammaSet g2 = gamma_matrices(2);
  CHECK(g2.size() == 2);
  CHECK(g2.matrices[0](0, 1) == GaussInt{0, 1});
  CHECK(g2.matrices[0](1, 0) == GaussInt{0, -1});
  CHECK(g2.matrices[1](0, 1) == GaussInt{1, 0});
  CHECK(g2.matrices[1](1, 0) == GaussInt{1, 0});

  GammaSet g3 = gamma_matrices(3);
  CHECK(g3.matrices[2](0, 0) == GaussInt{1, 0});
  CHECK(g3.matrices[2](1, 1) == GaussInt{-1, 0});
  CHECK(g3.matrices[2].is_diagonal());
}

TEST_CASE("anticommutation is exact and sizes double every other dimension") {
  for (int d = 2; d <= 10; ++d) {
    GammaSet g = gamma_matrices(d);
    CHECK(int(g.matrices.size()) == d);
    CHECK(g.size() == (1 << (d / 2)));
    CHECK(g.anticommutator_defect() == 0);
    if (d % 2 == 1) CHECK(g.matrices.back().is_diagonal());
  }
  CHECK_THROWS_AS(gamma_matrices(1), PreconditionError);
}

TEST_CASE("Jacobi polynomials") {
  CHECK(jacobi(0, 0.3, 1.7, 0.2).value == 1.0);
  for (double x : {-1.0, -0.3, 0.4, 1.0}) CHECK(jacobi(1, 0.0, 1.0, x).value == doctest::Approx(1.5 * x - 0.5));
  // ∫ P2 P3 (1-x)(1+x)^2 dx = 0, integrand is a polynomial of degree 8
  auto w = [](double x) { return (1 - x) * (1 + x) * (1 + x) * jacobi(2, 1, 2, x).value * jacobi(3, 1, 2, x).value; };
  CHECK(std::abs(composite_gauss_legendre<double>(w, -1.0, 1.0, 1, 8)) < 1e-12);
  // derivative by differences
  const double e = 1e-6;
  CHECK(jacobi(7, 0.5, 1.5, 0.3).derivative ==
        doctest::Approx((jacobi(7, 0.5, 1.5, 0.3 + e).value - jacobi(7, 0.5, 1.5, 0.3 - e).value) / (2 * e)).epsilon(1e-7));
  CHECK_THROWS_AS(jacobi(2, -1.0, 0.0, 0.0), PreconditionError);
  CHECK_THROWS_AS(jacobi(2, 0.0, 0.0, 1.5), PreconditionError);
}

TEST_CASE("d = 2 eigenfunctions") {
  SpinorEigenfunction f = eigenfunction(2, 0, 0);
  CHECK(f.norm_const == doctest::Approx(1.0));
  CHECK(f.eigenvalue == 1.0);
  CHECK(eigenfunction(2, 0, 0, Sign::minus).eigenvalue == -1.0);
  for (double t : {0.2, 1.0, 2.5}) {
    CHECK(f.radial_phi(t) == doctest::Approx(std::cos(0.5 * t)));
    CHECK(f.radial_psi(t) == doctest::Approx(std::sin(0.5 * t)));
  }

  SpinorEigenfunction g = eigenfunction(2, 1, 0);
  CHECK(g.norm_const == doctest::Approx(std::sqrt(2.0)));
  // (1/8)∫(6x^2 + 2)dx = 1
  CHECK(composite_gauss_legendre<double>([](double x) { return (6 * x * x + 2) / 8; }, -1.0, 1.0, 1, 4) ==
        doctest::Approx(1.0));
  CHECK(theta_mass(g) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(radial_mass(g) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(eigenfunction(2, 1, 2), PreconditionError);
}

TEST_CASE("n = l gives a pure half-angle profile") {
  for (int d = 2; d <= 5; ++d) {
    SpinorEigenfunction f = eigenfunction(d, 3, 3);
    const double t = 0.9;
    CHECK(f.radial_phi(t) == doctest::Approx(std::pow(std::cos(0.5 * t), 4) * std::pow(std::sin(0.5 * t), 3)));
  }
}

TEST_CASE("radial ODE residuals") {
  const std::vector<double> theta = {0.4, 1.3, 2.2};
  CHECK(radial_ode_residual(eigenfunction(2, 0, 0), theta).max() <= 1e-10);
  SpinorEigenfunction f = eigenfunction(4, 3, 1);
  CHECK(radial_ode_residual(f, theta).max() <= 1e-6);
  const double wrong = (3 + 2 + 1.0) * (3 + 2 + 1.0);
  CHECK(radial_ode_residual(f, theta, wrong).max() > 0.1);
  CHECK_THROWS_AS(radial_ode_residual(f, {0.0}), PreconditionError);
}

TEST_CASE("unit mass against a theta-space oracle") {
  for (int d = 2; d <= 5; ++d)
    for (int n : {0, 2, 7, 15})
      for (int l = 0; l <= std::min(n, 3); ++l) {
        SpinorEigenfunction f = eigenfunction(d, n, l);
        CHECK(theta_mass(f) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(lq_radial_norm(f, 2.0) == doctest::Approx(1.0).epsilon(1e-8));
      }
}

TEST_CASE("sup norm and eigenvalue ladder") {
  CHECK(lq_radial_norm(eigenfunction(2, 0, 0), INFINITY) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  for (int d = 2; d <= 5; ++d)
    for (int n = 0; n < 6; ++n)
      CHECK(eigenfunction(d, n + 1, 0).eigenvalue - eigenfunction(d, n, 0).eigenvalue == 1.0);
}

TEST_CASE("growth fits") {
  std::vector<int> ns = {16, 32, 64, 128, 256};
  SoggeFit s = sogge_fit(2, INFINITY, ns);
  CHECK(s.slope == doctest::Approx(0.5).epsilon(0.03 / 0.5));
  CHECK(s.target == 0.5);
  SoggeFit s2 = sogge_fit(2, 2.0, {8, 16, 32, 64});
  CHECK(std::abs(s2.slope) < 1e-8);
  // doubling the range moves the slope by < 0.02
  SoggeFit wide = sogge_fit(2, INFINITY, {16, 32, 64, 128, 256, 512});
  CHECK(std::abs(wide.slope - s.slope) < 0.02);
  CHECK_THROWS_AS(sogge_fit(2, INFINITY, {16, 32}), PreconditionError);
}

TEST_CASE("Jacobi moments") {
  MomentFit m = jacobi_moment_fit(1, 2, 4, 0, {16, 32, 64, 128, 256, 512});
  CHECK(m.target == 2.0);
  CHECK(std::abs(m.slope - 2.0) <= 0.1);
  MomentFit z = jacobi_moment_fit(2, 2, 2, 1, {16, 32, 64, 128, 256});
  CHECK(z.target == 0.0);
  CHECK(std::abs(z.slope) <= 0.1);
  CHECK_THROWS_WITH_AS(jacobi_moment_fit(0, 0, 2, 0, {16, 32, 128}), doctest::Contains("2r < alpha p - 2 + p/2"),
                       PreconditionError);
  // ∫_0^1 |P_1^{0,1}|^2 dx = ∫ (3x-1)^2/4 = 1/4
  CHECK(jacobi_moment(1, 0, 1, 2, 0) == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("sharpness report") {
  SharpnessReport r4 = sharpness_report(4);
  CHECK(r4.exact);
  CHECK(r4.rows[0].s_q == Rational(5, 6));
  CHECK(r4.rows[0].gamma_w == Rational(5, 6));
  SharpnessReport r2 = sharpness_report(2);
  CHECK(r2.rows[0].gamma_w == Rational(3, 4));
  CHECK(r2.rows[0].s_q == Rational(1, 2));
  CHECK(r2.limit_gap == Rational(1, 4));
  SharpnessReport r3 = sharpness_report(3);
  CHECK(r3.rows.back().gap == Rational(1, 402));
  CHECK(boost::rational_cast<double>(r3.rows.back().gap) == doctest::Approx(0.00249).epsilon(0.01));
  for (int d = 5; d <= 9; ++d) CHECK(sharpness_report(d).exact);
}
