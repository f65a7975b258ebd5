#include <doctest.h>

#include <cmath>

#include "wkblab/errors.hpp"
#include "wkblab/geometry.hpp"

using namespace wkblab;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  int k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

}  // namespace

TEST_CASE("flat chart is the identity") {
  MetricChart c = MetricChart::flat(3);
  Eigen::VectorXd x = vec({0.3, -1.2, 2.0});
  CHECK((c.metric_inverse(x) - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
  CHECK(c.sqrt_det(x) == doctest::Approx(1.0));
  for (const auto& g : c.christoffel(x)) CHECK(g.norm() == 0.0);
  CHECK(ellipticity_bounds(c, ellipticity_grid(c, 8)) == doctest::Approx(1.0));
}

TEST_CASE("perturbed ellipticity stays inside the pattern eigenvalue bound") {
  // M has eigenvalues ±2, so G has spectrum in [1 - 2 eps b, 1 + 2 eps b] with b <= e^{-1}
  const double eps = 0.2;
  MetricChart c = MetricChart::perturbed_flat(2, eps);
  const double lo = 1.0 - 2.0 * eps * std::exp(-1.0), hi = 1.0 + 2.0 * eps * std::exp(-1.0);
  const double C = ellipticity_bounds(c, ellipticity_grid(c, 64));
  CHECK(C <= 1.25);
  CHECK(C <= std::max(hi, 1.0 / lo) + 1e-12);
  CHECK(C > 1.05);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.pattern());
  CHECK(es.eigenvalues()[0] == doctest::Approx(-2.0));
  CHECK(es.eigenvalues()[1] == doctest::Approx(2.0));
}

TEST_CASE("a too-large perturbation is rejected with the offending point") {
  MetricChart c = MetricChart::perturbed_flat(2, 2.0);
  CHECK_THROWS_AS(ellipticity_bounds(c, ellipticity_grid(c, 32)), NotPositiveDefinite);
  try {
    ellipticity_bounds(c, ellipticity_grid(c, 32));
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.point().size() == 2);
  }
}

TEST_CASE("metric and inverse agree; outside the bump the metric is flat") {
  MetricChart c = MetricChart::perturbed_flat(2, 0.15);
  Eigen::VectorXd x = vec({0.2, -0.3});
  CHECK((c.metric(x) * c.metric_inverse(x) - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-13);
  CHECK(c.sqrt_det(x) == doctest::Approx(std::sqrt(c.metric(x).determinant())).epsilon(1e-12));
  Eigen::VectorXd far = vec({1.5, 0.1});
  CHECK((c.metric_inverse(far) - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("Christoffel symbols match central differences of the metric") {
  for (MetricChart c : {MetricChart::perturbed_flat(2, 0.15), MetricChart::sphere_polar(2)}) {
    Eigen::VectorXd x = c.kind() == ChartKind::sphere_polar ? vec({0.9, 0.4}) : vec({0.25, -0.1});
    const int d = c.dim();
    const double e = 1e-5;
    std::vector<Eigen::MatrixXd> dg(d);
    for (int l = 0; l < d; ++l) {
      Eigen::VectorXd a = x, b = x;
      a[l] += e;
      b[l] -= e;
      dg[l] = (c.metric(a) - c.metric(b)) / (2 * e);
    }
    Eigen::MatrixXd Ginv = c.metric_inverse(x);
    auto gam = c.christoffel(x);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          double ref = 0.0;
          for (int l = 0; l < d; ++l)
            ref += 0.5 * Ginv(i, l) * (dg[j](l, k) + dg[k](j, l) - dg[l](j, k));
          CHECK(gam[i](j, k) == doctest::Approx(ref).epsilon(1e-7).scale(1.0));
        }
  }
}

TEST_CASE("inverse metric gradient matches finite differences") {
  MetricChart c = MetricChart::perturbed_flat(3, 0.15);
  Eigen::VectorXd x = vec({0.1, 0.2, -0.25});
  auto grad = c.metric_inverse_gradient(x);
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd a = x, b = x;
    a[k] += 1e-6;
    b[k] -= 1e-6;
    Eigen::MatrixXd fd = (c.metric_inverse(a) - c.metric_inverse(b)) / 2e-6;
    CHECK((grad[k] - fd).norm() < 1e-8);
  }
}

TEST_CASE("principal symbol and its square root on the flat chart") {
  MetricChart c = MetricChart::flat(2);
  MassParam m = MassParam::of(1.0);
  Eigen::VectorXd x = vec({0.0, 0.0}), xi = vec({1.0, 0.0});
  CHECK(principal_symbol(c, m, 0.5, x, xi) == doctest::Approx(1.25));

  // psi_tilde = 1 on the plateau, so q = sqrt(p) there
  CutoffLibrary lib = CutoffLibrary::wave();
  CHECK(symbol_sqrt(lib, c, MassParam::of(0.0), 1.0, x, xi) == doctest::Approx(std::sqrt(2.0)));
  Eigen::VectorXd xi2 = vec({0.6, -0.8});
  const double h = 0.1;
  CHECK(symbol_sqrt(lib, c, m, h, x, xi2) == doctest::Approx(std::sqrt(1.0 + h * h)));
}

TEST_CASE("mass parameter") {
  CHECK(MassParam::of(0.0).m_tilde == 1.0);
  CHECK(MassParam::of(2.0).m_tilde == 2.0);
}

TEST_CASE("cutoff library supports") {
  CutoffLibrary w = CutoffLibrary::wave();
  CHECK(w.a() == 0.25);
  CHECK(w.b() == 4.0);
  CHECK(w.phi(0.2) == 0.0);
  CHECK(w.phi(4.5) == 0.0);
  CHECK(w.phi(1.0) > 0.0);
  CHECK(w.psi_tilde(w.plateau_lo()) == 1.0);
  CHECK(w.psi_tilde(w.plateau_hi()) == 1.0);
  CHECK(w.psi(0.25 * w.a() * 0.99) == 0.0);
  CHECK(w.psi(2.0 * w.plateau_hi() * 1.01) == 0.0);
  CHECK(w.psi(2.0) == doctest::Approx(std::sqrt(2.0)));

  // phi stays away from [-2 m~^2, 2 m~^2]
  const double mt = 1.7;
  CutoffLibrary kg = CutoffLibrary::klein_gordon(mt);
  CHECK(kg.a() == doctest::Approx(2.25 * mt * mt));
  for (double l = -2 * mt * mt; l <= 2 * mt * mt; l += 0.01) CHECK(kg.phi(l) == 0.0);
}

TEST_CASE("psi jet derivatives agree with differences") {
  CutoffLibrary w = CutoffLibrary::wave();
  for (double l : {0.1, 0.13, 0.5, 9.0, 14.0}) {
    auto j = w.psi_jet<2>(l);
    const double e = 1e-5;
    const double d1 = (w.psi(l + e) - w.psi(l - e)) / (2 * e);
    const double d2 = (w.psi(l + e) - 2 * w.psi(l) + w.psi(l - e)) / (e * e);
    CHECK(j.c[0] == doctest::Approx(w.psi(l)));
    CHECK(j.c[1] == doctest::Approx(d1).epsilon(1e-6));
    CHECK(2.0 * j.c[2] == doctest::Approx(d2).epsilon(1e-3).scale(1.0));
    double out[3];
    w.psi_d2(l, out);
    CHECK(out[1] == doctest::Approx(j.c[1]));
    CHECK(out[2] == doctest::Approx(2.0 * j.c[2]));
  }
}

TEST_CASE("bump and smooth step") {
  CHECK(bump(0.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(bump(1.0) == 0.0);
  CHECK(smooth_step(-0.1) == 0.0);
  CHECK(smooth_step(1.2) == 1.0);
  CHECK(smooth_step(0.5) == doctest::Approx(0.5));
}
