#include <doctest.h>

#include <cmath>

#include "wkblab/errors.hpp"
#include "wkblab/hamilton_jacobi.hpp"

using namespace wkblab;

namespace {

Eigen::VectorXd vec(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

HamiltonianSystem flat_system(double m, double h) {
  return HamiltonianSystem(MetricChart::flat(2), MassParam::of(m), CutoffLibrary::wave(), h);
}

HamiltonianSystem curved_system(double h) {
  return HamiltonianSystem(MetricChart::perturbed_flat(2, 0.15), MassParam::of(0.0), CutoffLibrary::wave(), h);
}

}  // namespace

TEST_CASE("flat flow is a straight line at speed |xi|/q") {
  for (double m : {0.0, 1.0}) {
    const double h = 0.5;
    HamiltonianSystem sys = flat_system(m, h);
    Eigen::VectorXd y = vec(0.1, 0.2), xi = vec(0.6, -0.8);
    const double hm2 = h * h * MassParam::of(m).m_tilde * MassParam::of(m).m_tilde;
    const double q = std::sqrt(1.0 + hm2);
    for (double t : {-0.7, 0.3, 1.1}) {
      FlowState s = hamiltonian_flow(sys, t, y, xi);
      CHECK((s.X - (y - t * xi / q)).norm() < 1e-12);
      CHECK((s.Xi - xi).norm() == 0.0);
      // action = y·ξ + ∫ (Ξ·Ẋ + q) ds = y·ξ + t h^2 m~^2 / q
      CHECK(s.action == doctest::Approx(y.dot(xi) + t * hm2 / q).epsilon(1e-12));
    }
  }
}

TEST_CASE("the Hamiltonian is conserved along curved flows") {
  HamiltonianSystem sys = curved_system(0.1);
  Eigen::VectorXd y = vec(-0.4, 0.3), xi = vec(1.2, 0.4);
  const double q0 = sys.q(y, xi);
  for (double t : {0.05, 0.2, 0.6}) {
    FlowState s = hamiltonian_flow(sys, t, y, xi);
    CHECK(std::abs(sys.q(s.X, s.Xi) - q0) < 1e-9);
  }
  CHECK(richardson_estimate(sys, 0.5, y, xi) < 1e-9);
}

TEST_CASE("symbol jet matches differences of q") {
  HamiltonianSystem sys = curved_system(0.2);
  Eigen::VectorXd x = vec(0.2, -0.1), xi = vec(0.7, 0.9);
  SymbolJet j;
  sys.jet(x.data(), xi.data(), j);
  CHECK(j.q == doctest::Approx(sys.q(x, xi)));
  const double e = 1e-6;
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd a = x, b = x, c = xi, d = xi;
    a[k] += e;
    b[k] -= e;
    c[k] += e;
    d[k] -= e;
    CHECK(j.q_x[k] == doctest::Approx((sys.q(a, xi) - sys.q(b, xi)) / (2 * e)).epsilon(1e-6));
    CHECK(j.q_xi[k] == doctest::Approx((sys.q(x, c) - sys.q(x, d)) / (2 * e)).epsilon(1e-6));
  }
}

TEST_CASE("phase at t = 0 is x·xi") {
  PhaseField f(curved_system(0.1), 1.0);
  Eigen::VectorXd x = vec(0.3, 0.1), xi = vec(-0.5, 1.1);
  PhaseSample s = phase_eval(f, 0.0, x, xi);
  CHECK(s.S == doctest::Approx(x.dot(xi)));
  CHECK((s.grad_x - xi).norm() < 1e-14);
  CHECK((s.foot - x).norm() < 1e-14);
}

TEST_CASE("flat phase equals x·xi + t q") {
  HamiltonianSystem sys = flat_system(1.0, 0.25);
  PhaseField f(sys, 2.0);
  Eigen::VectorXd x = vec(0.3, 0.1), xi = vec(-0.5, 1.1);
  for (double t : {-1.0, 0.4, 1.0}) {
    PhaseSample s = phase_eval(f, t, x, xi);
    const double ref = x.dot(xi) + t * std::sqrt(xi.squaredNorm() + 0.0625);
    CHECK(s.S == doctest::Approx(ref).epsilon(1e-12));
    CHECK(flat_phase(sys, t, x, xi) == doctest::Approx(ref).epsilon(1e-14));
    CHECK((s.mixed - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-10);
  }
}

TEST_CASE("curved phase solves the eikonal equation and its gradient is consistent") {
  PhaseField f(curved_system(0.1), 1.0);
  const HamiltonianSystem& sys = f.system();
  Eigen::VectorXd x = vec(0.2, -0.15), xi = vec(0.8, 0.6);
  const double t = 0.3, dt = 1e-3, e = 1e-5;
  PhaseSample s = phase_eval(f, t, x, xi);
  const double St = (phase_eval(f, t + dt, x, xi).S - phase_eval(f, t - dt, x, xi).S) / (2 * dt);
  CHECK(std::abs(St - sys.q(x, s.grad_x)) < 1e-6);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd a = x, b = x;
    a[k] += e;
    b[k] -= e;
    const double fd = (phase_eval(f, t, a, xi).S - phase_eval(f, t, b, xi).S) / (2 * e);
    CHECK(s.grad_x[k] == doctest::Approx(fd).epsilon(1e-7));
  }
  // ||∇_x∇_ξ S - I|| = O(t)
  const double small = (phase_eval(f, 0.05, x, xi).mixed - Eigen::MatrixXd::Identity(2, 2)).norm();
  const double large = (s.mixed - Eigen::MatrixXd::Identity(2, 2)).norm();
  CHECK(small < large);
  CHECK(small < 0.05 * 2.0);
}

TEST_CASE("remainder fit: exact on flat, quadratic on curved") {
  std::vector<Eigen::VectorXd> xs = {vec(0.0, 0.0), vec(0.3, -0.2)};
  std::vector<Eigen::VectorXd> xis = annulus_grid(2, 0.6, 1.8, 2, 4);
  std::vector<double> ts = {0.02, 0.05, 0.1, 0.2};

  std::vector<PhaseField> flat = {PhaseField(flat_system(1.0, 0.25), 0.5)};
  CHECK(remainder_bound_check(flat, ts, xs, xis).exact);

  std::vector<PhaseField> curved = {PhaseField(curved_system(0.25), 0.5), PhaseField(curved_system(0.0625), 0.5)};
  RemainderFit r = remainder_bound_check(curved, ts, xs, xis);
  CHECK_FALSE(r.exact);
  CHECK(r.slope > 1.9);
  CHECK(r.slope < 2.5);
  CHECK(r.constant_ratio <= 2.0);
}

TEST_CASE("transport flow runs the characteristic back to its foot") {
  HamiltonianSystem sys = flat_system(1.0, 0.5);
  PhaseField f(sys, 1.0);
  Eigen::VectorXd x = vec(0.1, 0.2), xi = vec(0.6, -0.8);
  const double q = std::sqrt(1.25);
  CHECK((transport_flow(f, 0.0, 0.3, x, xi) - (x + 0.3 * xi / q)).norm() < 1e-12);
  CHECK((transport_flow(f, 0.3, 0.3, x, xi) - x).norm() < 1e-14);

  PhaseField g(curved_system(0.1), 1.0);
  Eigen::VectorXd z = transport_flow(g, 0.0, 0.4, x, xi);
  // flowing the foot forward returns to x
  CHECK((hamiltonian_flow(g.system(), 0.4, z, xi).X - x).norm() < 1e-9);
}

TEST_CASE("Newton foot solve") {
  HamiltonianSystem sys = curved_system(0.1);
  Eigen::VectorXd x = vec(0.2, 0.1), xi = vec(0.9, -0.3);
  CharacteristicSolution s = solve_characteristic(sys, 0.5, x, xi);
  CHECK(s.residual < 1e-11);
  CHECK((s.trajectory.state.X - x).norm() < 1e-11);
}

TEST_CASE("certified t0 is dyadic below the cap") {
  HamiltonianSystem sys = curved_system(0.125);
  std::vector<Eigen::VectorXd> xs = {vec(0.0, 0.0), vec(0.4, -0.3)};
  const double t0 = certify_t0(sys, xs, annulus_grid(2, 0.5, 2.0, 2, 4), 1.0);
  CHECK(t0 > 0.0);
  CHECK(t0 <= 1.0);
  CHECK(std::log2(t0) == doctest::Approx(std::round(std::log2(t0))));
}

TEST_CASE("annulus grid radii") {
  auto g = annulus_grid(2, 0.5, 2.0, 3, 8);
  CHECK(g.size() == 24);
  for (const auto& v : g) {
    CHECK(v.norm() >= 0.5 - 1e-12);
    CHECK(v.norm() <= 2.0 + 1e-12);
  }
}
