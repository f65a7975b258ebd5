#include <doctest.h>

#include <cmath>

#include "wkblab/wkb.hpp"

using namespace wkblab;

namespace {

Eigen::VectorXd vec(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

PhaseField flat_field(double m, double h) {
  return PhaseField(HamiltonianSystem(MetricChart::flat(2), MassParam::of(m), CutoffLibrary::wave(), h), 1.0);
}

PhaseField curved_field(double h) {
  return PhaseField(
      HamiltonianSystem(MetricChart::perturbed_flat(2, 0.15), MassParam::of(0.0), CutoffLibrary::wave(), h), 1.0);
}

}  // namespace

TEST_CASE("f vanishes on the flat chart and far from the bump") {
  LowerOrderSymbols none;
  PhaseField flat = flat_field(1.0, 0.25);
  CHECK(std::abs(f_coefficient(flat, none, 0.5, vec(0.2, 0.3), vec(1.0, 0.5))) < 1e-12);

  PhaseField curved = curved_field(0.25);
  CHECK(std::abs(f_coefficient(curved, none, 0.05, vec(3.0, 3.0), vec(1.0, 0.5))) <= 1e-8);
  CHECK(std::abs(f_coefficient(curved, none, 0.3, vec(0.1, 0.0), vec(1.0, 0.5))) > 1e-6);
}

TEST_CASE("f stays bounded as h shrinks") {
  LowerOrderSymbols none;
  double worst = 0.0;
  for (double h : {1.0, 0.25, 1.0 / 16, 1.0 / 64})
    worst = std::max(worst, std::abs(f_coefficient(curved_field(h), none, 0.4, vec(0.1, -0.2), vec(0.8, 0.6))));
  CHECK(worst < 10.0);
}

TEST_CASE("flat leading amplitude is the initial cutoff") {
  PhaseField f = flat_field(1.0, 0.25);
  LowerOrderSymbols none;
  InitialAmplitude a0 = cutoff_initial_amplitude(f.system());
  Eigen::VectorXd x = vec(0.3, -0.4);
  for (Eigen::VectorXd xi : {vec(0.7, 0.2), vec(1.0, 1.0), vec(0.1, 0.0)}) {
    const double phi = f.system().library().phi(xi.squaredNorm());
    CHECK(std::abs(leading_amplitude(f, none, a0, 0.6, x, xi) - phi) < 1e-12);
    CHECK(std::abs(leading_amplitude_characteristic(f, none, a0, 0.6, x, xi) - phi) < 1e-12);
  }
}

TEST_CASE("constant q1 rotates the flat amplitude by exp(i c t)") {
  PhaseField f = flat_field(0.0, 0.25);
  const double c = 0.7;
  SymbolFunction q1 = [c](const Eigen::VectorXd&, const Eigen::VectorXd&) { return std::complex<double>(c, 0.0); };
  LowerOrderSymbols s{q1};
  InitialAmplitude a0 = cutoff_initial_amplitude(f.system());
  Eigen::VectorXd x = vec(0.1, 0.1), xi = vec(0.9, 0.3);
  const double t = 0.8;
  const cplx ref = f.system().library().phi(xi.squaredNorm()) * std::exp(cplx(0.0, c * t));
  CHECK(std::abs(leading_amplitude(f, s, a0, t, x, xi) - ref) < 1e-10);
  CHECK(std::abs(leading_amplitude_characteristic(f, s, a0, t, x, xi) - ref) < 1e-10);
}

TEST_CASE("curved amplitude solves the transport equation") {
  PhaseField f = curved_field(0.1);
  LowerOrderSymbols none;
  Amplitude a = make_leading_amplitude(f, none, cutoff_initial_amplitude(f.system()));
  Eigen::VectorXd x = vec(0.15, -0.1), xi = vec(0.9, 0.5);
  const double t = 0.3, e = 1e-4;
  CHECK(std::abs(a.eval(0.0, x, xi) - f.system().library().phi(f.system().p00(x, xi))) < 1e-13);

  const cplx at = (a.eval(t + e, x, xi) - a.eval(t - e, x, xi)) / (2 * e);
  PhaseSample s = phase_eval(f, t, x, xi);
  Eigen::VectorXd V = f.system().grad_xi_q(x, s.grad_x);
  cplx adv = 0.0;
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd p = x, m = x;
    p[k] += e;
    m[k] -= e;
    adv += V[k] * (a.eval(t, p, xi) - a.eval(t, m, xi)) / (2 * e);
  }
  const cplx res = at - adv - f_coefficient(f, none, t, x, xi) * a.eval(t, x, xi);
  CHECK(std::abs(res) <= 1e-5);
}

TEST_CASE("Simpson reference and characteristic integration agree") {
  PhaseField f = curved_field(0.125);
  LowerOrderSymbols none;
  InitialAmplitude a0 = cutoff_initial_amplitude(f.system());
  for (double t : {0.1, 0.4}) {
    Eigen::VectorXd x = vec(0.05, 0.2), xi = vec(-0.6, 1.0);
    const cplx a = leading_amplitude(f, none, a0, t, x, xi, 65);
    const cplx b = leading_amplitude_characteristic(f, none, a0, t, x, xi);
    CHECK(std::abs(a - b) < 1e-8);
  }
}

TEST_CASE("first corrector vanishes at t = 0 and on the flat chart") {
  LowerOrderSymbols none;
  PhaseField flat = flat_field(1.0, 0.25);
  Amplitude a0f = make_leading_amplitude(flat, none, cutoff_initial_amplitude(flat.system()));
  Eigen::VectorXd x = vec(0.1, 0.0), xi = vec(0.8, 0.7);
  CHECK(std::abs(first_corrector(flat, none, a0f, 0.5, x, xi)) < 1e-12);

  PhaseField curved = curved_field(0.125);
  Amplitude a0 = make_leading_amplitude(curved, none, cutoff_initial_amplitude(curved.system()));
  CHECK(std::abs(first_corrector(curved, none, a0, 0.0, x, xi)) == 0.0);
  // |a1| = O(t)
  const double r1 = std::abs(first_corrector(curved, none, a0, 0.05, x, xi));
  const double r2 = std::abs(first_corrector(curved, none, a0, 0.1, x, xi));
  CHECK(r2 > 0.0);
  CHECK(std::log2(r2 / r1) >= 0.9);
}

TEST_CASE("amplitude support stays inside the enlarged cutoff support") {
  LowerOrderSymbols none;
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> samples;
  for (double r : {0.3, 0.45, 0.55, 1.0, 1.9, 2.1, 2.6})
    for (double a : {0.0, 1.0, 2.5})
      samples.push_back({vec(0.2 * std::cos(a), -0.1), vec(r * std::cos(a), r * std::sin(a))});
  std::vector<double> ts = {0.0, 0.2, 0.5};

  PhaseField flat = flat_field(1.0, 0.25);
  CHECK(support_check(make_leading_amplitude(flat, none, cutoff_initial_amplitude(flat.system())), ts, samples).ok);

  PhaseField curved = curved_field(0.25);
  Amplitude a = make_leading_amplitude(curved, none, cutoff_initial_amplitude(curved.system()));
  CHECK(support_check(a, ts, samples, 1.5).ok);
}
