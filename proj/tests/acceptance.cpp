// Acceptance suite: one line per criterion. Usage: acceptance [N ...] (default: all).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "wkblab/dirac_sphere.hpp"
#include "wkblab/errors.hpp"
#include "wkblab/hamilton_jacobi.hpp"
#include "wkblab/oscillatory.hpp"
#include "wkblab/quadrature.hpp"
#include "wkblab/strichartz.hpp"
#include "wkblab/wkb.hpp"

using namespace wkblab;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(v.size());
  int i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

std::vector<Eigen::VectorXd> square_grid(double extent, int n) {
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.push_back(vec({-extent + 2 * extent * i / (n - 1), -extent + 2 * extent * j / (n - 1)}));
  return out;
}

// ---------------------------------------------------------------- 1

Outcome check_flat_phase() {
  const MetricChart chart = MetricChart::flat(2);
  const MassParam mass = MassParam::of(1.0);
  double worst = 0.0;
  for (double h : {1.0, 0.25, 0.0625}) {
    const HamiltonianSystem sys(chart, mass, CutoffLibrary::wave(), h);
    const PhaseField field(sys, 1.0);
    for (int it = 0; it < 5; ++it) {
      const double t = -1.0 + 0.5 * it;
      for (int ix = 0; ix < 5; ++ix) {
        const Eigen::VectorXd x = vec({-1.0 + 0.5 * ix, 0.3 - 0.2 * ix});
        for (int k = 0; k < 5; ++k) {
          const double r = 0.5 + 0.375 * k, a = 0.4 + 2.0 * kPi * k / 5;
          const Eigen::VectorXd xi = vec({r * std::cos(a), r * std::sin(a)});
          const double exact = x.dot(xi) + t * std::sqrt(h * h * mass.m * mass.m + xi.squaredNorm());
          worst = std::max(worst, std::abs(field.eval(t, x, xi).S - exact));
        }
      }
    }
  }
  return {worst <= 1e-8, "max |S - x.xi - t sqrt(h^2m^2+|xi|^2)| = " + fmt(worst) + " (tol 1e-8)"};
}

// ---------------------------------------------------------------- 2

Outcome check_hj_structure() {
  const MetricChart chart = MetricChart::perturbed_flat(2);
  const MassParam mass = MassParam::of(0.0);
  const std::vector<Eigen::VectorXd> xs = square_grid(0.6, 5);
  const std::vector<Eigen::VectorXd> xis = annulus_grid(2, 0.5, 2.0, 3, 8);
  std::vector<double> ts;
  for (int k = 0; k < 5; ++k) ts.push_back(0.00625 * std::pow(2.0, k));
  std::vector<PhaseField> fields;
  double residual = 0.0;
  for (double h : {1.0, 0.25, 0.0625}) {
    const HamiltonianSystem sys(chart, mass, CutoffLibrary::wave(), h);
    fields.emplace_back(sys, 0.2);
    const double dt = 1e-4;
    for (double t : ts)
      for (const auto& x : xs)
        for (const auto& xi : xis) {
          const PhaseSample ps = fields.back().eval(t, x, xi);
          const double St = (fields.back().eval(t + dt, x, xi).S - fields.back().eval(t - dt, x, xi).S) / (2 * dt);
          residual = std::max(residual, std::abs(St - sys.q(x, ps.grad_x)));
        }
  }
  const RemainderFit fit = remainder_bound_check(fields, ts, xs, xis);
  const bool ok = residual <= 1e-6 && !fit.exact && fit.slope >= 1.9 && fit.slope <= 2.5 && fit.constant_ratio <= 2.0;
  std::string per_h;
  for (std::size_t i = 0; i < fit.slopes.size(); ++i) per_h += " " + fmt(fit.slopes[i]);
  return {ok, "HJ residual " + fmt(residual) + " (tol 1e-6), remainder slope " + fmt(fit.slope) +
                  " in [1.9, 2.5] (per h:" + per_h + "), constant ratio " + fmt(fit.constant_ratio) + " (<= 2)"};
}

// ---------------------------------------------------------------- 3

Outcome check_flat_amplitude() {
  double worst0 = 0.0, worst1 = 0.0;
  for (double m : {0.0, 1.0})
    for (double h : {1.0, 0.25, 0.0625}) {
      const HamiltonianSystem sys(MetricChart::flat(2), MassParam::of(m), CutoffLibrary::wave(), h);
      const PhaseField field(sys, 1.0);
      const LowerOrderSymbols none;
      const Amplitude a0 = make_leading_amplitude(field, none, cutoff_initial_amplitude(sys));
      const Amplitude a1 = make_first_corrector(field, none, a0);
      for (double t : {0.25, 1.0})
        for (const auto& x : {vec({0.0, 0.0}), vec({0.7, -0.4})})
          for (const auto& xi : annulus_grid(2, 0.4, 2.2, 3, 4)) {
            const double phi = sys.library().phi(xi.squaredNorm());
            worst0 = std::max(worst0, std::abs(a0.eval(t, x, xi) - phi));
            worst1 = std::max(worst1, std::abs(a1.eval(t, x, xi)));
          }
    }
  return {worst0 <= 1e-10 && worst1 <= 1e-10,
          "max |a0 - phi(|xi|^2)| = " + fmt(worst0) + ", max |a1| = " + fmt(worst1) + " (tol 1e-10)"};
}

// ---------------------------------------------------------------- 4, 5

DecayFitRequest decay_request(const MetricChart& chart, bool kg, double t0) {
  DecayFitRequest r;
  r.chart = chart;
  r.mass = MassParam::of(kg ? 1.0 : 0.0);
  r.library = kg ? CutoffLibrary::klein_gordon(1.0) : CutoffLibrary::wave();
  r.window = kg ? Window::kg : Window::wave;
  r.t0 = t0;
  for (int k : kg ? std::vector<int>{10, 12, 14} : std::vector<int>{5, 6, 7}) {
    const double h = std::ldexp(1.0, -k);
    const double lo = 16.0 * h, hi = kg ? std::sqrt(h) * t0 : t0;
    std::vector<double> ts;
    for (int i = 0; i < 5; ++i) ts.push_back(lo * std::pow(hi / lo, i / 4.0));
    r.h_values.push_back(h);
    r.t_values.push_back(ts);
  }
  r.x_points = {vec({0.0, 0.0}), vec({0.3, -0.2})};
  return r;
}

Outcome check_wave_fit() {
  const MetricChart chart = MetricChart::perturbed_flat(2);
  const HamiltonianSystem probe(chart, MassParam::of(0.0), CutoffLibrary::wave(), std::ldexp(1.0, -7));
  const double t0 = certify_t0(probe, square_grid(1.2, 7), annulus_grid(2, 0.5, 2.0, 4, 12), 1.0);
  const DecayFit f = decay_fit(decay_request(chart, false, t0));
  const bool ok = std::abs(f.alpha - 2.0) <= 0.25 && std::abs(f.beta - 0.5) <= 0.15;
  return {ok, "t0 = " + fmt(t0) + ", alpha " + fmt(f.alpha) + " (2 +- 0.25), beta " + fmt(f.beta) +
                  " (0.5 +- 0.15), residual " + fmt(f.residual)};
}

Outcome check_kg_fit() {
  Outcome out;
  for (const MetricChart& chart : {MetricChart::flat(2), MetricChart::perturbed_flat(2)}) {
    const DecayFit f = decay_fit(decay_request(chart, true, 1.0));
    const bool ok = std::abs(f.alpha - 3.0) <= 0.25 && std::abs(f.beta - 1.0) <= 0.15;
    out.pass = out.pass && ok;
    if (!out.detail.empty()) out.detail += "; ";
    out.detail += to_string(chart.kind()) + ": alpha " + fmt(f.alpha) + " (3 +- 0.25), beta " + fmt(f.beta) +
                  " (1 +- 0.15)";
  }
  return out;
}

// ---------------------------------------------------------------- 6

Outcome check_hessian_structure() {
  const MassParam mass = MassParam::of(1.0);
  double eig_err = 0.0;
  std::vector<double> cs;
  for (int k = 2; k <= 8; ++k) {
    const double h = std::ldexp(1.0, -k), hm2 = h * h * mass.m_tilde * mass.m_tilde;
    for (const auto& eta : annulus_grid(2, 0.5, 2.0, 5, 16)) {
      const double r2 = eta.squaredNorm() + hm2;
      const double expected = hm2 / std::pow(r2, 1.5);
      eig_err = std::max(eig_err, std::abs(hessian_spectrum(mass, h, eta)[0] - expected));
    }
    double c = 1e300;
    for (int i = 0; i <= 40; ++i)
      for (int j = 0; j <= 40; ++j) {
        const double zeta = -2.0 + 0.1 * i, eta = -2.0 + 0.1 * j, r = std::hypot(zeta, eta);
        if (r < 0.5 || r > 2.0 || std::abs(eta) < 1e-12) continue;
        c = std::min(c, reduced_phase_second_derivative(mass, h, vec({zeta}), eta) / hm2);
      }
    cs.push_back(c);
  }
  const auto [mn, mx] = std::minmax_element(cs.begin(), cs.end());
  const bool ok = eig_err <= 1e-10 && *mn > 0.0 && *mx / *mn <= 2.0;
  return {ok, "smallest eigenvalue error " + fmt(eig_err) + " (tol 1e-10); F''/(h^2 m~^2) min over annulus in [" +
                  fmt(*mn) + ", " + fmt(*mx) + "] over h = 2^-2..2^-8 (ratio " + fmt(*mx / *mn) + ", <= 2)"};
}

// ---------------------------------------------------------------- 7

PhaseFunction quadratic(int dim, Eigen::VectorXd signs) {
  PhaseFunction p;
  p.dim = dim;
  p.value = [signs](const Eigen::VectorXd& x) { return 0.5 * (signs.array() * x.array().square()).sum(); };
  p.gradient = [signs](const Eigen::VectorXd& x) { return Eigen::VectorXd(signs.array() * x.array()); };
  p.hessian = [signs](const Eigen::VectorXd&) { return Eigen::MatrixXd(signs.asDiagonal()); };
  return p;
}

Outcome check_reference_suites() {
  Outcome out;
  const std::vector<double> lambdas = {50.0, 100.0, 200.0, 400.0};
  const RealFunction gauss_bump = [](const Eigen::VectorXd& x) {
    double v = 1.0;
    for (int i = 0; i < x.size(); ++i) v *= std::exp(-x[i] * x[i]) * bump(x[i] / 2.0) * std::exp(1.0);
    return v;
  };
  auto add = [&](bool ok, const std::string& what) {
    out.pass = out.pass && ok;
    out.detail += (out.detail.empty() ? "" : "; ") + what + (ok ? " ok" : " FAILED");
  };

  for (double sign : {1.0, -1.0}) {
    const PhaseFunction ph = quadratic(1, vec({sign}));
    const auto c = stationary_phase_error_check(ph, gauss_bump, lambdas, vec({0.3}), vec({-2.0}), vec({2.0}));
    const auto sp = stationary_phase_reference(ph, gauss_bump, 200.0, vec({0.3}), vec({-2.0}), vec({2.0}));
    const cplx expected = std::sqrt(2.0 * kPi / 200.0) * std::polar(1.0, sign * kPi / 4.0);
    const bool lead = std::abs(sp.leading - expected) <= 1e-12 && sp.signature == int(sign);
    add(c.pass && lead, std::string(sign > 0 ? "x^2/2" : "-x^2/2") + " error slope " + fmt(c.slope) + " (<= -1.4)");
  }
  {
    const PhaseFunction ph = quadratic(2, vec({1.0, -1.0}));
    const auto c = stationary_phase_error_check(ph, gauss_bump, lambdas, vec({0.2, -0.1}), vec({-2.0, -2.0}),
                                                vec({2.0, 2.0}));
    add(c.pass, "2-d saddle error slope " + fmt(c.slope) + " (<= -1.9)");
  }
  {
    const PhaseFunction ph = quadratic(1, vec({1.0}));
    const RealFunction off = [](const Eigen::VectorXd& x) { return bump((x[0] - 1.5) / 0.5); };
    const auto c = non_stationary_decay_check(ph, off, {32.0, 64.0, 128.0, 256.0, 512.0}, vec({1.0}), vec({2.0}));
    add(c.pass, "non-stationary final local slope " + fmt(c.local_slopes.back()) + " (< -4, steepening)");
  }
  {
    const OneDFunction amp{[](double x) { return 1.0 + 0.5 * x; }, [](double) { return 0.5; }};
    std::vector<double> lam;
    for (int k = 0; k <= 6; ++k) lam.push_back(100.0 * std::pow(10.0, 0.5 * k));
    const auto r = van_der_corput_check([](double x) { return x * x; }, [](double x) { return 2 * x; },
                                        [](double) { return 2.0; }, 2, 2.0, amp, -1.0, 1.0, lam);
    add(r.premise_ok && r.holds && r.max_constant <= 3.0, "x^2 Van der Corput constant " + fmt(r.max_constant) + " (<= 3)");
    const OneDFunction rise{[](double x) { return std::sin(0.5 * kPi * x); },
                            [](double x) { return 0.5 * kPi * std::cos(0.5 * kPi * x); }};
    const auto s = van_der_corput_check([](double x) { return x; }, [](double) { return 1.0; },
                                        [](double) { return 1.0; }, 1, 1.0, rise, 0.0, 1.0, lam);
    add(s.premise_ok && s.holds, "x Van der Corput constant " + fmt(s.max_constant));
  }
  {
    const MassParam mass = MassParam::of(1.0);
    const double h = 0.1, cz = 0.6, ce = 0.2;
    double cmin = 1e300;
    for (int i = 0; i <= 2000; ++i) {
      const double eta = 0.5 + 1.0 * i / 2000;
      const double d = 1e-3;
      const double f2 = (reduced_phase_value(mass, h, cz, ce, eta + d) - 2 * reduced_phase_value(mass, h, cz, ce, eta) +
                         reduced_phase_value(mass, h, cz, ce, eta - d)) / (d * d);
      cmin = std::min(cmin, f2);
    }
    const double c2 = 0.99 * cmin;
    const double sq = std::sqrt(1.0 - cz * cz), hm2 = h * h;
    const auto r = van_der_corput_check(
        [&](double e) { return reduced_phase_value(mass, h, cz, ce, e); },
        [&](double e) { return ce + sq * e / std::sqrt(e * e + hm2); },
        [&](double e) { return sq * hm2 / std::pow(e * e + hm2, 1.5); }, 2, c2,
        OneDFunction{[](double) { return 1.0; }, [](double) { return 0.0; }}, 0.5, 1.5,
        {1e3, 1e4, 1e5, 1e6});
    add(r.premise_ok && r.holds, "reduced KG phase Van der Corput (c2 = " + fmt(c2) + ") constant " + fmt(r.max_constant));
  }
  return out;
}

// ---------------------------------------------------------------- 8

Outcome check_exponent_algebra() {
  Outcome out;
  auto add = [&](bool ok, const std::string& what) {
    out.pass = out.pass && ok;
    if (!ok) out.detail += (out.detail.empty() ? "" : "; ") + what;
  };
  using L = LebesgueExponent;
  add(gamma_wave(L::of(4), L::infinity(), 2) == Rational(3, 4), "gamma_W(4, inf, 2) != 3/4");
  add(gamma_wave(L::of(2), L::of(6), 4) == Rational(5, 6), "gamma_W(2, 6, 4) != 5/6");
  auto has = [](const std::vector<PairClass>& v, PairClass c) { return std::find(v.begin(), v.end(), c) != v.end(); };
  add(!has(classify(L::of(2), L::infinity(), 3), PairClass::wave), "(2, inf, 3) admitted as wave");
  add(!has(classify(L::of(2), L::infinity(), 2), PairClass::schrodinger), "(2, inf, 2) admitted as schrodinger");
  add(has(classify(L::of(8), L::of(4), 2), PairClass::wave) && has(classify(L::of(8), L::of(4), 2), PairClass::schrodinger),
      "(8, 4, 2) classification");
  int checked = 0;
  for (int d = 2; d <= 6; ++d)
    for (long long p = 2; p <= 12; ++p)
      for (long long q = 2; q <= 12; ++q) {
        const L lp = L::of(p), lq = L::of(q);
        const auto cls = classify(lp, lq, d);
        if (has(cls, PairClass::wave)) {
          const Rational k = tt_star_exponent(Rational(d), Rational(d - 1, 2), lp, lq);
          add(k == gamma_wave(lp, lq, d), "kappa(d, (d-1)/2) != gamma_W");
          ++checked;
        }
        if (has(cls, PairClass::schrodinger)) {
          const Rational k = tt_star_exponent(Rational(d + 1), Rational(d, 2), lp, lq);
          add(k == gamma_kg(lp, lq, d), "kappa(d+1, d/2) != gamma_KG");
          ++checked;
        }
      }
  bool rejected = false;
  try {
    tt_star_exponent(Rational(2), Rational(1), L::of(2), L::infinity());
  } catch (const PreconditionError&) {
    rejected = true;
  }
  add(rejected, "(p, q, tau) = (2, inf, 1) not rejected");
  for (int d = 4; d <= 9; ++d) add(sharpness_report(d).exact, "sharpness identity fails at d = " + std::to_string(d));
  if (out.pass)
    out.detail = "3/4, 5/6, both exclusions, " + std::to_string(checked) + " kappa identities, sharpness d = 4..9 exact";
  return out;
}

// ---------------------------------------------------------------- 9

Outcome check_torus_strichartz() {
  const AdmissiblePair pair{LebesgueExponent::of(8), LebesgueExponent::of(4), 2, PairClass::wave};
  LossFitOptions o;
  o.k_min = 3;
  o.k_max = 8;
  o.family.random_trials = 16;
  const LossFit f = loss_exponent_fit(ModelKind::torus, 2, pair, o);
  const double gw = boost::rational_cast<double>(gamma_wave(pair.p, pair.q, 2));
  const bool ok = f.slope <= gw + 0.15 && f.residual_trend <= 0.1;
  return {ok, "slope " + fmt(f.slope) + " (<= gamma_W + 0.15 = " + fmt(gw + 0.15) + "), residual trend " +
                  fmt(f.residual_trend) + " (<= 0.1)"};
}

// ---------------------------------------------------------------- 10

Outcome check_dirac_suite() {
  Outcome out;
  long long defect = 0;
  bool sizes = true;
  for (int d = 2; d <= 8; ++d) {
    const GammaSet g = gamma_matrices(d);
    defect = std::max(defect, g.anticommutator_defect());
    sizes = sizes && g.size() == (1 << (d / 2)) && int(g.matrices.size()) == d;
  }
  std::vector<double> theta;
  for (int k = 0; k < 64; ++k) theta.push_back(0.01 + (kPi - 0.02) * k / 63.0);
  double res = 0.0, mass = 0.0;
  for (int d = 2; d <= 5; ++d)
    for (int n = 0; n <= 30; ++n)
      for (int l = 0; l <= std::min(n, 5); ++l) {
        const SpinorEigenfunction f = eigenfunction(d, n, l);
        res = std::max(res, radial_ode_residual(f, theta).max());
        mass = std::max(mass, std::abs(radial_mass(f) - 1.0));
      }
  // C from composite Gauss–Legendre in θ, independent of the Gauss–Jacobi path
  auto c_oracle = [](int n) {
    const SpinorEigenfunction f = eigenfunction(2, n, 0);
    const double m = composite_gauss_legendre<double>(
        [&](double t) { return 0.5 * (std::pow(f.radial_phi(t), 2) + std::pow(f.radial_psi(t), 2)) * std::sin(t); },
        0.0, kPi, 64);
    return 1.0 / std::sqrt(m);
  };
  const double c00 = c_oracle(0), c10 = c_oracle(1);
  const bool consts = std::abs(c00 - 1.0) <= 1e-12 && std::abs(c10 - std::sqrt(2.0)) <= 1e-12 &&
                      std::abs(norm_constant(2, 0, 0) - 1.0) <= 1e-14 &&
                      std::abs(norm_constant(2, 1, 0) - std::sqrt(2.0)) <= 1e-14;
  out.pass = defect == 0 && sizes && res <= 1e-6 && mass <= 1e-8 && consts;
  out.detail = "anticommutator defect " + std::to_string(defect) + " (d = 2..8), max ODE residual " + fmt(res) +
               " (<= 1e-6), max |mass - 1| " + fmt(mass) + " (<= 1e-8), C_2(0,0) = " + fmt(c00, 15) +
               ", C_2(1,0) = " + fmt(c10, 15);
  return out;
}

// ---------------------------------------------------------------- 11

std::vector<int> geometric_degrees(int lo, int hi, int count) {
  std::vector<int> ns;
  for (int i = 0; i < count; ++i) ns.push_back(int(std::lround(lo * std::pow(double(hi) / lo, double(i) / (count - 1)))));
  return ns;
}

Outcome check_sogge_growth() {
  const SoggeFit s2 = sogge_fit(2, std::numeric_limits<double>::infinity(), geometric_degrees(16, 256, 9));
  const SoggeFit s4 = sogge_fit(4, 6.0, geometric_degrees(32, 400, 9));
  const std::vector<int> ns = {16, 32, 64, 128, 256, 512};
  const MomentFit m1 = jacobi_moment_fit(1.0, 2.0, 4.0, 0.0, ns);
  const MomentFit m2 = jacobi_moment_fit(2.0, 1.0, 4.0, 1.0, ns);
  const bool ok = std::abs(s2.slope - 0.5) <= 0.03 && std::abs(s4.slope - 5.0 / 6.0) <= 0.05 &&
                  std::abs(m1.slope - m1.target) <= 0.05 * m1.target && std::abs(m2.slope - m2.target) <= 0.05 * m2.target;
  return {ok, "d = 2, q = inf slope " + fmt(s2.slope) + " (0.5 +- 0.03); d = 4, q = 6 slope " + fmt(s4.slope) +
                  " (5/6 +- 0.05); moments (1,2,4,0) " + fmt(m1.slope) + " vs " + fmt(m1.target) + ", (2,1,4,1) " +
                  fmt(m2.slope) + " vs " + fmt(m2.target) + " (5%)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "flat phase exactness", 60, check_flat_phase},
      {2, "HJ structure on perturbed_flat", 300, check_hj_structure},
      {3, "flat amplitude exactness", 60, check_flat_amplitude},
      {4, "wave dispersive fit", 900, check_wave_fit},
      {5, "Klein-Gordon dispersive fit", 900, check_kg_fit},
      {6, "Hessian structure", 60, check_hessian_structure},
      {7, "stationary phase and Van der Corput", 120, check_reference_suites},
      {8, "exponent algebra", 1, check_exponent_algebra},
      {9, "torus Strichartz consistency", 600, check_torus_strichartz},
      {10, "Dirac sphere suite", 120, check_dirac_suite},
      {11, "Sogge growth", 300, check_sogge_growth},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  bool all_pass = true;
  for (const Criterion& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    all_pass = all_pass && pass;
    std::printf("criterion %2d %s  %s: %s [%.1f s, limit %.0f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.title,
                o.detail.c_str(), secs, c.limit_seconds, in_time ? "" : ", over time");
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
