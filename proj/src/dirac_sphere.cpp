#include "wkblab/dirac_sphere.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include "wkblab/errors.hpp"
#include "wkblab/fit.hpp"
#include "wkblab/parallel.hpp"
#include "wkblab/quadrature.hpp"

namespace wkblab {

GaussMatrix GaussMatrix::identity(int n, GaussInt diag) {
  GaussMatrix m(n);
  for (int i = 0; i < n; ++i) m(i, i) = diag;
  return m;
}

GaussMatrix operator*(const GaussMatrix& a, const GaussMatrix& b) {
  const int n = a.size();
  GaussMatrix c(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const GaussInt aik = a(i, k);
      if (aik == GaussInt{}) continue;
      for (int j = 0; j < n; ++j) c(i, j) = c(i, j) + aik * b(k, j);
    }
  return c;
}

GaussMatrix operator+(const GaussMatrix& a, const GaussMatrix& b) {
  GaussMatrix c(a.size());
  for (std::size_t k = 0; k < c.a_.size(); ++k) c.a_[k] = a.a_[k] + b.a_[k];
  return c;
}

GaussMatrix operator*(GaussInt s, const GaussMatrix& a) {
  GaussMatrix c(a.size());
  for (std::size_t k = 0; k < c.a_.size(); ++k) c.a_[k] = s * a.a_[k];
  return c;
}

GaussMatrix GaussMatrix::off_diagonal(const GaussMatrix& a, const GaussMatrix& b) {
  const int n = a.size();
  GaussMatrix m(2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m(i, n + j) = a(i, j);
      m(n + i, j) = b(i, j);
    }
  return m;
}

GaussMatrix GaussMatrix::block_diagonal(const GaussMatrix& a, const GaussMatrix& b) {
  const int n = a.size();
  GaussMatrix m(2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m(i, j) = a(i, j);
      m(n + i, n + j) = b(i, j);
    }
  return m;
}

bool GaussMatrix::is_diagonal() const {
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      if (i != j && (*this)(i, j) != GaussInt{}) return false;
  return true;
}

long long GammaSet::anticommutator_defect() const {
  long long worst = 0;
  const int n = size();
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      GaussMatrix s = matrices[i] * matrices[j] + matrices[j] * matrices[i];
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          GaussInt e = s(a, b);
          if (i == j && a == b) e.re -= 2;
          worst = std::max({worst, std::llabs(e.re), std::llabs(e.im)});
        }
    }
  return worst;
}

namespace {

constexpr GaussInt kI{0, 1};
constexpr GaussInt kMinusI{0, -1};

GaussInt i_power(int k) {
  static const GaussInt table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[((k % 4) + 4) % 4];
}

}  // namespace

GammaSet gamma_matrices(int d) {
  if (d < 2 || d > 10) throw PreconditionError("gamma_matrices needs 2 <= d <= 10, got d = " + std::to_string(d));
  GammaSet g;
  g.d = 2;
  GaussMatrix g1(2), g2(2);
  g1(0, 1) = kI;
  g1(1, 0) = kMinusI;
  g2(0, 1) = {1, 0};
  g2(1, 0) = {1, 0};
  g.matrices = {g1, g2};
  for (int k = 3; k <= d; ++k) {
    GammaSet next;
    next.d = k;
    if (k == 3) {
      next.matrices = g.matrices;
      next.matrices.push_back(kMinusI * (g.matrices[0] * g.matrices[1]));
    } else if (k % 2 == 0) {
      const int n = g.size();
      for (const GaussMatrix& m : g.matrices)
        next.matrices.push_back(GaussMatrix::off_diagonal(kI * m, kMinusI * m));
      GaussMatrix id = GaussMatrix::identity(n);
      next.matrices.push_back(GaussMatrix::off_diagonal(id, id));
    } else {
      next.matrices = g.matrices;
      GaussMatrix prod = g.matrices[0];
      for (int j = 1; j < k - 1; ++j) prod = prod * g.matrices[j];
      next.matrices.push_back(i_power((k - 1) / 2) * prod);
    }
    g = std::move(next);
  }
  return g;
}

JacobiValue jacobi(int n, double alpha, double beta, double x) {
  if (n < 0) throw PreconditionError("Jacobi degree must be nonnegative");
  if (!(alpha > -1.0 && beta > -1.0)) throw PreconditionError("Jacobi parameters must exceed -1");
  if (!(x >= -1.0 && x <= 1.0)) throw PreconditionError("Jacobi argument must lie in [-1, 1]");
  return jacobi_eval(n, alpha, beta, x);
}

double norm_constant(int d, int n, int l) {
  if (l < 0 || n < l) throw PreconditionError("eigenfunctions need n >= l >= 0");
  const double hd = 0.5 * d;
  const double log_c2 = std::log(2.0 * n + d) + std::lgamma(n + l + d) + std::lgamma(n - l + 1.0) -
                        (d - 1) * std::numbers::ln2 - std::lgamma(n + hd) - std::lgamma(n + hd + 1.0);
  return std::exp(0.5 * log_c2);
}

namespace {

// Half-angle prefactor cos^a(θ/2) sin^b(θ/2) and the Jacobi parameters of one component.
struct Component {
  int a = 0, b = 0;
  double alpha = 0.0, beta = 0.0;
  int degree = 0;
  double cos_sign = 1.0;  // sign of the (ℓ + (d-1)/2) cos θ / sin^2 θ term

  double value(double theta) const {
    const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
    return std::pow(c, a) * std::pow(s, b) * jacobi_eval(degree, alpha, beta, std::cos(theta)).value;
  }
};

Component phi_component(int d, int n, int l) {
  return {l + 1, l, 0.5 * d + l - 1.0, 0.5 * d + l, n - l, 1.0};
}

Component psi_component(int d, int n, int l) {
  return {l, l + 1, 0.5 * d + l, 0.5 * d + l - 1.0, n - l, -1.0};
}

}  // namespace

SpinorEigenfunction eigenfunction(int d, int n, int l, Sign sign) {
  if (d < 2) throw PreconditionError("eigenfunction needs d >= 2");
  if (l < 0 || n < l) throw PreconditionError("eigenfunctions need n >= l >= 0 for regularity");
  SpinorEigenfunction f;
  f.d = d;
  f.n = n;
  f.l = l;
  f.sign = sign;
  f.norm_const = norm_constant(d, n, l);
  f.eigenvalue = static_cast<int>(sign) * (n + 0.5 * d);
  const Component phi = phi_component(d, n, l), psi = psi_component(d, n, l);
  f.radial_phi = [phi](double theta) { return phi.value(theta); };
  f.radial_psi = [psi](double theta) { return psi.value(theta); };
  return f;
}

namespace {

double component_residual(const Component& comp, int d, int l, double lambda2, double theta, double& value) {
  const double x = std::cos(theta), st = std::sin(theta);
  const double th = std::tan(0.5 * theta), ct = 1.0 / th;
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  const double pref = std::pow(c, comp.a) * std::pow(s, comp.b);
  // A'/A and its derivative for A = cos^a(θ/2) sin^b(θ/2)
  const double g = 0.5 * (-comp.a * th + comp.b * ct);
  const double gp = -0.25 * (comp.a / (c * c) + comp.b / (s * s));
  const double A = pref, A1 = pref * g, A2 = pref * (gp + g * g);

  const int m = comp.degree;
  double P = 0.0, P1 = 0.0, P2 = 0.0;
  const JacobiValue pv = jacobi_eval(m, comp.alpha, comp.beta, x);
  P = pv.value;
  P1 = pv.derivative;
  if (m >= 2) {
    const JacobiValue sh = jacobi_eval(m - 1, comp.alpha + 1.0, comp.beta + 1.0, x);
    P2 = 0.5 * (m + comp.alpha + comp.beta + 1.0) * sh.derivative;
  }
  const double Pt = -st * P1;
  const double Ptt = st * st * P2 - x * P1;

  const double f = A * P;
  const double f1 = A1 * P + A * Pt;
  const double f2 = A2 * P + 2.0 * A1 * Pt + A * Ptt;

  const double k = 0.5 * (d - 1);
  const double cot = x / st, csc2 = 1.0 / (st * st);
  // (∂ + k cot)^2 f = f'' + 2k cot f' + (k^2 cot^2 - k csc^2) f
  const double sq = f2 + 2.0 * k * cot * f1 + (k * k * cot * cot - k * csc2) * f;
  const double lk = l + k;
  value = f;
  return sq - lk * lk * csc2 * f + comp.cos_sign * lk * x * csc2 * f + lambda2 * f;
}

}  // namespace

RadialResidual radial_ode_residual(const SpinorEigenfunction& f, const std::vector<double>& theta,
                                   double lambda_squared_override) {
  if (theta.empty()) throw PreconditionError("radial_ode_residual needs a nonempty grid");
  for (double t : theta)
    if (!(t >= 1e-3 && t <= std::numbers::pi - 1e-3))
      throw PreconditionError("radial_ode_residual grid must stay 1e-3 away from the poles");
  const double lambda2 = lambda_squared_override >= 0.0 ? lambda_squared_override
                                                        : (f.n + 0.5 * f.d) * (f.n + 0.5 * f.d);
  const Component comps[2] = {phi_component(f.d, f.n, f.l), psi_component(f.d, f.n, f.l)};
  double out[2];
  for (int c = 0; c < 2; ++c) {
    double worst = 0.0, scale = 0.0;
    for (double t : theta) {
      double v = 0.0;
      const double r = component_residual(comps[c], f.d, f.l, lambda2, t, v);
      worst = std::max(worst, std::abs(r));
      scale = std::max(scale, std::abs(v));
    }
    out[c] = scale > 0.0 ? worst / scale : worst;
  }
  return {out[0], out[1]};
}

namespace {

// Gauss–Jacobi in cos θ for the weight sin^{d-2}θ, cached per (nodes, d).
const GaussRule& sphere_rule(int nodes, int d) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{nodes, d}];
  if (!slot) {
    const double a = 0.5 * (d - 2);
    slot = std::make_unique<GaussRule>(gauss_jacobi(nodes, a, a));
  }
  return *slot;
}

// (C^2/2)(φ^2 + ψ^2) at cos θ = x
double density(const SpinorEigenfunction& f, const Component& phi, const Component& psi, double x) {
  // cos^2(θ/2) = (1+x)/2, sin^2(θ/2) = (1-x)/2
  const double up = 0.5 * (1.0 + x), dn = 0.5 * (1.0 - x);
  const double p = jacobi_eval(phi.degree, phi.alpha, phi.beta, x).value;
  const double s = jacobi_eval(psi.degree, psi.alpha, psi.beta, x).value;
  const double phi2 = std::pow(up, phi.a) * std::pow(dn, phi.b) * p * p;
  const double psi2 = std::pow(up, psi.a) * std::pow(dn, psi.b) * s * s;
  return 0.5 * f.norm_const * f.norm_const * (phi2 + psi2);
}

}  // namespace

double lq_radial_norm(const SpinorEigenfunction& f, double q) {
  if (!(q >= 1.0)) throw PreconditionError("lq_radial_norm needs q >= 1");
  const Component phi = phi_component(f.d, f.n, f.l), psi = psi_component(f.d, f.n, f.l);
  const int nodes = 4 * (f.n + 20);
  if (std::isinf(q)) {
    double best = std::max(density(f, phi, psi, 1.0), density(f, phi, psi, -1.0));
    const int m = 2 * nodes;
    for (int k = 1; k < m; ++k)
      best = std::max(best, density(f, phi, psi, std::cos(std::numbers::pi * k / m)));
    for (double x : sphere_rule(nodes, f.d).nodes) best = std::max(best, density(f, phi, psi, x));
    return std::sqrt(best);
  }
  const GaussRule& rule = sphere_rule(nodes, f.d);
  std::vector<double> terms(rule.nodes.size());
  for (std::size_t k = 0; k < terms.size(); ++k)
    terms[k] = rule.weights[k] * std::pow(density(f, phi, psi, rule.nodes[k]), 0.5 * q);
  return std::pow(pairwise_sum(terms.data(), terms.size()), 1.0 / q);
}

double radial_mass(const SpinorEigenfunction& f) {
  const double n2 = lq_radial_norm(f, 2.0);
  return n2 * n2;
}

namespace {

std::vector<GrowthRow> sorted_rows(std::vector<GrowthRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const GrowthRow& a, const GrowthRow& b) { return a.n < b.n; });
  return rows;
}

void check_octaves(const std::vector<int>& n_values, const char* who) {
  if (n_values.size() < 3) throw PreconditionError(std::string(who) + " needs at least three degrees");
  const auto [lo, hi] = std::minmax_element(n_values.begin(), n_values.end());
  if (*lo < 1 || *hi < 8 * *lo)
    throw PreconditionError(std::string(who) + " needs degrees >= 1 spanning at least three octaves");
}

}  // namespace

SoggeFit sogge_fit(int d, double q, const std::vector<int>& n_values, int workers) {
  if (d < 2) throw PreconditionError("sogge_fit needs d >= 2");
  check_octaves(n_values, "sogge_fit");
  SoggeFit fit;
  fit.d = d;
  fit.q = q;
  fit.target = std::isinf(q) ? 0.5 * (d - 1) : 0.5 * (d - 1) - d / q;
  fit.below_threshold = q < 2.0 * (d + 1) / (d - 1.0);
  std::vector<GrowthRow> rows(n_values.size());
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    rows[i] = {n_values[i], lq_radial_norm(eigenfunction(d, n_values[i], 0), q)};
  });
  fit.rows = sorted_rows(std::move(rows));
  std::vector<double> x, y;
  for (const GrowthRow& r : fit.rows) {
    x.push_back(std::log(r.n + 0.5 * d));
    y.push_back(std::log(r.norm));
  }
  fit.slope = fit_line(x, y).slope;
  return fit;
}

double jacobi_moment(int n, double alpha, double beta, double p, double r) {
  if (!(r > -1.0)) throw PreconditionError("jacobi_moment needs r > -1");
  if (!(p > 0.0)) throw PreconditionError("jacobi_moment needs p > 0");
  const bool even = std::abs(p - 2.0 * std::round(0.5 * p)) < 1e-12;
  const int nodes = even ? int(std::ceil(0.5 * p * n)) + 20 : int(std::ceil(2.0 * p * n)) + 40;
  // x = (1+u)/2 turns (1-x)^r into 2^{-r}(1-u)^r
  static std::mutex mu;
  static std::map<std::pair<int, double>, std::unique_ptr<GaussRule>> cache;
  const GaussRule* rule;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{nodes, r}];
    if (!slot) slot = std::make_unique<GaussRule>(gauss_jacobi(nodes, r, 0.0));
    rule = slot.get();
  }
  std::vector<double> terms(rule->nodes.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const double x = 0.5 * (1.0 + rule->nodes[k]);
    terms[k] = rule->weights[k] * std::pow(std::abs(jacobi_eval(n, alpha, beta, x).value), p);
  }
  return std::pow(2.0, -r - 1.0) * pairwise_sum(terms.data(), terms.size());
}

MomentFit jacobi_moment_fit(double alpha, double beta, double p, double r, const std::vector<int>& n_values) {
  if (!(alpha > -1.0 && beta > -1.0)) throw PreconditionError("Jacobi parameters must exceed -1");
  const double rhs = alpha * p - 2.0 + 0.5 * p;
  if (!(2.0 * r < rhs)) {
    std::ostringstream os;
    os << "moment asymptotics need 2r < alpha p - 2 + p/2; here 2r = " << 2.0 * r << " and alpha p - 2 + p/2 = " << rhs;
    throw PreconditionError(os.str());
  }
  check_octaves(n_values, "jacobi_moment_fit");
  MomentFit fit;
  fit.target = alpha * p - 2.0 * r - 2.0;
  for (int n : n_values) fit.rows.push_back({n, jacobi_moment(n, alpha, beta, p, r)});
  fit.rows = sorted_rows(std::move(fit.rows));
  std::vector<double> x, y;
  for (const GrowthRow& row : fit.rows) {
    x.push_back(std::log(double(row.n)));
    y.push_back(std::log(row.norm));
  }
  fit.slope = fit_line(x, y).slope;
  return fit;
}

Rational sogge_exponent(int d, LebesgueExponent q) {
  return Rational(d - 1, 2) - Rational(d) * q.inverse;
}

SharpnessReport sharpness_report(int d) {
  if (d < 2) throw PreconditionError("sharpness_report needs d >= 2");
  SharpnessReport rep;
  rep.d = d;
  auto row = [&](Rational eps, LebesgueExponent p, LebesgueExponent q) {
    SharpnessRow r;
    r.epsilon = eps;
    r.p = p;
    r.q = q;
    r.gamma_w = gamma_wave(p, q, d);
    r.s_q = sogge_exponent(d, q);
    r.gap = r.gamma_w - r.s_q;
    return r;
  };
  std::ostringstream os;
  if (d >= 4) {
    SharpnessRow r = row(Rational(0), LebesgueExponent::of(2), LebesgueExponent::finite(Rational(2 * (d - 1), d - 3)));
    rep.exact = r.gap == Rational(0) && r.s_q == sharpness_target(d);
    rep.rows.push_back(r);
    rep.limit_gap = r.gap;
    os << "d = " << d << ": s(q) = " << r.s_q << ", gamma_W = " << r.gamma_w << ", target " << sharpness_target(d)
       << (rep.exact ? " (equal)" : " (mismatch)");
  } else if (d == 3) {
    for (Rational eps : {Rational(1, 2), Rational(1, 10), Rational(1, 100)}) {
      const Rational p = Rational(2) + eps;
      rep.rows.push_back(row(eps, LebesgueExponent::finite(p), LebesgueExponent::finite(Rational(2) * p / eps)));
    }
    // the gap ε/(2(2+ε)) tends to 0 with ε
    rep.limit_gap = Rational(0);
    os << "d = 3: gap epsilon/(2(2+epsilon)) at epsilon = 1/100 is " << rep.rows.back().gap << ", limit 0";
  } else {
    SharpnessRow r = row(Rational(0), LebesgueExponent::of(4), LebesgueExponent::infinity());
    rep.rows.push_back(r);
    rep.limit_gap = r.gap;
    os << "d = 2: gamma_W(4, inf) = " << r.gamma_w << ", s(inf) = " << r.s_q << ", gap " << r.gap;
  }
  rep.summary = os.str();
  return rep;
}

}  // namespace wkblab
