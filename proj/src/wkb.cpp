#include "wkblab/wkb.hpp"

#include <cmath>

#include "wkblab/errors.hpp"

namespace wkblab {

namespace {

std::vector<double> simpson_weights(int nodes, double length) {
  if (nodes < 3) nodes = 3;
  if (nodes % 2 == 0) ++nodes;
  std::vector<double> w(nodes);
  const double h = length / (nodes - 1);
  for (int k = 0; k < nodes; ++k) w[k] = h / 3.0 * (k == 0 || k == nodes - 1 ? 1.0 : (k % 2 ? 4.0 : 2.0));
  return w;
}

}  // namespace

InitialAmplitude cutoff_initial_amplitude(const HamiltonianSystem& sys) {
  const MetricChart chart = sys.chart();
  const CutoffLibrary lib = sys.library();
  return [chart, lib](const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
    return cplx(lib.phi(xi.dot(chart.metric_inverse(x) * xi)), 0.0);
  };
}

cplx f_coefficient(const PhaseField& field, const LowerOrderSymbols& symbols, double t,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
  const PhaseSample ps = field.eval(t, x, xi);
  SymbolJet j;
  field.system().jet(x.data(), ps.grad_x.data(), j);
  const int d = field.dim();
  double tr = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) tr += j.q_xixi[a][b] * ps.hess_x(b, a);
  cplx f(0.5 * tr, 0.0);
  if (!symbols.zero()) f += cplx(0.0, 1.0) * symbols.q1(x, ps.grad_x);
  return f;
}

cplx leading_amplitude(const PhaseField& field, const LowerOrderSymbols& symbols,
                       const InitialAmplitude& a0_init, double t, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& xi, int nodes) {
  if (t == 0.0) return a0_init(x, xi);
  if (std::abs(t) > field.t_max() * (1.0 + 1e-12)) throw PreconditionError("|t| exceeds t0");
  const auto& sys = field.system();
  // Z(s, t, x, ξ) is the bicharacteristic through (x, ∇_x S(t, x, ξ)) at time t.
  const CharacteristicSolution sol = solve_characteristic(sys, t, x, xi);
  const Eigen::VectorXd Xi_t = sol.trajectory.state.Xi;
  const std::vector<double> w = simpson_weights(nodes, t);
  const int n = int(w.size());
  cplx integral(0.0, 0.0);
  for (int k = 0; k < n; ++k) {
    const double s = t * k / (n - 1);
    Eigen::VectorXd z = x;
    if (k == 0) z = sol.foot;
    else if (k < n - 1) z = integrate_flow(sys, s - t, x, Xi_t, FlowOptions{}).state.X;
    integral += w[k] * f_coefficient(field, symbols, s, z, xi);
  }
  return a0_init(sol.foot, xi) * std::exp(integral);
}

cplx leading_amplitude_characteristic(const PhaseField& field, const LowerOrderSymbols& symbols,
                                      const InitialAmplitude& a0_init, double t,
                                      const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
  if (t == 0.0) return a0_init(x, xi);
  if (std::abs(t) > field.t_max() * (1.0 + 1e-12)) throw PreconditionError("|t| exceeds t0");
  NewtonOptions no;
  no.track_amplitude = true;
  no.q1 = symbols.zero() ? nullptr : &symbols.q1;
  const CharacteristicSolution sol = solve_characteristic(field.system(), t, x, xi, no);
  return a0_init(sol.foot, xi) * std::exp(sol.trajectory.log_amplitude);
}

Amplitude make_leading_amplitude(const PhaseField& field, const LowerOrderSymbols& symbols,
                                 InitialAmplitude a0_init, bool reference_quadrature) {
  Amplitude a;
  a.order = 0;
  a.support_box = {field.system().library().a(), field.system().library().b()};
  a.eval = [field, symbols, a0_init, reference_quadrature](double t, const Eigen::VectorXd& x,
                                                           const Eigen::VectorXd& xi) {
    return reference_quadrature ? leading_amplitude(field, symbols, a0_init, t, x, xi)
                                : leading_amplitude_characteristic(field, symbols, a0_init, t, x, xi);
  };
  const MetricChart chart = field.system().chart();
  a.p00 = [chart](const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
    return xi.dot(chart.metric_inverse(x) * xi);
  };
  return a;
}

SymbolXiTensors symbol_xi_derivatives(const HamiltonianSystem& sys, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& eta) {
  const int d = sys.dim();
  const Eigen::MatrixXd G = sys.chart().metric_inverse(x);
  const Eigen::VectorXd p1 = 2.0 * G * eta;
  const Eigen::MatrixXd p2 = 2.0 * G;
  const double p = eta.dot(G * eta) + sys.hm2();
  const Taylor<4> psi = sys.library().psi_jet<4>(p);
  const double s1 = psi.derivative(1), s2 = psi.derivative(2), s3 = psi.derivative(3),
               s4 = psi.derivative(4);
  SymbolXiTensors T;
  T.d = d;
  T.q = psi.c[0];
  T.d1.resize(d);
  T.d2.resize(d * d);
  T.d3.resize(d * d * d);
  T.d4.resize(d * d * d * d);
  for (int i = 0; i < d; ++i) {
    T.d1[i] = s1 * p1[i];
    for (int j = 0; j < d; ++j) {
      T.d2[i * d + j] = s2 * p1[i] * p1[j] + s1 * p2(i, j);
      for (int k = 0; k < d; ++k) {
        T.d3[(i * d + j) * d + k] = s3 * p1[i] * p1[j] * p1[k] +
                                    s2 * (p2(i, j) * p1[k] + p2(i, k) * p1[j] + p2(j, k) * p1[i]);
        for (int l = 0; l < d; ++l) {
          T.d4[((i * d + j) * d + k) * d + l] =
              s4 * p1[i] * p1[j] * p1[k] * p1[l] +
              s3 * (p2(i, j) * p1[k] * p1[l] + p2(i, k) * p1[j] * p1[l] + p2(i, l) * p1[j] * p1[k] +
                    p2(j, k) * p1[i] * p1[l] + p2(j, l) * p1[i] * p1[k] + p2(k, l) * p1[i] * p1[j]) +
              s2 * (p2(i, j) * p2(k, l) + p2(i, k) * p2(j, l) + p2(i, l) * p2(j, k));
        }
      }
    }
  }
  return T;
}

cplx first_corrector_source(const PhaseField& field, const LowerOrderSymbols& symbols,
                            const Amplitude& a0, double s, const Eigen::VectorXd& z,
                            const Eigen::VectorXd& xi) {
  const int d = field.dim();
  const PhaseSample ps = field.eval(s, z, xi);
  const Eigen::MatrixXd& S2 = ps.hess_x;

  // third x-derivatives of S by centered differences of the Hessian
  std::vector<double> S3(d * d * d, 0.0);
  const double dS = 1e-4 * (1.0 + z.norm());
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd zp = z, zm = z;
    zp[k] += dS;
    zm[k] -= dS;
    const Eigen::MatrixXd Hp = field.eval(s, zp, xi).hess_x;
    const Eigen::MatrixXd Hm = field.eval(s, zm, xi).hess_x;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) S3[(i * d + j) * d + k] = (Hp(i, j) - Hm(i, j)) / (2.0 * dS);
  }
  {
    std::vector<double> sym(S3.size());
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          auto at = [&](int a, int b, int c) { return S3[(a * d + b) * d + c]; };
          sym[(i * d + j) * d + k] =
              (at(i, j, k) + at(i, k, j) + at(j, i, k) + at(j, k, i) + at(k, i, j) + at(k, j, i)) / 6.0;
        }
    S3 = sym;
  }

  // a0 and its x-derivatives
  const double da = 1e-3 * (1.0 + z.norm());
  auto A = [&](const Eigen::VectorXd& p) { return a0.eval(s, p, xi); };
  const cplx c = A(z);
  std::vector<cplx> c1(d), c2(d * d);
  std::vector<cplx> cp(d), cm(d);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd zp = z, zm = z;
    zp[i] += da;
    zm[i] -= da;
    cp[i] = A(zp);
    cm[i] = A(zm);
    c1[i] = (cp[i] - cm[i]) / (2.0 * da);
    c2[i * d + i] = (cp[i] - 2.0 * c + cm[i]) / (da * da);
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Eigen::VectorXd pp = z, pm = z, mp = z, mm = z;
      pp[i] += da; pp[j] += da;
      pm[i] += da; pm[j] -= da;
      mp[i] -= da; mp[j] += da;
      mm[i] -= da; mm[j] -= da;
      c2[i * d + j] = c2[j * d + i] = (A(pp) - A(pm) - A(mp) + A(mm)) / (4.0 * da * da);
    }

  const SymbolXiTensors b = symbol_xi_derivatives(field.system(), z, ps.grad_x);
  cplx term2(0.0, 0.0), term3a(0.0, 0.0), term3b(0.0, 0.0), term4(0.0, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      term2 += b.d2[i * d + j] * c2[i * d + j];
      for (int k = 0; k < d; ++k) {
        const double b3 = b.d3[(i * d + j) * d + k];
        term3a += b3 * S3[(i * d + j) * d + k] * c;
        term3b += b3 * S2(i, j) * c1[k];
        for (int l = 0; l < d; ++l)
          term4 += b.d4[((i * d + j) * d + k) * d + l] * S2(i, j) * S2(k, l) * c;
      }
    }
  const cplx psi_bracket2 = -(0.5 * term2 + term3a / 6.0 + 0.5 * term3b + term4 / 8.0);

  cplx q1_bracket1(0.0, 0.0);
  if (!symbols.zero()) {
    const double dq = 1e-4;
    const Eigen::VectorXd& eta = ps.grad_x;
    auto Q = [&](const Eigen::VectorXd& e) { return symbols.q1(z, e); };
    const cplx q0 = Q(eta);
    cplx sum(0.0, 0.0);
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd ep = eta, em = eta;
      ep[i] += dq;
      em[i] -= dq;
      const cplx qp = Q(ep), qm = Q(em);
      sum += (qp - qm) / (2.0 * dq) * c1[i];
      sum += 0.5 * (qp - 2.0 * q0 + qm) / (dq * dq) * S2(i, i) * c;
      for (int j = 0; j < d; ++j) {
        if (j == i) continue;
        Eigen::VectorXd pp = eta, pm = eta, mp = eta, mm = eta;
        pp[i] += dq; pp[j] += dq;
        pm[i] += dq; pm[j] -= dq;
        mp[i] -= dq; mp[j] += dq;
        mm[i] -= dq; mm[j] -= dq;
        const cplx qij = (Q(pp) - Q(pm) - Q(mp) + Q(mm)) / (4.0 * dq * dq);
        sum += 0.5 * qij * S2(i, j) * c;
      }
    }
    q1_bracket1 = sum / cplx(0.0, 1.0);
  }
  return cplx(0.0, 1.0) * (psi_bracket2 + q1_bracket1);
}

cplx first_corrector(const PhaseField& field, const LowerOrderSymbols& symbols, const Amplitude& a0,
                     double t, const Eigen::VectorXd& x, const Eigen::VectorXd& xi, int nodes) {
  if (t == 0.0) return {0.0, 0.0};
  if (std::abs(t) > field.t_max() * (1.0 + 1e-12)) throw PreconditionError("|t| exceeds t0");
  const auto& sys = field.system();
  NewtonOptions no;
  no.track_amplitude = true;
  no.q1 = symbols.zero() ? nullptr : &symbols.q1;
  const CharacteristicSolution sol = solve_characteristic(sys, t, x, xi, no);
  const cplx F_t = sol.trajectory.log_amplitude;

  FlowOptions fo;
  fo.jacobian_columns = sys.dim();
  fo.track_amplitude = true;
  fo.q1 = no.q1;
  const std::vector<double> w = simpson_weights(nodes, t);
  const int n = int(w.size());
  cplx sum(0.0, 0.0);
  for (int k = 0; k < n; ++k) {
    const double s = t * k / (n - 1);
    Eigen::VectorXd z = sol.foot;
    cplx F_s(0.0, 0.0);
    if (k == n - 1) {
      z = x;
      F_s = F_t;
    } else if (k > 0) {
      const FlowTrajectory tr = integrate_flow(sys, s, sol.foot, xi, fo);
      z = tr.state.X;
      F_s = tr.log_amplitude;
    }
    sum += w[k] * first_corrector_source(field, symbols, a0, s, z, xi) * std::exp(F_t - F_s);
  }
  return sum;
}

Amplitude make_first_corrector(const PhaseField& field, const LowerOrderSymbols& symbols, Amplitude a0) {
  Amplitude a;
  a.order = 1;
  a.support_box = a0.support_box;
  a.p00 = a0.p00;
  a.eval = [field, symbols, a0](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
    return first_corrector(field, symbols, a0, t, x, xi);
  };
  return a;
}

SupportReport support_check(const Amplitude& amplitude, const std::vector<double>& t_grid,
                            const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& samples,
                            double factor) {
  if (!(factor >= 1.0)) throw PreconditionError("K must contain supp phi (factor >= 1)");
  const double lo = amplitude.support_box[0] / factor;
  const double hi = amplitude.support_box[1] * factor;
  SupportReport rep;
  for (double t : t_grid)
    for (const auto& [x, xi] : samples) {
      const double lambda = amplitude.p00(x, xi);
      if (lambda >= lo && lambda <= hi) continue;
      ++rep.outside_samples;
      const double v = std::abs(amplitude.eval(t, x, xi));
      if (v > rep.worst_value || rep.worst_x.size() == 0) {
        rep.worst_value = std::max(rep.worst_value, v);
        rep.worst_t = t;
        rep.worst_x = x;
        rep.worst_xi = xi;
        rep.worst_lambda = lambda;
      }
    }
  rep.ok = rep.worst_value <= 1e-10;
  return rep;
}

}  // namespace wkblab
