#include "wkblab/hamilton_jacobi.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wkblab/errors.hpp"
#include "wkblab/fit.hpp"

namespace wkblab {

HamiltonianSystem::HamiltonianSystem(MetricChart chart, MassParam mass, CutoffLibrary library, double h)
    : chart_(std::move(chart)), mass_(mass), library_(std::move(library)), h_(h) {
  if (!(h > 0.0 && h <= 1.0)) throw PreconditionError("h must lie in (0, 1]");
  hm2_ = h * h * mass_.m_tilde * mass_.m_tilde;
}

void HamiltonianSystem::jet(const double* x, const double* xi, SymbolJet& out) const {
  const int d = dim();
  InverseMetricJet g;
  chart_.inverse_jet(x, g);
  double Gxi[kMaxFlowDim];
  double p = hm2_;
  for (int i = 0; i < d; ++i) {
    Gxi[i] = 0.0;
    for (int j = 0; j < d; ++j) Gxi[i] += g.G[i][j] * xi[j];
    p += xi[i] * Gxi[i];
  }
  double p_x[kMaxFlowDim], p_xi[kMaxFlowDim];
  double p_xx[kMaxFlowDim][kMaxFlowDim], p_xxi[kMaxFlowDim][kMaxFlowDim];
  for (int k = 0; k < d; ++k) {
    p_xi[k] = 2.0 * Gxi[k];
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      double row = 0.0;
      for (int j = 0; j < d; ++j) row += g.dG[k][i][j] * xi[j];
      p_xxi[k][i] = 2.0 * row;
      s += xi[i] * row;
    }
    p_x[k] = s;
    for (int l = 0; l < d; ++l) {
      double s2 = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s2 += xi[i] * g.d2G[k][l][i][j] * xi[j];
      p_xx[k][l] = s2;
    }
  }
  double psi[3];
  library_.psi_d2(p, psi);
  out.p = p;
  out.q = psi[0];
  for (int k = 0; k < d; ++k) {
    out.q_x[k] = psi[1] * p_x[k];
    out.q_xi[k] = psi[1] * p_xi[k];
    for (int l = 0; l < d; ++l) {
      out.q_xx[k][l] = psi[2] * p_x[k] * p_x[l] + psi[1] * p_xx[k][l];
      out.q_xxi[k][l] = psi[2] * p_x[k] * p_xi[l] + psi[1] * p_xxi[k][l];
      out.q_xixi[k][l] = psi[2] * p_xi[k] * p_xi[l] + psi[1] * 2.0 * g.G[k][l];
    }
  }
}

double HamiltonianSystem::q(const Eigen::VectorXd& x, const Eigen::VectorXd& xi) const {
  return symbol_sqrt(library_, chart_, mass_, h_, x, xi);
}

Eigen::VectorXd HamiltonianSystem::grad_xi_q(const Eigen::VectorXd& x, const Eigen::VectorXd& xi) const {
  SymbolJet j;
  jet(x.data(), xi.data(), j);
  return Eigen::Map<const Eigen::VectorXd>(j.q_xi, dim());
}

double HamiltonianSystem::p00(const Eigen::VectorXd& x, const Eigen::VectorXd& xi) const {
  return xi.dot(chart_.metric_inverse(x) * xi);
}

namespace {

constexpr int kMaxState = 2 * kMaxFlowDim + 3 + 2 * kMaxFlowDim * 2 * kMaxFlowDim;

bool invert_small(int d, const double a[kMaxFlowDim][kMaxFlowDim], double inv[kMaxFlowDim][kMaxFlowDim]) {
  if (d == 1) {
    if (a[0][0] == 0.0) return false;
    inv[0][0] = 1.0 / a[0][0];
    return true;
  }
  if (d == 2) {
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if (det == 0.0) return false;
    inv[0][0] = a[1][1] / det;
    inv[0][1] = -a[0][1] / det;
    inv[1][0] = -a[1][0] / det;
    inv[1][1] = a[0][0] / det;
    return true;
  }
  const double c00 = a[1][1] * a[2][2] - a[1][2] * a[2][1];
  const double c01 = a[1][2] * a[2][0] - a[1][0] * a[2][2];
  const double c02 = a[1][0] * a[2][1] - a[1][1] * a[2][0];
  const double det = a[0][0] * c00 + a[0][1] * c01 + a[0][2] * c02;
  if (det == 0.0) return false;
  inv[0][0] = c00 / det;
  inv[1][0] = c01 / det;
  inv[2][0] = c02 / det;
  inv[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
  inv[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
  inv[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
  inv[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
  inv[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
  inv[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
  return true;
}

// State layout: X[d], Ξ[d], action, Re∫f, Im∫f, J[2d][cols] row-major.
struct FlowRhs {
  const HamiltonianSystem& sys;
  int d;
  int cols;
  bool amplitude;
  const SymbolFunction* q1;

  int size() const { return 2 * d + 3 + 2 * d * cols; }
  int jac() const { return 2 * d + 3; }

  void operator()(const double* s, double* ds) const {
    SymbolJet j;
    const double* X = s;
    const double* Xi = s + d;
    sys.jet(X, Xi, j);
    double act = j.q;
    for (int i = 0; i < d; ++i) {
      ds[i] = -j.q_xi[i];
      ds[d + i] = j.q_x[i];
      act += Xi[i] * ds[i];
    }
    ds[2 * d] = act;
    ds[2 * d + 1] = 0.0;
    ds[2 * d + 2] = 0.0;
    const double* J = s + jac();
    double* dJ = ds + jac();
    for (int c = 0; c < cols; ++c) {
      for (int i = 0; i < d; ++i) {
        double vx = 0.0, vxi = 0.0;
        for (int k = 0; k < d; ++k) {
          const double dX = J[k * cols + c];
          const double dXi = J[(d + k) * cols + c];
          vx -= j.q_xxi[k][i] * dX + j.q_xixi[i][k] * dXi;
          vxi += j.q_xx[i][k] * dX + j.q_xxi[i][k] * dXi;
        }
        dJ[i * cols + c] = vx;
        dJ[(d + i) * cols + c] = vxi;
      }
    }
    if (amplitude) {
      // f = 1/2 tr(q_ξξ Ξ_y X_y^{-1}) + i q1
      double Xy[kMaxFlowDim][kMaxFlowDim] = {}, inv[kMaxFlowDim][kMaxFlowDim] = {};
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) Xy[a][b] = J[a * cols + b];
      if (!invert_small(d, Xy, inv)) throw DomainError("characteristic map became singular (caustic)");
      double tr = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          // (Ξ_y X_y^{-1})[b][a]
          double sba = 0.0;
          for (int c = 0; c < d; ++c) sba += J[(d + b) * cols + c] * inv[c][a];
          tr += j.q_xixi[a][b] * sba;
        }
      ds[2 * d + 1] = 0.5 * tr;
      if (q1 != nullptr && *q1) {
        const std::complex<double> v = (*q1)(Eigen::Map<const Eigen::VectorXd>(X, d),
                                             Eigen::Map<const Eigen::VectorXd>(Xi, d));
        ds[2 * d + 1] -= v.imag();
        ds[2 * d + 2] = v.real();
      }
    }
  }
};

void rk4(const FlowRhs& rhs, double* s, double dt, int steps) {
  const int n = rhs.size();
  double k1[kMaxState], k2[kMaxState], k3[kMaxState], k4[kMaxState], tmp[kMaxState];
  for (int step = 0; step < steps; ++step) {
    rhs(s, k1);
    for (int i = 0; i < n; ++i) tmp[i] = s[i] + 0.5 * dt * k1[i];
    rhs(tmp, k2);
    for (int i = 0; i < n; ++i) tmp[i] = s[i] + 0.5 * dt * k2[i];
    rhs(tmp, k3);
    for (int i = 0; i < n; ++i) tmp[i] = s[i] + dt * k3[i];
    rhs(tmp, k4);
    for (int i = 0; i < n; ++i) s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

double default_step(double t) { return std::min(1e-3, std::abs(t) / 64.0); }

}  // namespace

FlowTrajectory integrate_flow(const HamiltonianSystem& sys, double t, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& xi, const FlowOptions& options) {
  const int d = sys.dim();
  if (d > kMaxFlowDim) throw PreconditionError("characteristic flows support d <= 3");
  if (y.size() != d || xi.size() != d) throw PreconditionError("point/covector dimension mismatch");
  const int cols = options.jacobian_columns;
  if (cols != 0 && cols != d && cols != 2 * d) throw PreconditionError("jacobian_columns must be 0, d or 2d");
  if (options.track_amplitude && cols < d) throw PreconditionError("amplitude tracking needs the y-Jacobian");

  FlowRhs rhs{sys, d, cols, options.track_amplitude, options.q1};
  double init[kMaxState] = {};
  for (int i = 0; i < d; ++i) {
    init[i] = y[i];
    init[d + i] = xi[i];
  }
  init[2 * d] = y.dot(xi);
  for (int c = 0; c < cols; ++c) {
    const int row = c < d ? c : d + (c - d);
    init[rhs.jac() + row * cols + c] = 1.0;
  }

  SymbolJet j0;
  sys.jet(y.data(), xi.data(), j0);

  double base = options.step > 0.0 ? options.step : default_step(t);
  double s[kMaxState];
  FlowTrajectory out;
  for (int attempt = 0;; ++attempt) {
    std::copy(init, init + rhs.size(), s);
    int steps = 0;
    double dt = 0.0;
    if (t != 0.0) {
      steps = std::max(1, int(std::ceil(std::abs(t) / base - 1e-9)));
      dt = t / steps;
      rk4(rhs, s, dt, steps);
    }
    SymbolJet j1;
    sys.jet(s, s + d, j1);
    out.drift = std::abs(j1.q - j0.q);
    out.step = std::abs(dt);
    out.steps = steps;
    if (out.drift <= options.drift_tolerance) break;
    if (attempt >= options.max_halvings) {
      std::ostringstream os;
      os << "Hamiltonian drift " << out.drift << " exceeds tolerance after " << attempt << " step halvings";
      throw DomainError(os.str());
    }
    base *= 0.5;
  }
  out.state.X = Eigen::Map<const Eigen::VectorXd>(s, d);
  out.state.Xi = Eigen::Map<const Eigen::VectorXd>(s + d, d);
  out.state.action = s[2 * d];
  out.log_amplitude = {s[2 * d + 1], s[2 * d + 2]};
  out.jacobian.resize(2 * d, cols);
  for (int r = 0; r < 2 * d; ++r)
    for (int c = 0; c < cols; ++c) out.jacobian(r, c) = s[rhs.jac() + r * cols + c];
  return out;
}

FlowState hamiltonian_flow(const HamiltonianSystem& sys, double t, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& xi, double step) {
  FlowOptions o;
  o.step = step;
  return integrate_flow(sys, t, y, xi, o).state;
}

double richardson_estimate(const HamiltonianSystem& sys, double t, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& xi, double step) {
  FlowOptions full, half;
  full.step = step > 0.0 ? step : default_step(t);
  half.step = 0.5 * full.step;
  const FlowState a = integrate_flow(sys, t, y, xi, full).state;
  const FlowState b = integrate_flow(sys, t, y, xi, half).state;
  return std::max({(a.X - b.X).lpNorm<Eigen::Infinity>(), (a.Xi - b.Xi).lpNorm<Eigen::Infinity>(),
                   std::abs(a.action - b.action)});
}

CharacteristicSolution solve_characteristic(const HamiltonianSystem& sys, double t,
                                            const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                                            const NewtonOptions& options) {
  const int d = sys.dim();
  FlowOptions fo;
  fo.jacobian_columns = options.jacobian_columns < 0 ? d : options.jacobian_columns;
  if (fo.jacobian_columns < d) throw PreconditionError("Newton needs the y-Jacobian");
  fo.track_amplitude = options.track_amplitude;
  fo.q1 = options.q1;
  fo.step = options.step;

  const double tol = options.tolerance * (1.0 + x.norm());
  CharacteristicSolution sol;
  sol.foot = options.initial_guess ? *options.initial_guess : x;
  sol.trajectory = integrate_flow(sys, t, sol.foot, xi, fo);
  Eigen::VectorXd r = sol.trajectory.state.X - x;
  double nr = r.norm();
  int flows = 1;
  while (nr > tol) {
    if (flows >= options.max_iterations) {
      std::ostringstream os;
      os << "characteristic inversion did not converge in " << options.max_iterations
         << " iterations (t = " << t << ", residual " << nr << "); t is too close to a caustic";
      throw DomainError(os.str());
    }
    const Eigen::MatrixXd Jy = sol.trajectory.jacobian.topLeftCorner(d, d);
    const Eigen::VectorXd dy = Jy.partialPivLu().solve(r);
    double lambda = 1.0;
    bool accepted = false;
    while (flows < options.max_iterations) {
      const Eigen::VectorXd y_new = sol.foot - lambda * dy;
      FlowTrajectory trial = integrate_flow(sys, t, y_new, xi, fo);
      ++flows;
      const Eigen::VectorXd r_new = trial.state.X - x;
      if (r_new.norm() < nr || r_new.norm() <= tol) {
        sol.foot = y_new;
        sol.trajectory = std::move(trial);
        r = r_new;
        nr = r.norm();
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted && nr > tol) continue;  // loop head reports the failure
  }
  sol.iterations = flows;
  sol.residual = nr;
  return sol;
}

PhaseField::PhaseField(HamiltonianSystem system, double t_max) : system_(std::move(system)), t_max_(t_max) {
  if (!(t_max > 0.0)) throw PreconditionError("t_max must be positive");
}

PhaseSample PhaseField::eval(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& xi) const {
  if (std::abs(t) > t_max_ * (1.0 + 1e-12)) throw PreconditionError("|t| exceeds t0");
  const int d = dim();
  NewtonOptions no;
  no.jacobian_columns = 2 * d;
  const CharacteristicSolution sol = solve_characteristic(system_, t, x, xi, no);
  const FlowTrajectory& tr = sol.trajectory;
  PhaseSample out;
  out.foot = sol.foot;
  out.grad_x = tr.state.Xi;
  out.S = tr.state.action + tr.state.Xi.dot(x - tr.state.X);
  const Eigen::MatrixXd Xy = tr.jacobian.block(0, 0, d, d);
  const Eigen::MatrixXd Xxi = tr.jacobian.block(0, d, d, d);
  const Eigen::MatrixXd Ey = tr.jacobian.block(d, 0, d, d);
  const Eigen::MatrixXd Exi = tr.jacobian.block(d, d, d, d);
  const Eigen::MatrixXd XyInv = Xy.inverse();
  out.hess_x = Ey * XyInv;
  out.hess_x = 0.5 * (out.hess_x + out.hess_x.transpose()).eval();
  out.mixed = Exi - Ey * XyInv * Xxi;
  return out;
}

PhaseSample phase_eval(const PhaseField& field, double t, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& xi) {
  return field.eval(t, x, xi);
}

double flat_phase(const HamiltonianSystem& sys, double t, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& xi) {
  return x.dot(xi) + t * sys.library().psi(xi.squaredNorm() + sys.hm2());
}

RemainderFit remainder_bound_check(const std::vector<PhaseField>& fields,
                                   const std::vector<double>& t_values,
                                   const std::vector<Eigen::VectorXd>& x_grid,
                                   const std::vector<Eigen::VectorXd>& xi_grid) {
  if (fields.empty() || t_values.size() < 2) throw PreconditionError("remainder fit needs fields and >= 2 times");
  double tmin = 1e300, tmax = 0.0;
  for (double t : t_values) {
    if (t == 0.0) throw PreconditionError("t = 0 cannot enter a log fit");
    tmin = std::min(tmin, std::abs(t));
    tmax = std::max(tmax, std::abs(t));
  }
  if (tmax < 10.0 * tmin * (1.0 - 1e-9)) throw PreconditionError("t values must span at least one decade");

  RemainderFit fit;
  fit.t_values = t_values;
  bool all_tiny = true;
  std::vector<double> lx_all, ly_all;
  for (const auto& field : fields) {
    const auto& sys = field.system();
    fit.h_values.push_back(sys.h());
    std::vector<double> sup(t_values.size(), 0.0);
    for (std::size_t it = 0; it < t_values.size(); ++it) {
      const double t = t_values[it];
      for (const auto& x : x_grid)
        for (const auto& xi : xi_grid) {
          const double S = field.eval(t, x, xi).S;
          const double lin = x.dot(xi), tq = t * sys.q(x, xi);
          const double r = std::abs(S - lin - tq);
          sup[it] = std::max(sup[it], r);
          // roundoff level of the three terms
          if (r > 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(S) + std::abs(lin) + std::abs(tq) + 1e-300))
            all_tiny = false;
        }
    }
    fit.sup_residual.push_back(sup);
  }
  if (all_tiny) {
    fit.exact = true;
    return fit;
  }
  for (const auto& sup : fit.sup_residual) {
    std::vector<double> lx, ly;
    for (std::size_t it = 0; it < t_values.size(); ++it) {
      if (sup[it] <= 0.0) continue;
      lx.push_back(std::log(std::abs(t_values[it])));
      ly.push_back(std::log(sup[it]));
    }
    const LineFit lf = fit_line(lx, ly);
    fit.slopes.push_back(lf.slope);
    fit.constants.push_back(std::exp(lf.intercept));
    lx_all.insert(lx_all.end(), lx.begin(), lx.end());
    ly_all.insert(ly_all.end(), ly.begin(), ly.end());
  }
  const LineFit pooled = fit_line(lx_all, ly_all);
  fit.slope = pooled.slope;
  fit.constant = std::exp(pooled.intercept);
  const auto [mn, mx] = std::minmax_element(fit.constants.begin(), fit.constants.end());
  fit.constant_ratio = *mx / *mn;
  return fit;
}

Eigen::VectorXd transport_flow(const PhaseField& field, double s, double t, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& xi) {
  const double tm = field.t_max() * (1.0 + 1e-12);
  if (std::abs(s) > tm || std::abs(t) > tm) throw PreconditionError("|s|, |t| must not exceed t0");
  if (s == t) return x;
  const auto& sys = field.system();
  const CharacteristicSolution sol = solve_characteristic(sys, t, x, xi);
  if (s == 0.0) return sol.foot;
  return integrate_flow(sys, s - t, x, sol.trajectory.state.Xi, FlowOptions{}).state.X;
}

double certify_t0(const HamiltonianSystem& sys, const std::vector<Eigen::VectorXd>& x_grid,
                  const std::vector<Eigen::VectorXd>& xi_grid, double t_cap, int max_halvings) {
  const int d = sys.dim();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  double t = t_cap;
  for (int k = 0; k <= max_halvings; ++k, t *= 0.5) {
    bool ok = true;
    PhaseField field(sys, t);
    for (double sign : {1.0, -1.0}) {
      for (const auto& x : x_grid) {
        for (const auto& xi : xi_grid) {
          try {
            const PhaseSample ps = field.eval(sign * t, x, xi);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(ps.mixed - I);
            if (svd.singularValues()(0) > 0.5) ok = false;
          } catch (const DomainError&) {
            ok = false;
          }
          if (!ok) break;
        }
        if (!ok) break;
      }
      if (!ok) break;
    }
    if (ok) return t;
  }
  throw DomainError("could not certify t0: the characteristic map degenerates at every dyadic candidate");
}

std::vector<Eigen::VectorXd> annulus_grid(int dim, double r_lo, double r_hi, int n_r, int n_dir) {
  std::vector<Eigen::VectorXd> out;
  for (int ir = 0; ir < n_r; ++ir) {
    const double r = n_r == 1 ? 0.5 * (r_lo + r_hi) : r_lo + (r_hi - r_lo) * ir / (n_r - 1);
    if (dim == 1) {
      out.push_back(Eigen::VectorXd::Constant(1, r));
      out.push_back(Eigen::VectorXd::Constant(1, -r));
      continue;
    }
    for (int k = 0; k < n_dir; ++k) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
      if (dim == 2) {
        const double a = 2.0 * M_PI * (k + 0.125) / n_dir;
        v << std::cos(a), std::sin(a);
      } else {
        // Fibonacci points on S^2, extended by zeros beyond 3 coordinates
        const double z = 1.0 - 2.0 * (k + 0.5) / n_dir;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double a = M_PI * (3.0 - std::sqrt(5.0)) * k;
        v[0] = rho * std::cos(a);
        v[1] = rho * std::sin(a);
        v[2] = z;
      }
      out.push_back(r * v);
    }
  }
  return out;
}

}  // namespace wkblab
