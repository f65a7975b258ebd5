#include "wkblab/oscillatory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "wkblab/errors.hpp"
#include "wkblab/fit.hpp"
#include "wkblab/parallel.hpp"
#include "wkblab/quadrature.hpp"

namespace wkblab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kStencil = 6;

cplx pairwise_dot(const cplx* f, const cplx* e, std::size_t n) {
  if (n <= 16) {
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) s += f[i] * e[i];
    return s;
  }
  const std::size_t m = n / 2;
  return pairwise_dot(f, e, m) + pairwise_dot(f + m, e + m, n - m);
}

cplx pairwise_sum_c(const cplx* v, std::size_t n) {
  if (n <= 16) {
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t m = n / 2;
  return pairwise_sum_c(v, m) + pairwise_sum_c(v + m, n - m);
}

std::pair<double, double> metric_extremes(const MetricChart& chart, const Eigen::VectorXd& x) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(chart.metric_inverse(x), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) throw NotPositiveDefinite("inverse metric not positive definite", x);
  return {lo, hi};
}

std::size_t ipow(std::size_t n, int d) {
  std::size_t r = 1;
  for (int k = 0; k < d; ++k) r *= n;
  return r;
}

// Multi-index of a flat row-major index.
void unflatten(std::size_t idx, std::size_t n, int d, int* out) {
  for (int k = d - 1; k >= 0; --k) {
    out[k] = int(idx % n);
    idx /= n;
  }
}

double coarse_step(double t) { return std::min(std::abs(t) / 16.0, 0.01); }

// Lagrange weights on the nodes 0..5 at u.
void lagrange6(double u, double* w) {
  for (int j = 0; j < kStencil; ++j) {
    double num = 1.0, den = 1.0;
    for (int k = 0; k < kStencil; ++k) {
      if (k == j) continue;
      num *= u - k;
      den *= j - k;
    }
    w[j] = num / den;
  }
}

}  // namespace

std::string to_string(Window w) { return w == Window::wave ? "wave" : "kg"; }

std::string to_string(PhaseSampling s) {
  switch (s) {
    case PhaseSampling::automatic: return "automatic";
    case PhaseSampling::flat_closed_form: return "flat_closed_form";
    case PhaseSampling::interpolated: return "interpolated";
    case PhaseSampling::direct: return "direct";
  }
  return "unknown";
}

void validate_window(Window window, double h, double t0, double t) {
  if (!(t0 > 0.0)) throw PreconditionError("t0 must be positive");
  const double limit = window == Window::wave ? t0 : std::sqrt(h) * t0;
  if (std::abs(t) > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << to_string(window) << " window requires |t| <= " << limit << ", got t = " << t;
    throw PreconditionError(os.str());
  }
}

KernelResolution kernel_resolution(const HamiltonianSystem& sys, double t, const Eigen::VectorXd& x,
                                   double max_offset, const QuadratureSettings& q) {
  const int d = sys.dim();
  if (d > 3) throw PreconditionError("kernel quadrature supports d <= 3");
  if (d == 3 && !q.allow_3d) throw PreconditionError("d = 3 kernel quadrature needs allow_3d");
  const auto [lmin, lmax] = metric_extremes(sys.chart(), x);
  const auto K = sys.library().neighbourhood(q.support_factor);
  KernelResolution r;
  r.radius = std::sqrt(K[1] / lmin);
  r.group_velocity = std::sqrt(lmax);
  r.max_phase_gradient = max_offset + 1.25 * std::abs(t) * r.group_velocity;
  const double diam = 2.0 * r.radius;
  double n = std::ceil(q.nodes_per_wavelength * diam * r.max_phase_gradient / (2.0 * kPi * sys.h()));
  n = std::max<double>(q.min_nodes, n);
  n = std::ceil(n * q.refinement);
  const double total = std::pow(n, d);
  if (total > q.node_budget) {
    std::ostringstream os;
    os << "kernel quadrature needs " << n << " nodes per axis (" << total << " total), budget "
       << q.node_budget;
    throw ResolutionRefused(os.str(), total, q.node_budget);
  }
  r.nodes_per_axis = int(n);
  return r;
}

cplx kernel_eval(const KernelRequest& req, const PhaseField& phase, const std::vector<Amplitude>& amplitudes,
                 const QuadratureSettings& q) {
  const HamiltonianSystem& sys = req.system ? *req.system : phase.system();
  const int d = sys.dim();
  if (req.x.size() != d || req.y.size() != d) throw PreconditionError("x and y must have the chart dimension");
  if (amplitudes.empty()) throw PreconditionError("kernel_eval needs at least one amplitude");
  const double h = sys.h();
  validate_window(req.window, h, req.t0, req.t);
  const KernelResolution res = kernel_resolution(sys, req.t, req.x, (req.x - req.y).norm(), q);
  const int n = res.nodes_per_axis;
  const GaussRule rule = map_rule(gauss_legendre(n), -res.radius, res.radius);
  const auto& box = amplitudes.front().support_box;
  const double k_lo = box[0] / q.support_factor, k_hi = box[1] * q.support_factor;
  const auto& p00 = amplitudes.front().p00;

  const std::size_t total = ipow(std::size_t(n), d);
  std::vector<cplx> terms(total, cplx(0.0, 0.0));
  const Eigen::VectorXd dxy = req.x - req.y;
  for (std::size_t idx = 0; idx < total; ++idx) {
    int m[3];
    unflatten(idx, std::size_t(n), d, m);
    Eigen::VectorXd xi(d);
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      xi[k] = rule.nodes[m[k]];
      w *= rule.weights[m[k]];
    }
    const double lam = p00(req.x, xi);
    if (lam < k_lo || lam > k_hi) continue;
    cplx a{0.0, 0.0};
    for (const auto& amp : amplitudes) a += std::pow(h, amp.order) * amp.eval(req.t, req.x, xi);
    if (a == cplx(0.0, 0.0)) continue;
    const double S = req.t == 0.0 ? req.x.dot(xi) : phase.eval(req.t, req.x, xi).S;
    const double arg = (S - req.x.dot(xi) + dxy.dot(xi)) / h;
    terms[idx] = w * std::polar(1.0, arg) * a;
  }
  return pairwise_sum_c(terms.data(), total) / std::pow(2.0 * kPi * h, d);
}

KernelSweep::KernelSweep(const HamiltonianSystem& sys, double t, Eigen::VectorXd x, const SweepOptions& options)
    : d_(sys.dim()), h_(sys.h()), t_(t), x_(std::move(x)), max_offset_(options.max_offset) {
  if (x_.size() != d_) throw PreconditionError("x must have the chart dimension");
  res_ = kernel_resolution(sys, t_, x_, options.max_offset, options.quadrature);
  const bool flat_ok = sys.chart().kind() == ChartKind::flat || t_ == 0.0;
  sampling_ = options.sampling;
  if (sampling_ == PhaseSampling::automatic)
    sampling_ = flat_ok ? PhaseSampling::flat_closed_form : PhaseSampling::interpolated;
  if (sampling_ == PhaseSampling::flat_closed_form) {
    if (!flat_ok) throw PreconditionError("closed-form phase needs the flat chart or t = 0");
    if (!options.symbols.zero() && t_ != 0.0) throw PreconditionError("closed-form phase needs q1 = 0");
  }
  sample(sys, options);
}

void KernelSweep::sample(const HamiltonianSystem& sys, const SweepOptions& options) {
  const int d = d_;
  const std::size_t n = std::size_t(res_.nodes_per_axis);
  const GaussRule rule = map_rule(gauss_legendre(int(n)), -res_.radius, res_.radius);
  xi_ = rule.nodes;
  const auto K = sys.library().neighbourhood(options.quadrature.support_factor);
  const InitialAmplitude a0 = options.a0_init ? options.a0_init : cutoff_initial_amplitude(sys);
  const Eigen::MatrixXd Gx = sys.chart().metric_inverse(x_);
  const double hm2 = sys.hm2();
  const SymbolFunction* q1 = options.symbols.zero() ? nullptr : &options.symbols.q1;

  const std::size_t total = ipow(n, d);
  std::vector<std::size_t> active;
  for (std::size_t idx = 0; idx < total; ++idx) {
    int m[3];
    unflatten(idx, n, d, m);
    Eigen::VectorXd xi(d);
    for (int k = 0; k < d; ++k) xi[k] = xi_[m[k]];
    const double lam = xi.dot(Gx * xi);
    if (lam >= K[0] && lam <= K[1]) active.push_back(idx);
  }
  active_ = active.size();

  // Closed-form parts: t psi(p(x, ξ)) and x + t ∇_ξ q(x, ξ), both frozen at x.
  auto exact_part = [&](const Eigen::VectorXd& xi, double& s_rem, Eigen::VectorXd& y) {
    double ps[3];
    sys.library().psi_d2(xi.dot(Gx * xi) + hm2, ps);
    s_rem = t_ * ps[0];
    y = x_ + (2.0 * t_ * ps[1]) * (Gx * xi);
  };
  auto node_xi = [&](std::size_t idx, Eigen::VectorXd& xi, double& w) {
    int m[3];
    unflatten(idx, n, d, m);
    w = 1.0;
    for (int k = 0; k < d; ++k) {
      xi[k] = xi_[m[k]];
      w *= rule.weights[m[k]];
    }
  };
  // Direct evaluation through the characteristic solve.
  auto direct = [&](const Eigen::VectorXd& xi, double step, const Eigen::VectorXd* guess, double& s_rem,
                    Eigen::VectorXd& foot, cplx& log_amp) {
    NewtonOptions no;
    no.track_amplitude = true;
    no.q1 = q1;
    no.initial_guess = guess;
    no.step = step;
    const CharacteristicSolution sol = solve_characteristic(sys, t_, x_, xi, no);
    const FlowState& st = sol.trajectory.state;
    s_rem = st.action + st.Xi.dot(x_ - st.X) - x_.dot(xi);
    foot = sol.foot;
    log_amp = sol.trajectory.log_amplitude;
  };

  F_.assign(total, cplx(0.0, 0.0));
  std::vector<double> s_rems(active.size());
  std::vector<cplx> amps(active.size());

  if (sampling_ == PhaseSampling::flat_closed_form || sampling_ == PhaseSampling::direct) {
    const bool closed = sampling_ == PhaseSampling::flat_closed_form;
    parallel_for(active.size(), options.workers, [&](std::size_t i) {
      Eigen::VectorXd xi(d), y(d);
      double w, s_rem;
      node_xi(active[i], xi, w);
      exact_part(xi, s_rem, y);
      cplx A;
      if (closed) {
        A = a0(y, xi);
      } else {
        cplx la;
        Eigen::VectorXd foot(d);
        direct(xi, 0.0, &y, s_rem, foot, la);
        A = a0(foot, xi) * std::exp(la);
      }
      F_[active[i]] = w * std::polar(1.0, s_rem / h_) * A;
    });
  } else {
    // Smooth remainders are computed on a uniform coarse grid and interpolated.
    double spacing = options.coarse_spacing;
    for (int attempt = 0;; ++attempt) {
      const double c0 = -res_.radius - 3.0 * spacing;
      const std::size_t m = std::size_t(std::ceil((2.0 * res_.radius + 6.0 * spacing) / spacing)) + 1;
      std::vector<int> base(n);
      std::vector<double> lw(n * kStencil);
      for (std::size_t j = 0; j < n; ++j) {
        const double u = (xi_[j] - c0) / spacing;
        const int b = std::clamp(int(std::floor(u)) - 2, 0, int(m) - kStencil);
        base[j] = b;
        lagrange6(u - b, &lw[j * kStencil]);
      }
      const std::size_t coarse_total = ipow(m, d);
      std::vector<char> needed(coarse_total, 0);
      const std::size_t stencil_total = ipow(kStencil, d);
      auto stencil_index = [&](std::size_t idx, std::size_t s, double& weight) {
        int fm[3], sm[3];
        unflatten(idx, n, d, fm);
        unflatten(s, kStencil, d, sm);
        std::size_t c = 0;
        weight = 1.0;
        for (int k = 0; k < d; ++k) {
          c = c * m + std::size_t(base[fm[k]] + sm[k]);
          weight *= lw[std::size_t(fm[k]) * kStencil + sm[k]];
        }
        return c;
      };
      for (std::size_t idx : active)
        for (std::size_t s = 0; s < stencil_total; ++s) {
          double wt;
          needed[stencil_index(idx, s, wt)] = 1;
        }
      std::vector<std::size_t> coarse;
      for (std::size_t c = 0; c < coarse_total; ++c)
        if (needed[c]) coarse.push_back(c);
      const int nv = d + 3;
      std::vector<double> vals(coarse_total * nv, 0.0);
      parallel_for(coarse.size(), options.workers, [&](std::size_t i) {
        int cm[3];
        unflatten(coarse[i], m, d, cm);
        Eigen::VectorXd xi(d), y(d), foot(d);
        for (int k = 0; k < d; ++k) xi[k] = c0 + cm[k] * spacing;
        double e_s, s_rem;
        exact_part(xi, e_s, y);
        cplx la;
        double* v = &vals[coarse[i] * nv];
        try {
          direct(xi, coarse_step(t_), &y, s_rem, foot, la);
        } catch (const DomainError&) {
          // Stencil nodes below the plateau of psi_tilde may sit on a caustic.
          v[0] = std::numeric_limits<double>::quiet_NaN();
          return;
        }
        v[0] = s_rem - e_s;
        for (int k = 0; k < d; ++k) v[1 + k] = foot[k] - y[k];
        v[d + 1] = la.real();
        v[d + 2] = la.imag();
      });
      auto interpolate = [&](std::size_t idx, double* out) {
        std::fill(out, out + nv, 0.0);
        for (std::size_t s = 0; s < stencil_total; ++s) {
          double wt;
          const double* v = &vals[stencil_index(idx, s, wt) * nv];
          for (int k = 0; k < nv; ++k) out[k] += wt * v[k];
        }
      };
      parallel_for(active.size(), options.workers, [&](std::size_t i) {
        Eigen::VectorXd xi(d), y(d);
        double w, e_s, v[3 + kMaxFlowDim];
        node_xi(active[i], xi, w);
        exact_part(xi, e_s, y);
        interpolate(active[i], v);
        if (std::isnan(v[0])) {
          Eigen::VectorXd foot(d);
          cplx la;
          direct(xi, 0.0, &y, s_rems[i], foot, la);
          amps[i] = a0(foot, xi) * std::exp(la);
        } else {
          for (int k = 0; k < d; ++k) y[k] += v[1 + k];
          s_rems[i] = e_s + v[0];
          amps[i] = a0(y, xi) * std::exp(cplx(v[d + 1], v[d + 2]));
        }
        F_[active[i]] = w * std::polar(1.0, s_rems[i] / h_) * amps[i];
      });

      // Compare integrands with direct solves at the default flow step.
      double amax = 0.0;
      for (const cplx& a : amps) amax = std::max(amax, std::abs(a));
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < active.size(); ++i)
        if (std::abs(amps[i]) > 1e-3 * amax) candidates.push_back(i);
      const std::size_t nc = std::min<std::size_t>(candidates.size(), std::size_t(std::max(options.check_nodes, 0)));
      std::vector<double> errs(nc, 0.0);
      parallel_for(nc, options.workers, [&](std::size_t c) {
        const std::size_t i = candidates[(c * candidates.size()) / nc + candidates.size() / (2 * nc)];
        Eigen::VectorXd xi(d), y(d), foot(d);
        double w, s_rem;
        node_xi(active[i], xi, w);
        exact_part(xi, s_rem, y);
        cplx la;
        direct(xi, 0.0, &y, s_rem, foot, la);
        const cplx ref = std::polar(1.0, s_rem / h_) * a0(foot, xi) * std::exp(la);
        const cplx got = std::polar(1.0, s_rems[i] / h_) * amps[i];
        errs[c] = std::abs(got - ref) / amax;
      });
      interp_error_ = errs.empty() ? 0.0 : *std::max_element(errs.begin(), errs.end());
      coarse_spacing_ = spacing;
      if (interp_error_ <= options.interpolation_tolerance || attempt >= options.max_refinements) break;
      spacing *= 0.5;
    }
  }

  if (d_ >= 2) {
    const std::size_t row = total / n;
    row_lo_.assign(n, 0);
    row_hi_.assign(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t lo = row, hi = 0;
      for (std::size_t k = 0; k < row; ++k)
        if (F_[j * row + k] != cplx(0.0, 0.0)) {
          lo = std::min(lo, k);
          hi = k + 1;
        }
      row_lo_[j] = int(hi > lo ? lo : 0);
      row_hi_[j] = int(hi > lo ? hi : 0);
    }
  }
}

cplx KernelSweep::eval(const Eigen::VectorXd& y) const {
  if (y.size() != d_) throw PreconditionError("y must have the chart dimension");
  const Eigen::VectorXd dxy = x_ - y;
  if (dxy.norm() > max_offset_ * (1.0 + 1e-9) + 1e-14)
    throw PreconditionError("|x - y| exceeds the offset the sweep was resolved for");
  const std::size_t n = xi_.size();
  std::vector<cplx> E(n * d_);
  for (int k = 0; k < d_; ++k)
    for (std::size_t j = 0; j < n; ++j) E[k * n + j] = std::polar(1.0, dxy[k] * xi_[j] / h_);
  cplx sum;
  if (d_ == 1) {
    sum = pairwise_dot(F_.data(), E.data(), n);
  } else {
    std::vector<cplx> rows(n, cplx(0.0, 0.0));
    const std::size_t row = F_.size() / n;
    for (std::size_t j = 0; j < n; ++j) {
      if (row_hi_[j] <= row_lo_[j]) continue;
      const cplx* f = F_.data() + j * row;
      if (d_ == 2) {
        rows[j] = pairwise_dot(f + row_lo_[j], E.data() + n + row_lo_[j], std::size_t(row_hi_[j] - row_lo_[j]));
      } else {
        std::vector<cplx> inner(n);
        for (std::size_t k = 0; k < n; ++k) inner[k] = pairwise_dot(f + k * n, E.data() + 2 * n, n);
        rows[j] = pairwise_dot(inner.data(), E.data() + n, n);
      }
    }
    sum = pairwise_dot(rows.data(), E.data(), n);
  }
  return sum / std::pow(2.0 * kPi * h_, d_);
}

KernelMaximum maximize_over_y(const KernelSweep& sweep, int directions, double spacing, int workers) {
  const int d = sweep.dim();
  if (directions < 1 || !(spacing > 0.0)) throw PreconditionError("need directions >= 1 and spacing > 0");
  std::vector<Eigen::VectorXd> dirs;
  if (d == 1) {
    dirs = {Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, -1.0)};
  } else if (d == 2) {
    for (int k = 0; k < directions; ++k) {
      Eigen::VectorXd w(2);
      w << std::cos(2.0 * kPi * k / directions), std::sin(2.0 * kPi * k / directions);
      dirs.push_back(w);
    }
  } else {
    // Fibonacci points on S^2.
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < directions; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / directions, r = std::sqrt(1.0 - z * z);
      Eigen::VectorXd w(3);
      w << r * std::cos(golden * k), r * std::sin(golden * k), z;
      dirs.push_back(w);
    }
  }
  const double rho_max = 1.2 * std::abs(sweep.t()) * sweep.resolution().group_velocity;
  const std::size_t n_rho = rho_max > 0.0 ? std::size_t(std::ceil(rho_max / spacing)) + 1 : 1;
  const double drho = n_rho > 1 ? rho_max / double(n_rho - 1) : 0.0;
  const std::size_t total = n_rho * dirs.size();
  std::vector<cplx> values(total);
  parallel_for(total, workers, [&](std::size_t i) {
    const std::size_t r = i / dirs.size(), k = i % dirs.size();
    values[i] = sweep.eval(sweep.x() + (double(r) * drho) * dirs[k]);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < total; ++i)
    if (std::abs(values[i]) > std::abs(values[best])) best = i;
  KernelMaximum out;
  const Eigen::VectorXd& w = dirs[best % dirs.size()];
  double rho = double(best / dirs.size()) * drho;
  out.L = values[best];
  out.abs_L = std::abs(out.L);
  if (n_rho > 1) {
    double lo = std::max(0.0, rho - drho), hi = std::min(rho_max, rho + drho);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    auto f = [&](double r) { return std::abs(sweep.eval(sweep.x() + r * w)); };
    double c = hi - g * (hi - lo), e = lo + g * (hi - lo);
    double fc = f(c), fe = f(e);
    for (int it = 0; it < 40 && hi - lo > 1e-6 * spacing; ++it) {
      if (fc >= fe) {
        hi = e;
        e = c;
        fe = fc;
        c = hi - g * (hi - lo);
        fc = f(c);
      } else {
        lo = c;
        c = e;
        fc = fe;
        e = lo + g * (hi - lo);
        fe = f(e);
      }
    }
    const double r = fc >= fe ? c : e;
    const cplx L = sweep.eval(sweep.x() + r * w);
    if (std::abs(L) > out.abs_L) {
      rho = r;
      out.L = L;
      out.abs_L = std::abs(L);
    }
  }
  out.x = sweep.x();
  out.y = sweep.x() + rho * w;
  return out;
}

Eigen::MatrixXd kg_phase_hessian(const MassParam& mass, double h, const Eigen::VectorXd& eta) {
  if (eta.size() == 0 || eta.norm() == 0.0) throw DomainError("Φ̃ Hessian requires η != 0");
  const double eps2 = h * h * mass.m_tilde * mass.m_tilde;
  const double r2 = eta.squaredNorm() + eps2;
  const long d = eta.size();
  return (Eigen::MatrixXd::Identity(d, d) - eta * eta.transpose() / r2) / std::sqrt(r2);
}

Eigen::VectorXd hessian_spectrum(const MassParam& mass, double h, const Eigen::VectorXd& eta) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kg_phase_hessian(mass, h, eta), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double reduced_phase_second_derivative(const MassParam& mass, double h, const Eigen::VectorXd& zeta,
                                       double eta_j) {
  const double eps2 = h * h * mass.m_tilde * mass.m_tilde;
  const double z2 = zeta.squaredNorm(), e2 = eta_j * eta_j;
  if (z2 + e2 + eps2 == 0.0) throw DomainError("reduced phase undefined at the origin");
  return (z2 + eps2 - e2 * z2 / (e2 + eps2)) / std::pow(z2 + e2 + eps2, 1.5);
}

double reduced_phase_second_derivative_numeric(const MassParam& mass, double h, const Eigen::VectorXd& zeta0,
                                               double eta0, double delta) {
  const double eps2 = h * h * mass.m_tilde * mass.m_tilde;
  const long k = zeta0.size();
  auto phi = [&](const Eigen::VectorXd& z, double e) { return std::sqrt(z.squaredNorm() + e * e + eps2); };
  const Eigen::VectorXd c = zeta0 / phi(zeta0, eta0);
  // Newton on ∇_ζ Φ̃(ζ, η) = c.
  auto F = [&](double e) {
    Eigen::VectorXd z = zeta0;
    for (int it = 0; it < 60; ++it) {
      const double r = phi(z, e);
      const Eigen::VectorXd g = z / r - c;
      if (g.norm() < 1e-16) break;
      const Eigen::MatrixXd H = (Eigen::MatrixXd::Identity(k, k) - z * z.transpose() / (r * r)) / r;
      z -= H.ldlt().solve(g);
    }
    return phi(z, e) - c.dot(z);
  };
  auto second = [&](double dl) { return (F(eta0 + dl) - 2.0 * F(eta0) + F(eta0 - dl)) / (dl * dl); };
  return (4.0 * second(0.5 * delta) - second(delta)) / 3.0;
}

double reduced_phase_value(const MassParam& mass, double h, double c_zeta, double c_eta, double eta) {
  if (!(std::abs(c_zeta) < 1.0)) throw DomainError("|c_ζ| must be below 1");
  const double eps2 = h * h * mass.m_tilde * mass.m_tilde;
  return c_eta * eta + std::sqrt(1.0 - c_zeta * c_zeta) * std::sqrt(eta * eta + eps2);
}

StationaryPhaseResult stationary_phase_reference(const PhaseFunction& phase, const RealFunction& amplitude,
                                                 double lambda, const Eigen::VectorXd& start,
                                                 const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi) {
  StationaryPhaseResult r;
  const int n = phase.dim;
  Eigen::VectorXd x = start;
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    const Eigen::VectorXd g = phase.gradient(x);
    if (g.norm() < 1e-13) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd H = phase.hessian(x);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
    if (!lu.isInvertible()) break;
    x -= lu.solve(g);
    if (!x.allFinite()) break;
  }
  if (!converged) {
    r.regime = "no stationary point found";
    return r;
  }
  if ((x.array() < box_lo.array()).any() || (x.array() > box_hi.array()).any()) {
    r.regime = "stationary point outside the amplitude box";
    return r;
  }
  const Eigen::MatrixXd H = phase.hessian(x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.cwiseAbs().minCoeff() < 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff())) {
    r.regime = "degenerate Hessian";
    r.x_star = x;
    return r;
  }
  r.stationary = true;
  r.regime = "stationary";
  r.x_star = x;
  r.det_hessian = ev.prod();
  for (int k = 0; k < n; ++k) r.signature += ev[k] > 0.0 ? 1 : -1;
  r.leading = std::pow(2.0 * kPi / lambda, 0.5 * n) / std::sqrt(std::abs(r.det_hessian)) *
              std::polar(1.0, lambda * phase.value(x) + kPi * r.signature / 4.0) * amplitude(x);
  return r;
}

cplx oscillatory_quadrature(const PhaseFunction& phase, const RealFunction& amplitude, double lambda,
                            const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi, double resolution) {
  const int n = phase.dim;
  if (n < 1 || n > 2) throw PreconditionError("oscillatory_quadrature supports dimensions 1 and 2");
  // Sample |∇Φ| to size the panels.
  double gmax = 0.0;
  const int probe = 65;
  for (int i = 0; i < (n == 1 ? 1 : probe); ++i)
    for (int j = 0; j < probe; ++j) {
      Eigen::VectorXd x(n);
      x[0] = box_lo[0] + (box_hi[0] - box_lo[0]) * j / (probe - 1.0);
      if (n == 2) x[1] = box_lo[1] + (box_hi[1] - box_lo[1]) * i / (probe - 1.0);
      gmax = std::max(gmax, phase.gradient(x).lpNorm<Eigen::Infinity>());
    }
  constexpr int order = 16;
  std::vector<GaussRule> rules(n);
  for (int k = 0; k < n; ++k) {
    const double width = box_hi[k] - box_lo[k];
    const int panels = std::max(8, int(std::ceil(resolution * lambda * gmax * width / (2.0 * kPi * order))));
    GaussRule r;
    const GaussRule& g = gauss_legendre(order);
    for (int p = 0; p < panels; ++p) {
      const double lo = box_lo[k] + p * width / panels;
      const GaussRule m = map_rule(g, lo, lo + width / panels);
      r.nodes.insert(r.nodes.end(), m.nodes.begin(), m.nodes.end());
      r.weights.insert(r.weights.end(), m.weights.begin(), m.weights.end());
    }
    rules[k] = std::move(r);
  }
  const std::size_t n0 = rules[0].nodes.size();
  const std::size_t n1 = n == 2 ? rules[1].nodes.size() : 1;
  std::vector<cplx> rows(n1);
  std::vector<cplx> terms(n0);
  Eigen::VectorXd x(n);
  for (std::size_t i = 0; i < n1; ++i) {
    if (n == 2) x[1] = rules[1].nodes[i];
    for (std::size_t j = 0; j < n0; ++j) {
      x[0] = rules[0].nodes[j];
      terms[j] = rules[0].weights[j] * amplitude(x) * std::polar(1.0, lambda * phase.value(x));
    }
    rows[i] = pairwise_sum_c(terms.data(), n0) * (n == 2 ? rules[1].weights[i] : 1.0);
  }
  return pairwise_sum_c(rows.data(), n1);
}

StationaryPhaseCheck stationary_phase_error_check(const PhaseFunction& phase, const RealFunction& amplitude,
                                                  const std::vector<double>& lambdas, const Eigen::VectorXd& start,
                                                  const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi) {
  if (lambdas.size() < 2) throw PreconditionError("need at least two λ values");
  StationaryPhaseCheck c;
  c.lambdas = lambdas;
  c.expected_slope = -(0.5 * phase.dim + 1.0);
  std::vector<double> lx, ly;
  for (double lam : lambdas) {
    const StationaryPhaseResult sp = stationary_phase_reference(phase, amplitude, lam, start, box_lo, box_hi);
    if (!sp.stationary) throw DomainError("stationary phase check: " + sp.regime);
    const cplx q = oscillatory_quadrature(phase, amplitude, lam, box_lo, box_hi);
    c.errors.push_back(std::abs(q - sp.leading));
    lx.push_back(std::log(lam));
    ly.push_back(std::log(c.errors.back()));
  }
  c.slope = fit_line(lx, ly).slope;
  c.constant = c.errors.front() * std::pow(lambdas.front(), -c.expected_slope);
  c.pass = c.slope <= c.expected_slope + 0.1;
  for (std::size_t k = 0; k < lambdas.size(); ++k)
    c.pass = c.pass && c.errors[k] <= 1.25 * c.constant * std::pow(lambdas[k], c.expected_slope);
  return c;
}

NonStationaryCheck non_stationary_decay_check(const PhaseFunction& phase, const RealFunction& amplitude,
                                              const std::vector<double>& lambdas, const Eigen::VectorXd& box_lo,
                                              const Eigen::VectorXd& box_hi, double max_power) {
  if (lambdas.size() < 2) throw PreconditionError("need at least two λ values");
  NonStationaryCheck c;
  c.lambdas = lambdas;
  for (double lam : lambdas) c.magnitudes.push_back(std::abs(oscillatory_quadrature(phase, amplitude, lam, box_lo, box_hi)));
  for (std::size_t k = 1; k < lambdas.size(); ++k)
    c.local_slopes.push_back(std::log(c.magnitudes[k] / c.magnitudes[k - 1]) / std::log(lambdas[k] / lambdas[k - 1]));
  c.pass = c.local_slopes.back() < -max_power;
  for (std::size_t k = 1; k < c.local_slopes.size(); ++k)
    c.pass = c.pass && c.local_slopes[k] <= c.local_slopes[k - 1];
  return c;
}

VanDerCorputResult van_der_corput_check(const std::function<double(double)>& phase,
                                        const std::function<double(double)>& phase_derivative,
                                        const std::function<double(double)>& kth_derivative, int k,
                                        double c_k, const OneDFunction& amplitude, double a, double b,
                                        const std::vector<double>& lambdas, double slack) {
  if (k < 1 || !(c_k > 0.0) || !(b > a) || lambdas.empty()) throw PreconditionError("invalid Van der Corput input");
  VanDerCorputResult r;
  r.lambdas = lambdas;
  const int probe = 20001;
  double gmax = 0.0;
  r.min_derivative = std::abs(kth_derivative(a));
  r.premise_violation_at = a;
  for (int i = 0; i < probe; ++i) {
    const double x = a + (b - a) * i / (probe - 1.0);
    const double v = std::abs(kth_derivative(x));
    if (v < r.min_derivative) {
      r.min_derivative = v;
      r.premise_violation_at = x;
    }
    gmax = std::max(gmax, std::abs(phase_derivative(x)));
  }
  r.premise_ok = r.min_derivative >= c_k * (1.0 - 1e-12);
  if (!r.premise_ok) return r;

  const double variation =
      std::abs(amplitude.value(b)) +
      composite_gauss_legendre<double>([&](double x) { return std::abs(amplitude.derivative(x)); }, a, b, 256);
  for (double lam : lambdas) {
    const int panels = std::max(16, int(std::ceil(10.0 * lam * gmax * (b - a) / (2.0 * kPi * 16))));
    const cplx I = composite_gauss_legendre<cplx>(
        [&](double x) { return amplitude.value(x) * std::polar(1.0, lam * phase(x)); }, a, b, panels);
    r.integrals.push_back(std::abs(I));
    r.ratios.push_back(std::abs(I) / (std::pow(c_k * lam, -1.0 / k) * variation));
  }
  r.fitted_constant = r.ratios.front();
  r.max_constant = *std::max_element(r.ratios.begin(), r.ratios.end());
  r.holds = r.max_constant <= r.fitted_constant + slack;
  return r;
}

DecayFit fit_decay(const std::vector<DecaySample>& samples) {
  if (samples.size() < 3) throw PreconditionError("underdetermined decay fit: need at least 3 samples");
  Eigen::MatrixXd A(samples.size(), 3);
  Eigen::VectorXd y(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const DecaySample& s = samples[i];
    if (!(s.abs_L > 0.0) || !(s.h > 0.0)) throw PreconditionError("decay samples need |L| > 0 and h > 0");
    A(i, 0) = 1.0;
    A(i, 1) = -std::log(s.h);
    A(i, 2) = -std::log1p(std::abs(s.t) / s.h);
    y[i] = std::log(s.abs_L);
  }
  const LinearFit lf = fit_linear(A, y);
  DecayFit f;
  f.constant = lf.coefficients[0];
  f.alpha = lf.coefficients[1];
  f.beta = lf.coefficients[2];
  f.residual = lf.rms_residual;
  f.reliable = f.residual <= 0.5;
  f.samples = samples;
  return f;
}

std::vector<double> window_times(Window window, double h, double t0, int count) {
  const double lo = 4.0 * h;
  const double hi = window == Window::wave ? t0 : std::sqrt(h) * t0;
  if (count < 1) throw PreconditionError("window_times needs count >= 1");
  if (hi < lo) {
    std::ostringstream os;
    os << to_string(window) << " window [4h, " << hi << "] is empty at h = " << h;
    throw PreconditionError(os.str());
  }
  std::vector<double> t(count);
  for (int k = 0; k < count; ++k) t[k] = count == 1 ? hi : lo * std::pow(hi / lo, double(k) / (count - 1));
  return t;
}

DecayFit decay_fit(const DecayFitRequest& req) {
  std::vector<double> hs = req.h_values;
  std::sort(hs.begin(), hs.end());
  if (std::unique(hs.begin(), hs.end()) - hs.begin() < 3)
    throw PreconditionError("decay_fit needs at least 3 distinct h values");
  if (req.t_values.size() != req.h_values.size()) throw PreconditionError("decay_fit needs one t list per h");
  const int d = req.chart.dim();
  std::vector<Eigen::VectorXd> xs = req.x_points;
  if (xs.empty()) xs.push_back(Eigen::VectorXd::Zero(d));
  for (std::size_t i = 0; i < req.h_values.size(); ++i) {
    if (req.t_values[i].size() < 5) throw PreconditionError("decay_fit needs at least 5 t values per h");
    for (double t : req.t_values[i]) validate_window(req.window, req.h_values[i], req.t0, t);
  }

  std::vector<DecaySample> samples;
  for (std::size_t i = 0; i < req.h_values.size(); ++i) {
    const double h = req.h_values[i];
    const HamiltonianSystem sys(req.chart, req.mass, req.library, h);
    for (double t : req.t_values[i]) {
      DecaySample best;
      bool have = false;
      for (const auto& x : xs) {
        SweepOptions so = req.sweep;
        const auto [lmin, lmax] = metric_extremes(req.chart, x);
        (void)lmin;
        so.max_offset = 1.2 * std::abs(t) * std::sqrt(lmax);
        const KernelSweep sweep(sys, t, x, so);
        const KernelMaximum km = maximize_over_y(sweep, req.directions, req.spacing_over_h * h, so.workers);
        if (!have || km.abs_L > best.abs_L) {
          best.h = h;
          best.t = t;
          best.x = km.x;
          best.y = km.y;
          best.L = km.L;
          best.abs_L = km.abs_L;
          best.nodes_per_axis = sweep.resolution().nodes_per_axis;
          best.interpolation_error = sweep.interpolation_error();
          have = true;
        }
      }
      samples.push_back(best);
    }
  }
  return fit_decay(samples);
}

}  // namespace wkblab
