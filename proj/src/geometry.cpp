#include "wkblab/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "wkblab/errors.hpp"

namespace wkblab {

double bump(double s) {
  const double u = 1.0 - s * s;
  if (u <= 0.0) return 0.0;
  return std::exp(-1.0 / u);
}

double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

std::string to_string(ChartKind kind) {
  switch (kind) {
    case ChartKind::flat: return "flat";
    case ChartKind::perturbed_flat: return "perturbed_flat";
    case ChartKind::sphere_polar: return "sphere_polar";
  }
  return "?";
}

MetricChart MetricChart::flat(int dim) {
  if (dim < 1) throw PreconditionError("chart dimension must be >= 1");
  MetricChart c;
  c.dim_ = dim;
  c.kind_ = ChartKind::flat;
  c.center_ = Eigen::VectorXd::Zero(dim);
  c.pattern_ = Eigen::MatrixXd::Zero(dim, dim);
  return c;
}

MetricChart MetricChart::perturbed_flat(int dim, double eps, Eigen::VectorXd center, double radius) {
  if (dim < 1) throw PreconditionError("chart dimension must be >= 1");
  if (!(radius > 0.0)) throw PreconditionError("bump radius must be positive");
  if (center.size() == 0) center = Eigen::VectorXd::Zero(dim);
  if (center.size() != dim) throw PreconditionError("bump center has wrong dimension");
  MetricChart c;
  c.dim_ = dim;
  c.kind_ = ChartKind::perturbed_flat;
  c.eps_ = eps;
  c.radius_ = radius;
  c.center_ = std::move(center);
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(dim, 1.0 / std::sqrt(double(dim)));
  c.pattern_ = 2.0 * (2.0 * w * w.transpose() - Eigen::MatrixXd::Identity(dim, dim));
  return c;
}

MetricChart MetricChart::sphere_polar(int dim) {
  if (dim < 1) throw PreconditionError("chart dimension must be >= 1");
  MetricChart c;
  c.dim_ = dim;
  c.kind_ = ChartKind::sphere_polar;
  c.center_ = Eigen::VectorXd::Constant(dim, 0.5 * M_PI);
  c.pattern_ = Eigen::MatrixXd::Zero(dim, dim);
  return c;
}

void MetricChart::profile_jet(const double* x, double& beta, double* dbeta,
                              double (*d2beta)[kMaxFlowDim]) const {
  const int d = dim_;
  const double r2 = radius_ * radius_;
  double u = 0.0;
  for (int k = 0; k < d; ++k) {
    const double dx = x[k] - center_[k];
    u += dx * dx;
  }
  u /= r2;
  for (int k = 0; k < d; ++k) {
    dbeta[k] = 0.0;
    for (int l = 0; l < d; ++l) d2beta[k][l] = 0.0;
  }
  if (u >= 1.0) {
    beta = 0.0;
    return;
  }
  const double v = 1.0 / (1.0 - u);
  const double B = std::exp(-v);
  const double B1 = -B * v * v;
  const double B2 = B * (v * v * v * v - 2.0 * v * v * v);
  beta = B;
  for (int k = 0; k < d; ++k) {
    const double uk = 2.0 * (x[k] - center_[k]) / r2;
    dbeta[k] = B1 * uk;
    for (int l = 0; l < d; ++l) {
      const double ul = 2.0 * (x[l] - center_[l]) / r2;
      d2beta[k][l] = B2 * uk * ul + (k == l ? B1 * 2.0 / r2 : 0.0);
    }
  }
}

void MetricChart::inverse_jet(const double* x, InverseMetricJet& jet) const {
  const int d = dim_;
  if (d > kMaxFlowDim) throw PreconditionError("inverse_jet supports at most 3 coordinates");
  jet.dim = d;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      jet.G[i][j] = (i == j) ? 1.0 : 0.0;
      for (int k = 0; k < d; ++k) {
        jet.dG[k][i][j] = 0.0;
        for (int l = 0; l < d; ++l) jet.d2G[k][l][i][j] = 0.0;
      }
    }
  switch (kind_) {
    case ChartKind::flat:
      return;
    case ChartKind::perturbed_flat: {
      double beta, db[kMaxFlowDim], d2b[kMaxFlowDim][kMaxFlowDim];
      profile_jet(x, beta, db, d2b);
      if (beta == 0.0) return;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          const double mij = eps_ * pattern_(i, j);
          jet.G[i][j] += beta * mij;
          for (int k = 0; k < d; ++k) {
            jet.dG[k][i][j] = db[k] * mij;
            for (int l = 0; l < d; ++l) jet.d2G[k][l][i][j] = d2b[k][l] * mij;
          }
        }
      return;
    }
    case ChartKind::sphere_polar: {
      // G_kk = prod_{j<k} sin^{-2} x_j
      for (int k = 0; k < d; ++k) {
        double g = 1.0;
        for (int j = 0; j < k; ++j) {
          const double s = std::sin(x[j]);
          g /= s * s;
        }
        jet.G[k][k] = g;
        for (int m = 0; m < k; ++m) {
          const double cm = std::cos(x[m]) / std::sin(x[m]);
          jet.dG[m][k][k] = -2.0 * cm * g;
          for (int n = 0; n < k; ++n) {
            if (n == m) {
              const double sm = std::sin(x[m]);
              jet.d2G[m][m][k][k] = (2.0 / (sm * sm) + 4.0 * cm * cm) * g;
            } else {
              const double cn = std::cos(x[n]) / std::sin(x[n]);
              jet.d2G[m][n][k][k] = 4.0 * cm * cn * g;
            }
          }
        }
      }
      return;
    }
  }
}

Eigen::MatrixXd MetricChart::metric_inverse(const Eigen::VectorXd& x) const {
  const int d = dim_;
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(d, d);
  switch (kind_) {
    case ChartKind::flat:
      break;
    case ChartKind::perturbed_flat: {
      const double u = (x - center_).squaredNorm() / (radius_ * radius_);
      G += eps_ * bump(std::sqrt(u)) * pattern_;
      break;
    }
    case ChartKind::sphere_polar: {
      double g = 1.0;
      for (int k = 0; k < d; ++k) {
        G(k, k) = g;
        const double s = std::sin(x[k]);
        g /= s * s;
      }
      break;
    }
  }
  return G;
}

Eigen::MatrixXd MetricChart::metric(const Eigen::VectorXd& x) const {
  if (kind_ == ChartKind::sphere_polar) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim_, dim_);
    double p = 1.0;
    for (int k = 0; k < dim_; ++k) {
      g(k, k) = p;
      const double s = std::sin(x[k]);
      p *= s * s;
    }
    return g;
  }
  return metric_inverse(x).inverse();
}

double MetricChart::sqrt_det(const Eigen::VectorXd& x) const {
  if (kind_ == ChartKind::sphere_polar) {
    double r = 1.0;
    for (int j = 0; j < dim_; ++j) r *= std::pow(std::abs(std::sin(x[j])), dim_ - 1 - j);
    return r;
  }
  return std::sqrt(metric(x).determinant());
}

std::vector<Eigen::MatrixXd> MetricChart::metric_inverse_gradient(const Eigen::VectorXd& x) const {
  const int d = dim_;
  std::vector<Eigen::MatrixXd> dG(d, Eigen::MatrixXd::Zero(d, d));
  switch (kind_) {
    case ChartKind::flat:
      break;
    case ChartKind::perturbed_flat: {
      const double r2 = radius_ * radius_;
      const double u = (x - center_).squaredNorm() / r2;
      if (u < 1.0) {
        const double v = 1.0 / (1.0 - u);
        const double B1 = -std::exp(-v) * v * v;
        for (int k = 0; k < d; ++k) dG[k] = eps_ * B1 * 2.0 * (x[k] - center_[k]) / r2 * pattern_;
      }
      break;
    }
    case ChartKind::sphere_polar: {
      const Eigen::MatrixXd G = metric_inverse(x);
      for (int k = 0; k < d; ++k)
        for (int m = 0; m < k; ++m) dG[m](k, k) = -2.0 * std::cos(x[m]) / std::sin(x[m]) * G(k, k);
      break;
    }
  }
  return dG;
}

std::vector<Eigen::MatrixXd> MetricChart::christoffel(const Eigen::VectorXd& x) const {
  const int d = dim_;
  std::vector<Eigen::MatrixXd> Gamma(d, Eigen::MatrixXd::Zero(d, d));
  if (kind_ == ChartKind::flat) return Gamma;
  const Eigen::MatrixXd G = metric_inverse(x);
  const Eigen::MatrixXd g = metric(x);
  const std::vector<Eigen::MatrixXd> dG = metric_inverse_gradient(x);
  // ∂_k g = -g (∂_k G) g
  std::vector<Eigen::MatrixXd> dg(d);
  for (int k = 0; k < d; ++k) dg[k] = -g * dG[k] * g;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int l = 0; l < d; ++l) s += G(i, l) * (dg[j](l, k) + dg[k](j, l) - dg[l](j, k));
        Gamma[i](j, k) = 0.5 * s;
      }
  return Gamma;
}

void MetricChart::sampling_box(Eigen::VectorXd& lo, Eigen::VectorXd& hi) const {
  switch (kind_) {
    case ChartKind::flat:
      lo = Eigen::VectorXd::Constant(dim_, -1.0);
      hi = Eigen::VectorXd::Constant(dim_, 1.0);
      return;
    case ChartKind::perturbed_flat:
      lo = center_.array() - 1.5 * radius_;
      hi = center_.array() + 1.5 * radius_;
      return;
    case ChartKind::sphere_polar:
      lo = Eigen::VectorXd::Constant(dim_, 0.1);
      hi = Eigen::VectorXd::Constant(dim_, M_PI - 0.1);
      hi[dim_ - 1] = 2.0 * M_PI;
      lo[dim_ - 1] = 0.0;
      return;
  }
}

MassParam MassParam::of(double m) {
  if (!(m >= 0.0)) throw PreconditionError("mass must be >= 0");
  return MassParam{m, m > 0.0 ? m : 1.0};
}

CutoffLibrary::CutoffLibrary(double a, double b, double m_tilde) : a_(a), b_(b), m_tilde_(m_tilde) {
  if (!(a > 0.0 && b > a)) throw PreconditionError("phi support must be [a, b] with 0 < a < b");
  if (!(m_tilde > 0.0)) throw PreconditionError("m_tilde must be positive");
  lo_ = 0.5 * a;
  hi_ = 2.0 * b + 2.0 * std::max(1.0, m_tilde * m_tilde);
}

CutoffLibrary CutoffLibrary::wave() { return CutoffLibrary(0.25, 4.0, 1.0); }

CutoffLibrary CutoffLibrary::klein_gordon(double m_tilde) {
  const double m2 = m_tilde * m_tilde;
  return CutoffLibrary(2.25 * m2, 9.0 * m2, m_tilde);
}

double CutoffLibrary::phi(double lambda) const {
  return bump((2.0 * lambda - a_ - b_) / (b_ - a_));
}

double CutoffLibrary::phi_tilde_lp(double lambda) const {
  return 1.0 - smooth_step((std::abs(lambda) - 0.5 * a_) / (0.5 * a_));
}

double CutoffLibrary::psi_tilde(double lambda) const {
  if (lambda <= 0.25 * a_ || lambda >= 2.0 * hi_) return 0.0;
  if (lambda < lo_) return smooth_step((lambda - 0.25 * a_) / (lo_ - 0.25 * a_));
  if (lambda > hi_) return 1.0 - smooth_step((lambda - hi_) / hi_);
  return 1.0;
}

double CutoffLibrary::psi(double lambda) const {
  const double c = psi_tilde(lambda);
  if (c == 0.0) return 0.0;
  if (c == 1.0) return std::sqrt(lambda);
  return c * std::sqrt(lambda);
}

void CutoffLibrary::psi_d2(double lambda, double out[3]) const {
  if (lambda >= lo_ && lambda <= hi_) {
    const double s = std::sqrt(lambda);
    out[0] = s;
    out[1] = 0.5 / s;
    out[2] = -0.25 / (s * lambda);
    return;
  }
  const Taylor<2> j = psi_jet<2>(lambda);
  out[0] = j.c[0];
  out[1] = j.c[1];
  out[2] = 2.0 * j.c[2];
}

double ellipticity_bounds(const MetricChart& chart, const std::vector<Eigen::VectorXd>& grid) {
  if (grid.empty()) throw PreconditionError("ellipticity_bounds needs a nonempty grid");
  double C = 1.0;
  for (const auto& x : grid) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(chart.metric_inverse(x), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) {
      std::ostringstream os;
      os << "metric not positive definite at x = (" << x.transpose() << "), smallest eigenvalue " << lo;
      throw NotPositiveDefinite(os.str(), x);
    }
    C = std::max({C, hi, 1.0 / lo});
  }
  return C;
}

std::vector<Eigen::VectorXd> ellipticity_grid(const MetricChart& chart, int n) {
  Eigen::VectorXd lo, hi;
  chart.sampling_box(lo, hi);
  const int d = chart.dim();
  std::vector<Eigen::VectorXd> grid;
  std::vector<int> idx(d, 0);
  while (true) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) x[k] = lo[k] + (hi[k] - lo[k]) * (n == 1 ? 0.5 : double(idx[k]) / (n - 1));
    grid.push_back(x);
    int k = 0;
    while (k < d && ++idx[k] == n) idx[k++] = 0;
    if (k == d) break;
  }
  return grid;
}

double principal_symbol(const MetricChart& chart, const MassParam& mass, double h,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
  if (!(h > 0.0 && h <= 1.0)) throw PreconditionError("h must lie in (0, 1]");
  const double hm = h * mass.m_tilde;
  return xi.dot(chart.metric_inverse(x) * xi) + hm * hm;
}

double symbol_sqrt(const CutoffLibrary& lib, const MetricChart& chart, const MassParam& mass,
                   double h, const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
  return lib.psi(principal_symbol(chart, mass, h, x, xi));
}

}  // namespace wkblab
