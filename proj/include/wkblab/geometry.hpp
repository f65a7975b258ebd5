#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "wkblab/taylor.hpp"

namespace wkblab {

// Charts used along characteristics carry at most this many coordinates.
inline constexpr int kMaxFlowDim = 3;

// exp(-1/(1-s^2)) on |s| < 1, zero outside.
double bump(double s);

// Smooth monotone step: 0 for s <= 0, 1 for s >= 1.
double smooth_step(double s);

template <int N>
Taylor<N> smooth_step(const Taylor<N>& s) {
  if (s.c[0] <= 0.0) return Taylor<N>{};
  if (s.c[0] >= 1.0) return Taylor<N>::constant(1.0);
  auto e = [](const Taylor<N>& u) {
    Taylor<N> r = reciprocal(u);
    r *= -1.0;
    return exp(r);
  };
  Taylor<N> a = e(s);
  Taylor<N> b = e(1.0 - s);
  return a / (a + b);
}

// G(x) and its first two derivatives, ∂_k G = dG[k], ∂_k∂_l G = d2G[k][l].
struct InverseMetricJet {
  int dim = 0;
  double G[kMaxFlowDim][kMaxFlowDim];
  double dG[kMaxFlowDim][kMaxFlowDim][kMaxFlowDim];
  double d2G[kMaxFlowDim][kMaxFlowDim][kMaxFlowDim][kMaxFlowDim];
};

enum class ChartKind { flat, perturbed_flat, sphere_polar };

std::string to_string(ChartKind kind);

class MetricChart {
public:
  static MetricChart flat(int dim);
  // G = I + eps * b(|x - x0| / r) * M with M = 2(2 w w^T - I), w = (1,..,1)/sqrt(d).
  static MetricChart perturbed_flat(int dim, double eps = 0.15, Eigen::VectorXd center = {},
                                    double radius = 1.0);
  // Geodesic polar coordinates (theta_1, ..., theta_d) on S^d minus poles.
  static MetricChart sphere_polar(int dim);

  int dim() const { return dim_; }
  ChartKind kind() const { return kind_; }
  double epsilon() const { return eps_; }
  double radius() const { return radius_; }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::MatrixXd& pattern() const { return pattern_; }

  Eigen::MatrixXd metric_inverse(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd metric(const Eigen::VectorXd& x) const;
  double sqrt_det(const Eigen::VectorXd& x) const;
  // Gamma[i](j, k) = Γ^i_{jk}.
  std::vector<Eigen::MatrixXd> christoffel(const Eigen::VectorXd& x) const;
  // Derivatives ∂_k G as d matrices.
  std::vector<Eigen::MatrixXd> metric_inverse_gradient(const Eigen::VectorXd& x) const;

  // Allocation-free evaluation used inside the characteristic integrators.
  // Requires dim() <= kMaxFlowDim.
  void inverse_jet(const double* x, InverseMetricJet& jet) const;

  // Sampling box used for ellipticity sweeps.
  void sampling_box(Eigen::VectorXd& lo, Eigen::VectorXd& hi) const;

private:
  MetricChart() = default;
  // value and first two derivatives of the perturbation profile b(|x-x0|/r)
  void profile_jet(const double* x, double& beta, double* dbeta, double (*d2beta)[kMaxFlowDim]) const;

  int dim_ = 1;
  ChartKind kind_ = ChartKind::flat;
  double eps_ = 0.0;
  double radius_ = 1.0;
  Eigen::VectorXd center_;
  Eigen::MatrixXd pattern_;
};

struct MassParam {
  double m = 0.0;
  double m_tilde = 1.0;

  static MassParam of(double m);
};

// Dispersive cutoffs. phi is a bump on [a, b] in lambda = p_{0,0}; psi_tilde equals 1
// on [a/2, 2b + 2 max(1, m_tilde^2)] and vanishes below a/4 and above twice the
// upper plateau end.
class CutoffLibrary {
public:
  CutoffLibrary(double a, double b, double m_tilde);
  // supp phi = [1/4, 4], i.e. 1/2 <= |xi| <= 2.
  static CutoffLibrary wave();
  // supp phi = [2.25, 9] m_tilde^2, which keeps phi away from [-2 m~^2, 2 m~^2].
  static CutoffLibrary klein_gordon(double m_tilde);

  double a() const { return a_; }
  double b() const { return b_; }
  double m_tilde() const { return m_tilde_; }
  double plateau_lo() const { return lo_; }
  double plateau_hi() const { return hi_; }

  double phi(double lambda) const;
  double phi_tilde_lp(double lambda) const;
  double psi_tilde(double lambda) const;
  double psi(double lambda) const;
  // psi and its derivatives up to order N at lambda.
  template <int N>
  Taylor<N> psi_jet(double lambda) const;
  // Fast value, first and second derivative.
  void psi_d2(double lambda, double out[3]) const;

  // Enlarged support K = [a / factor, b * factor].
  std::array<double, 2> neighbourhood(double factor) const { return {a_ / factor, b_ * factor}; }

private:
  double a_, b_, m_tilde_;
  double lo_, hi_;
};

template <int N>
Taylor<N> CutoffLibrary::psi_jet(double lambda) const {
  const Taylor<N> l = Taylor<N>::variable(lambda);
  if (lambda <= 0.25 * a_ || lambda >= 2.0 * hi_) return Taylor<N>{};
  Taylor<N> cut = Taylor<N>::constant(1.0);
  if (lambda < lo_) cut = smooth_step((l + (-0.25 * a_)) * (1.0 / (lo_ - 0.25 * a_)));
  if (lambda > hi_) cut = 1.0 - smooth_step((l + (-hi_)) * (1.0 / hi_));
  return cut * sqrt(l);
}

double ellipticity_bounds(const MetricChart& chart, const std::vector<Eigen::VectorXd>& grid);
// Tensor grid with n points per axis over the chart's sampling box.
std::vector<Eigen::VectorXd> ellipticity_grid(const MetricChart& chart, int n = 64);

double principal_symbol(const MetricChart& chart, const MassParam& mass, double h,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& xi);
double symbol_sqrt(const CutoffLibrary& lib, const MetricChart& chart, const MassParam& mass,
                   double h, const Eigen::VectorXd& x, const Eigen::VectorXd& xi);

}  // namespace wkblab
