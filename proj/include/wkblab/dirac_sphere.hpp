#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wkblab/special_functions.hpp"
#include "wkblab/strichartz.hpp"

namespace wkblab {

// Gaussian integer a + b i; gamma matrix entries stay in this ring.
struct GaussInt {
  long long re = 0, im = 0;
  friend GaussInt operator+(GaussInt a, GaussInt b) { return {a.re + b.re, a.im + b.im}; }
  friend GaussInt operator-(GaussInt a, GaussInt b) { return {a.re - b.re, a.im - b.im}; }
  friend GaussInt operator*(GaussInt a, GaussInt b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend bool operator==(GaussInt a, GaussInt b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(GaussInt a, GaussInt b) { return !(a == b); }
};

class GaussMatrix {
public:
  GaussMatrix() = default;
  explicit GaussMatrix(int n) : n_(n), a_(std::size_t(n) * n) {}
  static GaussMatrix identity(int n, GaussInt diag = {1, 0});

  int size() const { return n_; }
  GaussInt& operator()(int i, int j) { return a_[std::size_t(i) * n_ + j]; }
  GaussInt operator()(int i, int j) const { return a_[std::size_t(i) * n_ + j]; }

  friend GaussMatrix operator*(const GaussMatrix& a, const GaussMatrix& b);
  friend GaussMatrix operator+(const GaussMatrix& a, const GaussMatrix& b);
  friend GaussMatrix operator*(GaussInt s, const GaussMatrix& a);
  friend bool operator==(const GaussMatrix& a, const GaussMatrix& b) { return a.n_ == b.n_ && a.a_ == b.a_; }

  // [[0, a], [b, 0]] and diag(a, b) block matrices.
  static GaussMatrix off_diagonal(const GaussMatrix& a, const GaussMatrix& b);
  static GaussMatrix block_diagonal(const GaussMatrix& a, const GaussMatrix& b);

  bool is_diagonal() const;

private:
  int n_ = 0;
  std::vector<GaussInt> a_;
};

struct GammaSet {
  int d = 0;
  std::vector<GaussMatrix> matrices;  // γ^1 .. γ^d
  int size() const { return matrices.empty() ? 0 : matrices.front().size(); }
  // Largest |entry| of γ^iγ^j + γ^jγ^i - 2δ^{ij} I over all pairs (exact).
  long long anticommutator_defect() const;
};

GammaSet gamma_matrices(int d);

// Jacobi polynomial value and derivative; requires α, β > -1 and x in [-1, 1].
JacobiValue jacobi(int n, double alpha, double beta, double x);

enum class Sign { plus = 1, minus = -1 };

struct SpinorEigenfunction {
  int d = 2, n = 0, l = 0;
  Sign sign = Sign::plus;
  double norm_const = 1.0;
  double eigenvalue = 1.0;  // sign (n + d/2)
  std::function<double(double)> radial_phi;
  std::function<double(double)> radial_psi;
};

// C_d(nℓ) normalizing ∫ (C^2/2)(φ^2 + ψ^2) sin^{d-1}θ dθ to 1.
double norm_constant(int d, int n, int l);
SpinorEigenfunction eigenfunction(int d, int n, int l, Sign sign = Sign::plus);

struct RadialResidual {
  double phi = 0.0;
  double psi = 0.0;
  double max() const { return phi > psi ? phi : psi; }
};

// Squared radial operator applied to φ (and to ψ, whose cos θ term has the opposite
// sign) plus λ^2; relative to the sup of each component on the grid.
RadialResidual radial_ode_residual(const SpinorEigenfunction& f, const std::vector<double>& theta,
                                   double lambda_squared_override = -1.0);

// Radial mass ∫ (C^2/2)(φ^2 + ψ^2) sin^{d-1}θ dθ.
double radial_mass(const SpinorEigenfunction& f);
// (∫ [(C^2/2)(φ^2 + ψ^2)]^{q/2} sin^{d-1}θ dθ)^{1/q}; q = ∞ by grid max.
double lq_radial_norm(const SpinorEigenfunction& f, double q);

struct GrowthRow {
  int n = 0;
  double norm = 0.0;
};

struct SoggeFit {
  int d = 2;
  double q = 2.0;
  double slope = 0.0;
  double target = 0.0;  // s(q) = (d-1)/2 - d/q
  bool below_threshold = false;
  std::vector<GrowthRow> rows;
};

// Slope of log lq_radial_norm against log(n + d/2) for ℓ = 0.
SoggeFit sogge_fit(int d, double q, const std::vector<int>& n_values, int workers = 1);

struct MomentFit {
  double slope = 0.0;
  double target = 0.0;  // αp - 2r - 2
  std::vector<GrowthRow> rows;
};

// ∫_0^1 (1-x)^r |P_n^{α,β}(x)|^p dx
double jacobi_moment(int n, double alpha, double beta, double p, double r);
// Rejects 2r >= αp - 2 + p/2 with the inequality in the message.
MomentFit jacobi_moment_fit(double alpha, double beta, double p, double r, const std::vector<int>& n_values);

struct SharpnessRow {
  Rational epsilon{0};  // d = 3 family parameter
  LebesgueExponent p, q;
  Rational gamma_w{0};
  Rational s_q{0};
  Rational gap{0};  // γ^W - s(q)
};

struct SharpnessReport {
  int d = 2;
  std::vector<SharpnessRow> rows;
  bool exact = false;  // d >= 4: s(q) = γ^W = (d+1)/(2(d-1))
  Rational limit_gap{0};
  std::string summary;
};

// s(q) = (d-1)/2 - d/q in exact arithmetic.
Rational sogge_exponent(int d, LebesgueExponent q);
SharpnessReport sharpness_report(int d);

}  // namespace wkblab
