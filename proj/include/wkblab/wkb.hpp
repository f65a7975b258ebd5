#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <functional>
#include <vector>

#include "wkblab/hamilton_jacobi.hpp"

namespace wkblab {

using cplx = std::complex<double>;

struct LowerOrderSymbols {
  SymbolFunction q1;  // empty means q1 = 0
  bool zero() const { return !q1; }
};

using InitialAmplitude = std::function<cplx(const Eigen::VectorXd& x, const Eigen::VectorXd& xi)>;

// a(x, ξ) = phi(p_{0,0}(x, ξ)).
InitialAmplitude cutoff_initial_amplitude(const HamiltonianSystem& sys);

struct Amplitude {
  int order = 0;
  std::function<cplx(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& xi)> eval;
  std::array<double, 2> support_box{0.0, 0.0};  // supp phi in λ = p_{0,0}
  std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& xi)> p00;
};

cplx f_coefficient(const PhaseField& field, const LowerOrderSymbols& symbols, double t,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& xi);

// Reference evaluation: composite Simpson over s in [0, t] with `nodes` points.
cplx leading_amplitude(const PhaseField& field, const LowerOrderSymbols& symbols,
                       const InitialAmplitude& a0_init, double t, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& xi, int nodes = 33);

// Same quantity with ∫ f integrated as an extra component of the characteristic ODE.
cplx leading_amplitude_characteristic(const PhaseField& field, const LowerOrderSymbols& symbols,
                                      const InitialAmplitude& a0_init, double t,
                                      const Eigen::VectorXd& x, const Eigen::VectorXd& xi);

Amplitude make_leading_amplitude(const PhaseField& field, const LowerOrderSymbols& symbols,
                                 InitialAmplitude a0_init, bool reference_quadrature = false);

// ξ-derivatives of q = psi(p) up to fourth order at (x, η), as flat tensors.
struct SymbolXiTensors {
  int d = 0;
  double q = 0.0;
  std::vector<double> d1, d2, d3, d4;  // index i, i*d+j, ...
};
SymbolXiTensors symbol_xi_derivatives(const HamiltonianSystem& sys, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& eta);

// Source g_1 = i[(psi ◁ a0)_2 + (q1 ◁ a0)_1] at (s, z, ξ).
cplx first_corrector_source(const PhaseField& field, const LowerOrderSymbols& symbols,
                            const Amplitude& a0, double s, const Eigen::VectorXd& z,
                            const Eigen::VectorXd& xi);

cplx first_corrector(const PhaseField& field, const LowerOrderSymbols& symbols, const Amplitude& a0,
                     double t, const Eigen::VectorXd& x, const Eigen::VectorXd& xi, int nodes = 33);

Amplitude make_first_corrector(const PhaseField& field, const LowerOrderSymbols& symbols, Amplitude a0);

struct SupportReport {
  bool ok = true;
  double worst_value = 0.0;
  double worst_t = 0.0;
  Eigen::VectorXd worst_x, worst_xi;
  double worst_lambda = 0.0;
  int outside_samples = 0;
};

// True iff |amplitude| <= 1e-10 wherever p_{0,0}(x, ξ) lies outside K = [a/factor, b*factor].
SupportReport support_check(const Amplitude& amplitude, const std::vector<double>& t_grid,
                            const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& samples,
                            double factor = 1.5);

}  // namespace wkblab
