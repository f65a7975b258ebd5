#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "wkblab/hamilton_jacobi.hpp"
#include "wkblab/wkb.hpp"

namespace wkblab {

enum class Window { wave, kg };
std::string to_string(Window w);

struct KernelRequest {
  const HamiltonianSystem* system = nullptr;
  double t0 = 0.0;
  double t = 0.0;
  Eigen::VectorXd x, y;
  Window window = Window::wave;
};

// wave: |t| <= t0; kg: |t| <= sqrt(h) t0.
void validate_window(Window window, double h, double t0, double t);

struct QuadratureSettings {
  double node_budget = 1e8;
  int min_nodes = 32;
  double nodes_per_wavelength = 10.0;
  double refinement = 1.0;      // multiplies the per-axis node count
  double support_factor = 1.5;  // K = [a/f, b f]
  bool allow_3d = false;
};

struct KernelResolution {
  double radius = 0.0;              // ξ box is [-radius, radius]^d
  double max_phase_gradient = 0.0;  // bound on |∇_ξ (S - y·ξ)|
  double group_velocity = 0.0;      // max |∇_ξ q| at x
  int nodes_per_axis = 0;
};

// Applies the oscillation criterion; throws ResolutionRefused above the budget.
KernelResolution kernel_resolution(const HamiltonianSystem& sys, double t, const Eigen::VectorXd& x,
                                   double max_offset, const QuadratureSettings& q);

// (2πh)^{-d} ∫ e^{i(S - y·ξ)/h} Σ_r h^r a_r dξ by tensor Gauss–Legendre, evaluating the
// phase and the amplitudes at every node.
cplx kernel_eval(const KernelRequest& req, const PhaseField& phase, const std::vector<Amplitude>& amplitudes,
                 const QuadratureSettings& q = {});

enum class PhaseSampling { automatic, flat_closed_form, interpolated, direct };
std::string to_string(PhaseSampling s);

struct SweepOptions {
  QuadratureSettings quadrature;
  double max_offset = 0.0;  // largest |x - y| that eval() will be asked for
  PhaseSampling sampling = PhaseSampling::automatic;
  InitialAmplitude a0_init;  // empty: phi(p_{0,0})
  LowerOrderSymbols symbols;
  double coarse_spacing = 0.04;
  double interpolation_tolerance = 1e-5;
  int check_nodes = 24;
  int max_refinements = 2;
  int workers = 1;
};

// The leading-order kernel y ↦ L_h(t, x, y) at fixed (h, t, x). The integrand is
// sampled once on the tensor grid; each eval() is a separable sum.
class KernelSweep {
public:
  KernelSweep(const HamiltonianSystem& sys, double t, Eigen::VectorXd x, const SweepOptions& options);

  cplx eval(const Eigen::VectorXd& y) const;

  int dim() const { return d_; }
  double h() const { return h_; }
  double t() const { return t_; }
  const Eigen::VectorXd& x() const { return x_; }
  const KernelResolution& resolution() const { return res_; }
  PhaseSampling sampling() const { return sampling_; }
  double interpolation_error() const { return interp_error_; }
  double coarse_spacing() const { return coarse_spacing_; }
  std::size_t active_nodes() const { return active_; }

private:
  void sample(const HamiltonianSystem& sys, const SweepOptions& options);

  int d_;
  double h_, t_;
  Eigen::VectorXd x_;
  KernelResolution res_;
  PhaseSampling sampling_;
  double max_offset_;
  double interp_error_ = 0.0;
  double coarse_spacing_ = 0.0;
  std::size_t active_ = 0;
  std::vector<double> xi_;   // 1-d nodes
  std::vector<cplx> F_;      // w e^{iS/h} a on the tensor grid, row-major
  std::vector<int> row_lo_, row_hi_;  // active column range per leading index (d >= 2)
};

struct KernelMaximum {
  Eigen::VectorXd x, y;
  cplx L{0.0, 0.0};
  double abs_L = 0.0;
};

// max over y = x + ρ ω, ρ in [0, 1.2 t max|∇_ξ q|] with spacing <= `spacing`, followed by a
// golden-section refinement in ρ around the best grid point.
KernelMaximum maximize_over_y(const KernelSweep& sweep, int directions, double spacing, int workers = 1);

// Φ̃(η) = sqrt(|η|^2 + h^2 m~^2): Hessian and its eigenvalues (ascending).
Eigen::MatrixXd kg_phase_hessian(const MassParam& mass, double h, const Eigen::VectorXd& eta);
Eigen::VectorXd hessian_spectrum(const MassParam& mass, double h, const Eigen::VectorXd& eta);

double reduced_phase_second_derivative(const MassParam& mass, double h, const Eigen::VectorXd& zeta,
                                       double eta_j);
// Oracle: eliminate ζ by Newton on ∇_ζ Φ̃ = -c and difference F twice (Richardson).
double reduced_phase_second_derivative_numeric(const MassParam& mass, double h, const Eigen::VectorXd& zeta,
                                               double eta_j, double delta = 4e-3);

struct PhaseFunction {
  int dim = 1;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
};
using RealFunction = std::function<double(const Eigen::VectorXd&)>;

struct StationaryPhaseResult {
  bool stationary = false;
  std::string regime;  // "stationary" or the reason it is not
  Eigen::VectorXd x_star;
  int signature = 0;
  double det_hessian = 0.0;
  cplx leading{0.0, 0.0};
};

// Leading term λ^{-n/2} e^{iλΦ(x*)} |det ∇²Φ(x*)|^{-1/2} (2π)^{n/2} e^{iπσ/4} a(x*).
StationaryPhaseResult stationary_phase_reference(const PhaseFunction& phase, const RealFunction& amplitude,
                                                 double lambda, const Eigen::VectorXd& start,
                                                 const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi);

// ∫_box e^{iλΦ} a by composite tensor Gauss–Legendre with panels sized to the phase.
cplx oscillatory_quadrature(const PhaseFunction& phase, const RealFunction& amplitude, double lambda,
                            const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi,
                            double resolution = 10.0);

struct StationaryPhaseCheck {
  std::vector<double> lambdas;
  std::vector<double> errors;
  double slope = 0.0;
  double expected_slope = 0.0;
  double constant = 0.0;  // fitted at the smallest λ
  bool pass = false;
};
StationaryPhaseCheck stationary_phase_error_check(const PhaseFunction& phase, const RealFunction& amplitude,
                                                  const std::vector<double>& lambdas, const Eigen::VectorXd& start,
                                                  const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi);

struct NonStationaryCheck {
  std::vector<double> lambdas;
  std::vector<double> magnitudes;
  std::vector<double> local_slopes;
  bool pass = false;  // final local slope below -max_power and slopes steepening
};
NonStationaryCheck non_stationary_decay_check(const PhaseFunction& phase, const RealFunction& amplitude,
                                              const std::vector<double>& lambdas, const Eigen::VectorXd& box_lo,
                                              const Eigen::VectorXd& box_hi, double max_power = 4.0);

struct OneDFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;  // used for the amplitude variation
};

struct VanDerCorputResult {
  bool premise_ok = true;
  double premise_violation_at = 0.0;
  double min_derivative = 0.0;
  std::vector<double> lambdas;
  std::vector<double> integrals;     // |∫ e^{iλφ} ψ|
  std::vector<double> ratios;        // |∫| / ((c_k λ)^{-1/k} V(ψ))
  double fitted_constant = 0.0;      // ratio at the smallest λ
  double max_constant = 0.0;
  bool holds = false;
};

// `kth_derivative` is φ^{(k)}; `phase_derivative` is φ' (sets quadrature panels).
VanDerCorputResult van_der_corput_check(const std::function<double(double)>& phase,
                                        const std::function<double(double)>& phase_derivative,
                                        const std::function<double(double)>& kth_derivative, int k,
                                        double c_k, const OneDFunction& amplitude, double a, double b,
                                        const std::vector<double>& lambdas, double slack = 0.5);

// Reduced Klein–Gordon phase in d = 2 with ζ eliminated against ∇_ζ Φ̃ = c_ζ:
// F(η) = c_η η + Φ̃(ζ(η), η) - c_ζ ζ(η) = c_η η + sqrt(1 - c_ζ^2) sqrt(η^2 + h^2 m~^2).
double reduced_phase_value(const MassParam& mass, double h, double c_zeta, double c_eta, double eta);

struct DecaySample {
  double h = 0.0, t = 0.0;
  Eigen::VectorXd x, y;
  cplx L{0.0, 0.0};
  double abs_L = 0.0;
  int nodes_per_axis = 0;
  double interpolation_error = 0.0;
};

struct DecayFit {
  double alpha = 0.0;
  double beta = 0.0;
  double constant = 0.0;
  double residual = 0.0;
  bool reliable = true;
  std::vector<DecaySample> samples;
};

// log|L| = c - α log h - β log(1 + t/h) by linear least squares.
DecayFit fit_decay(const std::vector<DecaySample>& samples);

// `count` geometric times in the window [4h, t0] (wave) or [4h, sqrt(h) t0] (kg).
std::vector<double> window_times(Window window, double h, double t0, int count);

struct DecayFitRequest {
  MetricChart chart = MetricChart::flat(2);
  MassParam mass;
  CutoffLibrary library = CutoffLibrary::wave();
  Window window = Window::wave;
  double t0 = 0.5;
  std::vector<double> h_values;
  std::vector<std::vector<double>> t_values;  // per h
  std::vector<Eigen::VectorXd> x_points;
  int directions = 8;
  double spacing_over_h = 0.25;
  SweepOptions sweep;
};

DecayFit decay_fit(const DecayFitRequest& request);

}  // namespace wkblab
