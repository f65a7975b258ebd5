#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "wkblab/geometry.hpp"

namespace wkblab {

// q = psi(p) and its derivatives up to second order at one phase-space point.
struct SymbolJet {
  double p = 0.0;
  double q = 0.0;
  double q_x[kMaxFlowDim];
  double q_xi[kMaxFlowDim];
  double q_xx[kMaxFlowDim][kMaxFlowDim];
  double q_xxi[kMaxFlowDim][kMaxFlowDim];  // [k][i] = ∂_{x_k} ∂_{ξ_i} q
  double q_xixi[kMaxFlowDim][kMaxFlowDim];
};

// Lower order symbol q1(x, ξ), complex valued.
using SymbolFunction =
    std::function<std::complex<double>(const Eigen::VectorXd& x, const Eigen::VectorXd& xi)>;

// The Hamiltonian q = psi(p_{m~,h}) on a chart.
class HamiltonianSystem {
public:
  HamiltonianSystem(MetricChart chart, MassParam mass, CutoffLibrary library, double h);

  int dim() const { return chart_.dim(); }
  const MetricChart& chart() const { return chart_; }
  const MassParam& mass() const { return mass_; }
  const CutoffLibrary& library() const { return library_; }
  double h() const { return h_; }
  double hm2() const { return hm2_; }

  void jet(const double* x, const double* xi, SymbolJet& out) const;
  double q(const Eigen::VectorXd& x, const Eigen::VectorXd& xi) const;
  Eigen::VectorXd grad_xi_q(const Eigen::VectorXd& x, const Eigen::VectorXd& xi) const;
  // p_{0,0}(x, ξ) = ξ^T G(x) ξ
  double p00(const Eigen::VectorXd& x, const Eigen::VectorXd& xi) const;

private:
  MetricChart chart_;
  MassParam mass_;
  CutoffLibrary library_;
  double h_;
  double hm2_;
};

struct FlowState {
  Eigen::VectorXd X;
  Eigen::VectorXd Xi;
  double action = 0.0;
};

struct FlowOptions {
  // 0 selects min(1e-3, |t|/64).
  double step = 0.0;
  // Number of variational columns: 0, d (derivatives in y) or 2d (in y and ξ).
  int jacobian_columns = 0;
  // Integrate ∫ f ds along the trajectory (needs jacobian_columns >= d).
  bool track_amplitude = false;
  const SymbolFunction* q1 = nullptr;
  double drift_tolerance = 1e-8;
  int max_halvings = 4;
};

struct FlowTrajectory {
  FlowState state;
  // rows 0..d-1: ∂X, rows d..2d-1: ∂Ξ; columns: ∂/∂y then ∂/∂ξ
  Eigen::MatrixXd jacobian;
  std::complex<double> log_amplitude{0.0, 0.0};
  double step = 0.0;
  int steps = 0;
  double drift = 0.0;
};

FlowTrajectory integrate_flow(const HamiltonianSystem& sys, double t, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& xi, const FlowOptions& options);

FlowState hamiltonian_flow(const HamiltonianSystem& sys, double t, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& xi, double step = 0.0);

// Difference between the flow at step and at step/2 (max over X, Ξ, action).
double richardson_estimate(const HamiltonianSystem& sys, double t, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& xi, double step = 0.0);

struct CharacteristicSolution {
  Eigen::VectorXd foot;  // y with X(t; y, ξ) = x
  FlowTrajectory trajectory;
  int iterations = 0;
  double residual = 0.0;
};

struct NewtonOptions {
  int max_iterations = 25;
  double tolerance = 1e-12;
  int jacobian_columns = -1;  // -1 selects d
  bool track_amplitude = false;
  const SymbolFunction* q1 = nullptr;
  // Starting point; defaults to y = x.
  const Eigen::VectorXd* initial_guess = nullptr;
  double step = 0.0;  // flow step, 0 for the default
};

// Damped Newton on y ↦ X(t; y, ξ) - x starting from y = x.
CharacteristicSolution solve_characteristic(const HamiltonianSystem& sys, double t,
                                            const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                                            const NewtonOptions& options = {});

struct PhaseSample {
  double S = 0.0;
  Eigen::VectorXd grad_x;   // ∇_x S
  Eigen::MatrixXd hess_x;   // ∇²_x S
  Eigen::MatrixXd mixed;    // (i, j) = ∂_{x_i} ∂_{ξ_j} S
  Eigen::VectorXd foot;     // Z(0, t, x, ξ)
};

class PhaseField {
public:
  PhaseField(HamiltonianSystem system, double t_max);

  const HamiltonianSystem& system() const { return system_; }
  double t_max() const { return t_max_; }
  int dim() const { return system_.dim(); }

  PhaseSample eval(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& xi) const;

private:
  HamiltonianSystem system_;
  double t_max_;
};

PhaseSample phase_eval(const PhaseField& field, double t, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& xi);

// S for the flat chart: x·ξ + t psi(|ξ|^2 + h^2 m~^2).
double flat_phase(const HamiltonianSystem& sys, double t, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& xi);

struct RemainderFit {
  bool exact = false;
  double slope = 0.0;     // pooled over all h
  double constant = 0.0;  // pooled
  std::vector<double> h_values;
  std::vector<double> slopes;     // per h
  std::vector<double> constants;  // per h
  double constant_ratio = 1.0;    // max / min over h
  // sup residual per (h, t)
  std::vector<std::vector<double>> sup_residual;
  std::vector<double> t_values;
};

// Fits log sup_{x,ξ} |S - x·ξ - t psi(p)(x, ξ)| against log |t|, for each field.
RemainderFit remainder_bound_check(const std::vector<PhaseField>& fields,
                                   const std::vector<double>& t_values,
                                   const std::vector<Eigen::VectorXd>& x_grid,
                                   const std::vector<Eigen::VectorXd>& xi_grid);

// Z(s, t, x, ξ): position at time s of the bicharacteristic through x at time t.
Eigen::VectorXd transport_flow(const PhaseField& field, double s, double t, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& xi);

// Largest t = t_cap 2^{-k} with ||∇_x∇_ξ S - I||_2 <= 1/2 and Newton success on the grid.
double certify_t0(const HamiltonianSystem& sys, const std::vector<Eigen::VectorXd>& x_grid,
                  const std::vector<Eigen::VectorXd>& xi_grid, double t_cap, int max_halvings = 12);

// Covectors on the annulus r_lo <= |ξ| <= r_hi: n_r radii times n_dir directions.
std::vector<Eigen::VectorXd> annulus_grid(int dim, double r_lo, double r_hi, int n_r, int n_dir);

}  // namespace wkblab
