#pragma once

#include <boost/rational.hpp>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace wkblab {

using Rational = boost::rational<long long>;

// A Lebesgue exponent in [1, ∞], stored through its reciprocal (∞ ↦ 0).
struct LebesgueExponent {
  Rational inverse{0};

  static LebesgueExponent finite(Rational p);
  static LebesgueExponent of(long long p) { return finite(Rational(p)); }
  static LebesgueExponent infinity() { return {}; }

  bool is_infinite() const { return inverse == Rational(0); }
  double value() const;  // +inf for ∞
  std::string str() const;
  friend bool operator==(const LebesgueExponent& a, const LebesgueExponent& b) { return a.inverse == b.inverse; }
};

enum class PairClass { wave, schrodinger };
std::string to_string(PairClass c);

struct AdmissiblePair {
  LebesgueExponent p, q;
  int d = 2;
  PairClass cls = PairClass::wave;
};

// Admissibility classes of (p, q, d) with the endpoint exclusions.
std::vector<PairClass> classify(LebesgueExponent p, LebesgueExponent q, int d);

Rational gamma_wave(LebesgueExponent p, LebesgueExponent q, int d);
Rational gamma_kg(LebesgueExponent p, LebesgueExponent q, int d);

struct ExponentReport {
  Rational gamma_w, gamma_kg, predicted_loss, kappa;
};

// Throws PreconditionError naming the violated inequality.
ExponentReport exponents(const AdmissiblePair& pair);

// κ = δ(1/2 - 1/q) - 1/p under 1/p <= τ(1/2 - 1/q), (p, q, τ) != (2, ∞, 1).
Rational tt_star_exponent(Rational delta, Rational tau, LebesgueExponent p, LebesgueExponent q);

// Wave endpoint for d >= 4: γ^W(2, 2(d-1)/(d-3)) and the target (d+1)/(2(d-1)).
Rational endpoint_gamma(int d);
Rational sharpness_target(int d);

// chi = 1 on [0, 1], 0 on [4, ∞); phi(μ) = chi(μ) - chi(4μ) is supported in (1/4, 4).
class DyadicPartition {
public:
  explicit DyadicPartition(int k_max);

  int k_max() const { return k_max_; }
  double chi(double lambda) const;
  double phi_tilde_lp(double lambda) const { return chi(lambda); }
  double phi(double mu) const;
  // phi_tilde_lp(λ) + Σ_{k=1..K} phi(2^{-2k} λ)
  double partial_sum(double lambda, int K) const;
  // Worst |identity - 1| on a log grid of λ in [0, 2^{2K-1}].
  double identity_defect(int points = 4001) const;

private:
  int k_max_;
};

DyadicPartition build_partition(int k_max);

enum class ModelKind { torus, sphere };
std::string to_string(ModelKind k);

// Torus (R/2πZ)^d sampled on N^d points; sphere S^d restricted to zonal functions
// sampled on Gauss–Jacobi nodes in cos θ. Both use the normalized measure.
struct SpectralModel {
  ModelKind kind = ModelKind::torus;
  int dim = 2;
  int grid = 16;     // torus: N per axis; sphere: number of θ nodes
  int degrees = 0;   // sphere: zonal degrees 0..degrees-1

  static SpectralModel torus(int d, int n);
  static SpectralModel sphere(int d, int degrees, int nodes);

  std::size_t modes() const;   // torus: N^d frequencies in FFT order; sphere: degrees
  std::size_t points() const;
  double eigenvalue(std::size_t mode) const;
  std::vector<double> weights() const;
  // torus: integer frequency of a mode, per axis
  std::vector<int> frequency(std::size_t mode) const;
  std::vector<double> sphere_nodes() const;  // cos θ
};

using cplx_vec = std::vector<std::complex<double>>;

// Multiplies each coefficient by e^{it sqrt(m^2 + λ)} and synthesizes point values.
cplx_vec spectral_propagate(const SpectralModel& model, double m, double t, const cplx_vec& coefficients);
// sqrt(m^2 + λ) per mode, and the same propagation with it precomputed.
std::vector<double> dispersion_relation(const SpectralModel& model, double m);
cplx_vec spectral_propagate(const SpectralModel& model, const std::vector<double>& omega, double t,
                            const cplx_vec& coefficients);

// Normalized zonal harmonic of degree k on S^d at cos θ = x.
double zonal_harmonic(int d, int k, double x);

// (Σ w |u|^q)^{1/q}, or max |u| for q = ∞.
double lebesgue_norm(const cplx_vec& u, const std::vector<double>& weights, double q);
// Trapezoid weights on an increasing, possibly non-uniform grid.
std::vector<double> trapezoid_weights(const std::vector<double>& t);
// (Σ_j w_j n_j^p)^{1/p} with n_j = ||u(t_j)||_q; p = ∞ via max.
double time_norm(const std::vector<double>& slice_norms, const std::vector<double>& t_weights, double p);
// (∫_I (∫ |u|^q dμ)^{p/q} dt)^{1/p} on samples[t][x].
double mixed_norm(const std::vector<cplx_vec>& samples, const std::vector<double>& t_weights,
                  const std::vector<double>& x_weights, double p, double q);

enum class TrialKind { random, coherent, knapp, eigenfunction };
std::string to_string(TrialKind k);

struct TrialFamily {
  int random_trials = 16;
  bool coherent = true;
  bool knapp = true;
  bool eigenfunction = false;
  std::uint64_t seed = 1;
};

struct LossFitOptions {
  int k_min = 3;
  int k_max = 8;
  double m = 0.0;
  double T = 1.0;
  int time_steps = 64;      // t_j = T (j/M)^grading, j = 0..M
  double grading = 3.0;
  int oversample_log2 = 3;  // torus N = 2^{k + oversample_log2}
  int trend_shells = 4;     // residual trend over the last shells
  TrialFamily family;
  int workers = 1;
};

struct TrialResult {
  TrialKind kind = TrialKind::random;
  int index = 0;
  double quotient = 0.0;
};

struct ShellQuotient {
  int k = 0;
  double quotient = 0.0;  // max over trials
  TrialKind best_kind = TrialKind::random;
  int best_index = 0;
  std::vector<TrialResult> trials;
};

struct LossFit {
  double slope = 0.0;
  double intercept = 0.0;
  double predicted_loss = 0.0;
  double residual_trend = 0.0;  // slope of log2 Q_k - predicted k over the last shells
  std::vector<ShellQuotient> shells;
};

// Shell data per the partition: coefficients phi(2^{-2k} λ) times the trial pattern.
cplx_vec trial_coefficients(const SpectralModel& model, const DyadicPartition& partition, int k, TrialKind kind,
                            int index, std::uint64_t seed);

// Regresses log2 (||e^{itP^{1/2}} u_k||_{L^p L^q} / ||u_k||_{L^2}) on k.
LossFit loss_exponent_fit(ModelKind model, int d, const AdmissiblePair& pair, const LossFitOptions& options);

}  // namespace wkblab
