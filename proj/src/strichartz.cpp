#include "wkblab/strichartz.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "wkblab/errors.hpp"
#include "wkblab/fit.hpp"
#include "wkblab/geometry.hpp"
#include "wkblab/parallel.hpp"
#include "wkblab/quadrature.hpp"
#include "wkblab/rng.hpp"

namespace wkblab {

namespace {

const Rational kHalf(1, 2);

std::string show(const Rational& r) {
  std::ostringstream os;
  os << r.numerator();
  if (r.denominator() != 1) os << "/" << r.denominator();
  return os.str();
}

void require_ge2(LebesgueExponent p, LebesgueExponent q) {
  if (p.inverse > kHalf || q.inverse > kHalf || p.inverse < Rational(0) || q.inverse < Rational(0))
    throw PreconditionError("classify needs p >= 2 and q >= 2");
}

bool is_point(LebesgueExponent p, LebesgueExponent q, int d, long long p0, int d0) {
  return p.inverse == Rational(1, p0) && q.is_infinite() && d == d0;
}

// In-place backward FFTW plans, one per (d, N).
fftw_plan torus_plan(int d, int n) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find({d, n});
  if (it != plans.end()) return it->second;
  std::vector<int> dims(d, n);
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= std::size_t(n);
  fftw_complex* buf = fftw_alloc_complex(total);
  fftw_plan plan = fftw_plan_dft(d, dims.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_free(buf);
  plans[{d, n}] = plan;
  return plan;
}

// Normalized zonal harmonics Z_0..Z_{K-1} at x by the Jacobi recurrence (α = β = a).
void zonal_table(int d, int K, double x, double* out) {
  const double a = 0.5 * (d - 2);
  auto log_h = [a](int n) {
    return (2.0 * a + 1.0) * std::log(2.0) + 2.0 * std::lgamma(n + a + 1.0) - std::log(2.0 * n + 2.0 * a + 1.0) -
           std::lgamma(n + 2.0 * a + 1.0) - std::lgamma(n + 1.0);
  };
  const double log_h0 = log_h(0);
  double pm2 = 0.0, pm1 = 0.0;
  for (int n = 0; n < K; ++n) {
    double value;
    if (n == 0) {
      value = 1.0;
    } else if (n == 1) {
      value = (a + 1.0) * x;
    } else {
      const double m = n - 1;
      const double s = 2.0 * m + 2.0 * a;
      value = ((s + 1.0) * (s + 2.0) * s * x * pm1 - 2.0 * (m + a) * (m + a) * (s + 2.0) * pm2) /
              (2.0 * (m + 1.0) * (m + 2.0 * a + 1.0) * s);
    }
    pm2 = pm1;
    pm1 = value;
    out[n] = value * std::exp(-0.5 * (log_h(n) - log_h0));
  }
}

}  // namespace

LebesgueExponent LebesgueExponent::finite(Rational p) {
  if (p < Rational(1)) throw PreconditionError("Lebesgue exponent must be >= 1");
  return LebesgueExponent{Rational(1) / p};
}

double LebesgueExponent::value() const {
  if (is_infinite()) return std::numeric_limits<double>::infinity();
  return double(inverse.denominator()) / double(inverse.numerator());
}

std::string LebesgueExponent::str() const { return is_infinite() ? "inf" : show(Rational(1) / inverse); }

std::string to_string(PairClass c) { return c == PairClass::wave ? "wave" : "schrodinger"; }
std::string to_string(ModelKind k) { return k == ModelKind::torus ? "torus" : "sphere"; }
std::string to_string(TrialKind k) {
  switch (k) {
    case TrialKind::random: return "random";
    case TrialKind::coherent: return "coherent";
    case TrialKind::knapp: return "knapp";
    case TrialKind::eigenfunction: return "eigenfunction";
  }
  return "unknown";
}

std::vector<PairClass> classify(LebesgueExponent p, LebesgueExponent q, int d) {
  require_ge2(p, q);
  if (d < 2) throw PreconditionError("classify needs d >= 2");
  std::vector<PairClass> out;
  if (2 * p.inverse + (d - 1) * q.inverse <= Rational(d - 1, 2) && !is_point(p, q, d, 2, 3))
    out.push_back(PairClass::wave);
  if (2 * p.inverse + d * q.inverse <= Rational(d, 2) && !is_point(p, q, d, 2, 2))
    out.push_back(PairClass::schrodinger);
  return out;
}

Rational gamma_wave(LebesgueExponent p, LebesgueExponent q, int d) { return d * (kHalf - q.inverse) - p.inverse; }

Rational gamma_kg(LebesgueExponent p, LebesgueExponent q, int d) {
  return (d + 1) * (kHalf - q.inverse) - p.inverse;
}

ExponentReport exponents(const AdmissiblePair& pair) {
  const auto& [p, q, d, cls] = pair;
  const auto classes = classify(p, q, d);
  if (std::find(classes.begin(), classes.end(), cls) == classes.end()) {
    std::ostringstream os;
    os << "(p, q, d) = (" << p.str() << ", " << q.str() << ", " << d << ") is not " << to_string(cls)
       << " admissible: ";
    if (cls == PairClass::wave) {
      if (is_point(p, q, d, 2, 3))
        os << "endpoint (2, inf, 3) is excluded";
      else
        os << "2/p + (d-1)/q = " << show(2 * p.inverse + (d - 1) * q.inverse) << " > (d-1)/2 = " << show(Rational(d - 1, 2));
    } else {
      if (is_point(p, q, d, 2, 2))
        os << "endpoint (2, inf, 2) is excluded";
      else
        os << "2/p + d/q = " << show(2 * p.inverse + d * q.inverse) << " > d/2 = " << show(Rational(d, 2));
    }
    throw PreconditionError(os.str());
  }
  ExponentReport r;
  r.gamma_w = gamma_wave(p, q, d);
  r.gamma_kg = gamma_kg(p, q, d);
  if (cls == PairClass::wave) {
    r.predicted_loss = r.gamma_w;
    r.kappa = tt_star_exponent(Rational(d), Rational(d - 1, 2), p, q);
  } else {
    r.predicted_loss = r.gamma_kg + p.inverse / 2;
    r.kappa = tt_star_exponent(Rational(d + 1), Rational(d, 2), p, q);
  }
  return r;
}

Rational tt_star_exponent(Rational delta, Rational tau, LebesgueExponent p, LebesgueExponent q) {
  if (p.inverse > tau * (kHalf - q.inverse)) {
    std::ostringstream os;
    os << "TT* bound needs 1/p <= τ(1/2 - 1/q): 1/p = " << show(p.inverse) << ", τ(1/2 - 1/q) = "
       << show(tau * (kHalf - q.inverse));
    throw PreconditionError(os.str());
  }
  if (p.inverse == kHalf && q.is_infinite() && tau == Rational(1))
    throw PreconditionError("TT* bound excludes (p, q, τ) = (2, inf, 1)");
  return delta * (kHalf - q.inverse) - p.inverse;
}

Rational endpoint_gamma(int d) {
  if (d < 4) throw PreconditionError("the wave endpoint (2, 2(d-1)/(d-3)) needs d >= 4");
  return gamma_wave(LebesgueExponent::of(2), LebesgueExponent::finite(Rational(2 * (d - 1), d - 3)), d);
}

Rational sharpness_target(int d) { return Rational(d + 1, 2 * (d - 1)); }

DyadicPartition::DyadicPartition(int k_max) : k_max_(k_max) {
  if (k_max < 1) throw PreconditionError("partition needs K_max >= 1");
}

double DyadicPartition::chi(double lambda) const {
  if (lambda <= 1.0) return 1.0;
  if (lambda >= 4.0) return 0.0;
  return 1.0 - smooth_step((lambda - 1.0) / 3.0);
}

double DyadicPartition::phi(double mu) const { return chi(mu) - chi(4.0 * mu); }

double DyadicPartition::partial_sum(double lambda, int K) const {
  double s = phi_tilde_lp(lambda);
  for (int k = 1; k <= K; ++k) s += phi(std::ldexp(lambda, -2 * k));
  return s;
}

double DyadicPartition::identity_defect(int points) const {
  double worst = std::abs(partial_sum(0.0, k_max_) - 1.0);
  const double lo = -6.0, hi = 2.0 * k_max_ - 1.0;
  for (int i = 0; i < points; ++i) {
    const double lambda = std::exp2(lo + (hi - lo) * i / (points - 1.0));
    worst = std::max(worst, std::abs(partial_sum(lambda, k_max_) - 1.0));
  }
  return worst;
}

DyadicPartition build_partition(int k_max) {
  DyadicPartition part(k_max);
  const double defect = part.identity_defect();
  if (defect > 1e-10) throw std::logic_error("dyadic partition identity fails by " + std::to_string(defect));
  return part;
}

SpectralModel SpectralModel::torus(int d, int n) {
  if (d < 1 || n < 2 || n % 2) throw PreconditionError("torus model needs d >= 1 and an even N >= 2");
  return {ModelKind::torus, d, n, 0};
}

SpectralModel SpectralModel::sphere(int d, int degrees, int nodes) {
  if (d < 2 || degrees < 1 || nodes < degrees) throw PreconditionError("sphere model needs d >= 2, nodes >= degrees >= 1");
  return {ModelKind::sphere, d, nodes, degrees};
}

std::size_t SpectralModel::modes() const {
  if (kind == ModelKind::sphere) return std::size_t(degrees);
  std::size_t total = 1;
  for (int k = 0; k < dim; ++k) total *= std::size_t(grid);
  return total;
}

std::size_t SpectralModel::points() const { return kind == ModelKind::sphere ? std::size_t(grid) : modes(); }

std::vector<int> SpectralModel::frequency(std::size_t mode) const {
  std::vector<int> f(dim);
  for (int k = dim - 1; k >= 0; --k) {
    const int j = int(mode % std::size_t(grid));
    mode /= std::size_t(grid);
    f[k] = j < grid / 2 ? j : j - grid;
  }
  return f;
}

double SpectralModel::eigenvalue(std::size_t mode) const {
  if (kind == ModelKind::sphere) return double(mode) * double(mode + dim - 1);
  double s = 0.0;
  for (int f : frequency(mode)) s += double(f) * f;
  return s;
}

std::vector<double> SpectralModel::weights() const {
  if (kind == ModelKind::torus) return std::vector<double>(points(), 1.0 / double(points()));
  const double a = 0.5 * (dim - 2);
  std::vector<double> w = gauss_jacobi(grid, a, a).weights;
  double s = 0.0;
  for (double v : w) s += v;
  for (double& v : w) v /= s;
  return w;
}

std::vector<double> SpectralModel::sphere_nodes() const {
  const double a = 0.5 * (dim - 2);
  return gauss_jacobi(grid, a, a).nodes;
}

double zonal_harmonic(int d, int k, double x) {
  if (d < 2 || k < 0) throw PreconditionError("zonal harmonic needs d >= 2 and k >= 0");
  std::vector<double> z(k + 1);
  zonal_table(d, k + 1, x, z.data());
  return z[k];
}

std::vector<double> dispersion_relation(const SpectralModel& model, double m) {
  const std::size_t M = model.modes();
  std::vector<double> omega(M);
  if (model.kind == ModelKind::sphere) {
    for (std::size_t k = 0; k < M; ++k) omega[k] = std::sqrt(m * m + model.eigenvalue(k));
    return omega;
  }
  const int n = model.grid;
  std::vector<double> sq(n);
  for (int j = 0; j < n; ++j) {
    const double f = j < n / 2 ? j : j - n;
    sq[j] = f * f;
  }
  for (std::size_t i = 0; i < M; ++i) {
    std::size_t r = i;
    double lam = 0.0;
    for (int k = 0; k < model.dim; ++k) {
      lam += sq[r % std::size_t(n)];
      r /= std::size_t(n);
    }
    omega[i] = std::sqrt(m * m + lam);
  }
  return omega;
}

cplx_vec spectral_propagate(const SpectralModel& model, const std::vector<double>& omega, double t,
                            const cplx_vec& c) {
  if (c.size() != model.modes() || omega.size() != c.size())
    throw PreconditionError("coefficient count does not match the model");
  if (model.kind == ModelKind::torus) {
    const std::size_t total = c.size();
    fftw_complex* buf = fftw_alloc_complex(total);
    for (std::size_t i = 0; i < total; ++i) {
      if (c[i] == std::complex<double>(0.0, 0.0)) {
        buf[i][0] = buf[i][1] = 0.0;
        continue;
      }
      const std::complex<double> v = c[i] * std::polar(1.0, t * omega[i]);
      buf[i][0] = v.real();
      buf[i][1] = v.imag();
    }
    fftw_execute_dft(torus_plan(model.dim, model.grid), buf, buf);
    cplx_vec u(total);
    for (std::size_t i = 0; i < total; ++i) u[i] = {buf[i][0], buf[i][1]};
    fftw_free(buf);
    return u;
  }
  const int K = model.degrees;
  cplx_vec phased(K);
  for (int k = 0; k < K; ++k) phased[k] = c[k] * std::polar(1.0, t * omega[k]);
  const std::vector<double> x = model.sphere_nodes();
  cplx_vec u(x.size());
  std::vector<double> z(K);
  for (std::size_t j = 0; j < x.size(); ++j) {
    zonal_table(model.dim, K, x[j], z.data());
    std::complex<double> s{0.0, 0.0};
    for (int k = 0; k < K; ++k) s += phased[k] * z[k];
    u[j] = s;
  }
  return u;
}

cplx_vec spectral_propagate(const SpectralModel& model, double m, double t, const cplx_vec& c) {
  return spectral_propagate(model, dispersion_relation(model, m), t, c);
}

double lebesgue_norm(const cplx_vec& u, const std::vector<double>& w, double q) {
  if (u.empty() || u.size() != w.size()) throw PreconditionError("norm needs matching nonempty samples and weights");
  if (std::isinf(q)) {
    double mx = 0.0;
    for (const auto& v : u) mx = std::max(mx, std::abs(v));
    return mx;
  }
  std::vector<double> terms(u.size());
  const double half = 0.5 * q;
  const int ih = int(half);
  if (double(ih) == half && ih >= 1 && ih <= 8) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double a = std::norm(u[i]);
      double v = a;
      for (int k = 1; k < ih; ++k) v *= a;
      terms[i] = w[i] * v;
    }
  } else {
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double a = std::norm(u[i]);
      terms[i] = a > 0.0 ? w[i] * std::exp(half * std::log(a)) : 0.0;
    }
  }
  return std::pow(pairwise_sum(terms.data(), terms.size()), 1.0 / q);
}

std::vector<double> trapezoid_weights(const std::vector<double>& t) {
  if (t.empty()) throw PreconditionError("time grid is empty");
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t j = 0; j + 1 < t.size(); ++j) {
    const double dt = t[j + 1] - t[j];
    if (!(dt > 0.0)) throw PreconditionError("time grid must be increasing");
    w[j] += 0.5 * dt;
    w[j + 1] += 0.5 * dt;
  }
  return w;
}

double time_norm(const std::vector<double>& n, const std::vector<double>& w, double p) {
  if (n.empty() || n.size() != w.size()) throw PreconditionError("time norm needs matching nonempty grids");
  if (std::isinf(p)) return *std::max_element(n.begin(), n.end());
  std::vector<double> terms(n.size());
  for (std::size_t j = 0; j < n.size(); ++j) terms[j] = w[j] * std::pow(n[j], p);
  return std::pow(pairwise_sum(terms.data(), terms.size()), 1.0 / p);
}

double mixed_norm(const std::vector<cplx_vec>& samples, const std::vector<double>& t_weights,
                  const std::vector<double>& x_weights, double p, double q) {
  if (samples.empty()) throw PreconditionError("mixed norm needs samples");
  std::vector<double> slices;
  for (const auto& s : samples) slices.push_back(lebesgue_norm(s, x_weights, q));
  return time_norm(slices, t_weights, p);
}

cplx_vec trial_coefficients(const SpectralModel& model, const DyadicPartition& partition, int k, TrialKind kind,
                            int index, std::uint64_t seed) {
  const std::size_t M = model.modes();
  cplx_vec c(M, {0.0, 0.0});
  const double scale = std::ldexp(1.0, -2 * k);
  const CounterRng rng = CounterRng(seed).substream((std::uint64_t(k) << 32) ^ std::uint64_t(index));
  const double pi = 3.14159265358979323846;
  if (kind == TrialKind::eigenfunction) {
    // A single eigenfunction in the middle of the shell.
    if (model.kind == ModelKind::sphere) {
      const std::size_t deg = std::size_t(1) << k;
      if (deg >= M) throw PreconditionError("sphere model too small for the shell");
      c[deg] = 1.0;
    } else {
      std::vector<int> f(model.dim, 0);
      f[0] = 1 << k;
      if (f[0] >= model.grid / 2) throw PreconditionError("torus model too small for the shell");
      std::size_t idx = std::size_t(f[0]);
      for (int j = 1; j < model.dim; ++j) idx *= std::size_t(model.grid);
      c[idx] = 1.0;
    }
    return c;
  }
  if (kind == TrialKind::knapp && model.kind == ModelKind::sphere)
    throw PreconditionError("Knapp packets are defined on the torus model only");
  for (std::size_t i = 0; i < M; ++i) {
    const double lam = model.eigenvalue(i);
    const double w = partition.phi(scale * lam);
    if (w == 0.0) continue;
    switch (kind) {
      case TrialKind::random:
        c[i] = w * rng.complex_gaussian(i);
        break;
      case TrialKind::coherent:
        if (model.kind == ModelKind::torus) {
          double phase = 0.0;
          for (int f : model.frequency(i)) phase -= f * (pi / 3.0);
          c[i] = w * std::polar(1.0, phase);
        } else {
          c[i] = w * zonal_harmonic(model.dim, int(i), 1.0);
        }
        break;
      case TrialKind::knapp: {
        const std::vector<int> f = model.frequency(i);
        if (f[0] <= 0) break;
        double perp = 0.0;
        for (int j = 1; j < model.dim; ++j) perp += double(f[j]) * f[j];
        c[i] = w * bump(std::sqrt(perp) * std::exp2(-0.5 * k));
        break;
      }
      case TrialKind::eigenfunction:
        break;
    }
  }
  return c;
}

LossFit loss_exponent_fit(ModelKind model_kind, int d, const AdmissiblePair& pair, const LossFitOptions& o) {
  if (o.k_max - o.k_min + 1 < 4) throw PreconditionError("loss fit needs at least 4 shells");
  if (pair.d != d) throw PreconditionError("pair dimension does not match the model");
  const ExponentReport rep = exponents(pair);
  const DyadicPartition partition = build_partition(o.k_max + 2);
  const double p = pair.p.value(), q = pair.q.value();

  std::vector<double> t(o.time_steps + 1);
  for (int j = 0; j <= o.time_steps; ++j) t[j] = o.T * std::pow(double(j) / o.time_steps, o.grading);
  const std::vector<double> tw = trapezoid_weights(t);

  std::vector<std::pair<TrialKind, int>> trials;
  for (int i = 0; i < o.family.random_trials; ++i) trials.push_back({TrialKind::random, i});
  if (o.family.coherent) trials.push_back({TrialKind::coherent, 0});
  if (o.family.knapp && model_kind == ModelKind::torus) trials.push_back({TrialKind::knapp, 0});
  if (o.family.eigenfunction) trials.push_back({TrialKind::eigenfunction, 0});
  if (trials.empty()) throw PreconditionError("empty trial family");

  LossFit fit;
  fit.predicted_loss = boost::rational_cast<double>(rep.predicted_loss);
  std::vector<double> ks, logs;
  for (int k = o.k_min; k <= o.k_max; ++k) {
    const SpectralModel model =
        model_kind == ModelKind::torus
            ? SpectralModel::torus(d, 1 << (k + o.oversample_log2))
            : SpectralModel::sphere(d, (1 << (k + 1)) + 2, std::max((1 << (k + 2)) + 4, 1 << (k + o.oversample_log2)));
    const std::vector<double> xw = model.weights();
    const std::vector<double> omega = dispersion_relation(model, o.m);
    ShellQuotient sq;
    sq.k = k;
    sq.trials.resize(trials.size());
    parallel_for(trials.size(), o.workers, [&](std::size_t i) {
      const cplx_vec c = trial_coefficients(model, partition, k, trials[i].first, trials[i].second, o.family.seed);
      double l2 = 0.0;
      for (const auto& v : c) l2 += std::norm(v);
      l2 = std::sqrt(l2);
      std::vector<double> slices(t.size());
      for (std::size_t j = 0; j < t.size(); ++j) slices[j] = lebesgue_norm(spectral_propagate(model, omega, t[j], c), xw, q);
      sq.trials[i] = {trials[i].first, trials[i].second, time_norm(slices, tw, p) / l2};
    });
    for (const auto& tr : sq.trials)
      if (tr.quotient > sq.quotient) {
        sq.quotient = tr.quotient;
        sq.best_kind = tr.kind;
        sq.best_index = tr.index;
      }
    ks.push_back(k);
    logs.push_back(std::log2(sq.quotient));
    fit.shells.push_back(std::move(sq));
  }
  const LineFit lf = fit_line(ks, logs);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  const int n = std::min<int>(o.trend_shells, int(ks.size()));
  std::vector<double> tk, excess;
  for (std::size_t i = ks.size() - n; i < ks.size(); ++i) {
    tk.push_back(ks[i]);
    excess.push_back(logs[i] - fit.predicted_loss * ks[i]);
  }
  fit.residual_trend = fit_line(tk, excess).slope;
  return fit;
}

}  // namespace wkblab
