#include "wkblab/cli.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <json.hpp>
#include <sstream>

#include "wkblab/dirac_sphere.hpp"
#include "wkblab/errors.hpp"
#include "wkblab/hamilton_jacobi.hpp"
#include "wkblab/oscillatory.hpp"
#include "wkblab/strichartz.hpp"

namespace wkblab::cli {

namespace pt = boost::property_tree;

const std::vector<ExperimentInfo>& experiments() {
  static const std::vector<ExperimentInfo> list = {
      {"hj-validate", "phase from characteristics against x.xi + t q, HJ residual, |t|^2 remainder fit"},
      {"dispersion-wave", "max |L_h| over (x, y) on the wave window, fitted h and time exponents"},
      {"dispersion-kg", "max |L_h| over (x, y) on the Klein-Gordon window, fitted h and time exponents"},
      {"strichartz-fit", "dyadic-shell Strichartz quotients on a spectral model, loss exponent regression"},
      {"dirac-sharpness", "exact sharpness identities and optional eigenfunction growth fit on S^d"},
      {"jacobi-moments", "growth exponent of weighted Jacobi polynomial moments"},
  };
  return list;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string show(const Rational& r) {
  std::ostringstream os;
  os << r.numerator();
  if (r.denominator() != 1) os << '/' << r.denominator();
  return os.str();
}

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    item = item.substr(b, e - b + 1);
    double v = 0.0;
    const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
    if (r.ec != std::errc() || r.ptr != item.data() + item.size())
      throw ConfigError(key + ": cannot read '" + item + "' as a number");
    out.push_back(v);
  }
  return out;
}

// "0 0; 0.3 -0.2"
std::vector<Eigen::VectorXd> parse_points(const std::string& text, int d, const std::string& key) {
  std::vector<Eigen::VectorXd> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    std::stringstream is(item);
    std::vector<double> c;
    double v;
    while (is >> v) c.push_back(v);
    if (c.empty()) continue;
    if (int(c.size()) != d) throw ConfigError(key + ": every point needs " + std::to_string(d) + " coordinates");
    out.push_back(Eigen::Map<Eigen::VectorXd>(c.data(), d));
  }
  return out;
}

// "inf", "4" or "10/3"
LebesgueExponent parse_exponent(const std::string& text, const std::string& key) {
  if (text == "inf" || text == "infinity") return LebesgueExponent::infinity();
  long long num = 0, den = 1;
  const auto slash = text.find('/');
  try {
    num = std::stoll(text.substr(0, slash));
    if (slash != std::string::npos) den = std::stoll(text.substr(slash + 1));
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, a fraction or inf, got '" + text + "'");
  }
  if (den <= 0) throw ConfigError(key + ": denominator must be positive");
  try {
    return LebesgueExponent::finite(Rational(num, den));
  } catch (const PreconditionError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

template <typename T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
  try {
    return tree.get<T>(key, fallback);
  } catch (const pt::ptree_bad_data&) {
    throw ConfigError(key + ": malformed value '" + tree.get<std::string>(key) + "'");
  }
}

std::string csv_join(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    s += cells[i];
  }
  return s;
}

std::string axis_header(const char* prefix, int d) {
  std::vector<std::string> v;
  for (int i = 1; i <= d; ++i) v.push_back(prefix + std::to_string(i));
  return csv_join(v);
}

MetricChart chart_of(const ExperimentConfig& c) {
  const std::string kind = get<std::string>(c.tree, "geometry.chart", "flat");
  const int d = get<int>(c.tree, "geometry.dim", 2);
  if (kind == "flat") return MetricChart::flat(d);
  if (kind == "perturbed_flat")
    return MetricChart::perturbed_flat(d, get<double>(c.tree, "geometry.epsilon", 0.15), Eigen::VectorXd::Zero(d),
                                       get<double>(c.tree, "geometry.radius", 1.0));
  throw ConfigError("geometry.chart: unknown chart '" + kind + "' (flat, perturbed_flat)");
}

CriterionResult within(std::string name, std::string target, double value, double expected, double tol) {
  return {std::move(name), std::move(target), value, expected, tol, std::abs(value - expected) <= tol};
}

CriterionResult at_most(std::string name, std::string target, double value, double bound) {
  return {std::move(name), std::move(target), value, bound, 0.0, value <= bound};
}

std::vector<int> int_list(const pt::ptree& tree, const std::string& key, std::vector<int> fallback) {
  const auto text = tree.get_optional<std::string>(key);
  if (!text) return fallback;
  std::vector<int> out;
  for (double v : parse_list(*text, key)) {
    if (v != std::floor(v)) throw ConfigError(key + ": expected integers");
    out.push_back(int(v));
  }
  return out;
}

// ---------------------------------------------------------------- hj-validate

RunReport run_hj(const ExperimentConfig& c) {
  const MetricChart chart = chart_of(c);
  const int d = chart.dim();
  const MassParam mass = MassParam::of(get<double>(c.tree, "geometry.m", 1.0));
  const std::vector<double> hs = parse_list(get<std::string>(c.tree, "hj.h", "1, 0.25, 0.0625"), "hj.h");
  const int n = get<int>(c.tree, "hj.grid", 5);
  const double t_max = get<double>(c.tree, "hj.t_max", 0.1);
  const double x_extent = get<double>(c.tree, "hj.x_extent", 0.6);

  std::vector<double> ts;
  for (int k = 0; k < n; ++k) ts.push_back(t_max * std::pow(0.5, n - 1 - k));
  std::vector<Eigen::VectorXd> xs, xis;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(d, 0.0);
    const double s = n > 1 ? -x_extent + 2.0 * x_extent * k / (n - 1) : 0.0;
    for (int i = 0; i < d; ++i) x[i] = s * (i % 2 == 0 ? 1.0 : -0.5);
    xs.push_back(x);
    const double r = 0.5 + 1.5 * k / std::max(n - 1, 1), ang = 2.0 * std::numbers::pi * k / n + 0.3;
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(d);
    xi[0] = r * std::cos(ang);
    if (d > 1) xi[1] = r * std::sin(ang);
    xis.push_back(xi);
  }

  RunReport rep;
  rep.experiment = "hj-validate";
  rep.csv_header = "h,t," + axis_header("x", d) + "," + axis_header("xi", d) + ",S,linearized,remainder";
  std::vector<PhaseField> fields;
  double worst_flat = 0.0, worst_hj = 0.0;
  for (double h : hs) {
    const HamiltonianSystem sys(chart, mass, CutoffLibrary::wave(), h);
    fields.emplace_back(sys, 2.0 * t_max);
    const PhaseField& field = fields.back();
    for (double t : ts)
      for (const auto& x : xs)
        for (const auto& xi : xis) {
          const PhaseSample ps = field.eval(t, x, xi);
          const double lin = x.dot(xi) + t * sys.q(x, xi);
          std::vector<std::string> row = {format_number(h), format_number(t)};
          for (int i = 0; i < d; ++i) row.push_back(format_number(x[i]));
          for (int i = 0; i < d; ++i) row.push_back(format_number(xi[i]));
          row.push_back(format_number(ps.S));
          row.push_back(format_number(lin));
          row.push_back(format_number(ps.S - lin));
          rep.csv_rows.push_back(csv_join(row));
          if (chart.kind() == ChartKind::flat) {
            const double exact = x.dot(xi) + t * std::sqrt(h * h * mass.m * mass.m + xi.squaredNorm());
            worst_flat = std::max(worst_flat, std::abs(ps.S - exact));
          } else {
            const double dt = 1e-3 * t_max;
            const double St = (field.eval(t + dt, x, xi).S - field.eval(t - dt, x, xi).S) / (2.0 * dt);
            worst_hj = std::max(worst_hj, std::abs(St - sys.q(x, ps.grad_x)));
          }
        }
  }
  const RemainderFit fit = remainder_bound_check(fields, ts, xs, xis);
  if (chart.kind() == ChartKind::flat) {
    rep.criteria.push_back(at_most("flat phase error", "closed-form flat phase x.xi + t sqrt(h^2 m^2 + |xi|^2)",
                                   worst_flat, 1e-8));
    rep.facts.push_back({"remainder", fit.exact ? "exact" : "slope " + format_number(fit.slope)});
    rep.criteria.push_back({"remainder exact", "flat chart gives zero quadratic remainder", fit.exact ? 1.0 : 0.0,
                            1.0, 0.0, fit.exact});
  } else {
    rep.criteria.push_back(at_most("HJ residual", "Hamilton-Jacobi equation d_t S = q(x, grad_x S)", worst_hj, 1e-6));
    rep.criteria.push_back(within("remainder slope", "quadratic remainder bound in |t|", fit.slope, 2.2, 0.3));
    rep.criteria.push_back(at_most("remainder constant ratio", "uniformity in h of the remainder constant",
                                   fit.constant_ratio, 2.0));
  }
  return rep;
}

// ---------------------------------------------------------------- dispersion

RunReport run_dispersion(const ExperimentConfig& c, Window window) {
  DecayFitRequest req;
  req.chart = chart_of(c);
  const int d = req.chart.dim();
  const bool kg = window == Window::kg;
  req.mass = MassParam::of(get<double>(c.tree, "geometry.m", kg ? 1.0 : 0.0));
  req.library = kg ? CutoffLibrary::klein_gordon(req.mass.m_tilde) : CutoffLibrary::wave();
  req.window = window;
  req.t0 = get<double>(c.tree, "dispersion.t0", 1.0);
  req.h_values = parse_list(
      get<std::string>(c.tree, "dispersion.h", kg ? "0.0009765625, 0.000244140625, 0.00006103515625"
                                                  : "0.03125, 0.015625, 0.0078125"),
      "dispersion.h");
  const int count = get<int>(c.tree, "dispersion.t_count", 5);
  const double lo_over_h = get<double>(c.tree, "dispersion.t_lo_over_h", 16.0);
  for (double h : req.h_values) {
    const double lo = lo_over_h * h, hi = kg ? std::sqrt(h) * req.t0 : req.t0;
    if (!(hi > lo)) throw ConfigError("dispersion: empty t window at h = " + format_number(h));
    std::vector<double> t;
    for (int k = 0; k < count; ++k) t.push_back(lo * std::pow(hi / lo, count > 1 ? double(k) / (count - 1) : 1.0));
    req.t_values.push_back(t);
  }
  req.x_points = parse_points(get<std::string>(c.tree, "dispersion.x_points", d == 2 ? "0 0; 0.3 -0.2" : "0"), d,
                              "dispersion.x_points");
  req.directions = get<int>(c.tree, "dispersion.directions", 8);
  req.spacing_over_h = get<double>(c.tree, "dispersion.spacing_over_h", 0.25);
  req.sweep.workers = c.workers;
  if (c.budget) req.sweep.quadrature.node_budget = *c.budget;

  const DecayFit fit = decay_fit(req);
  RunReport rep;
  rep.experiment = kg ? "dispersion-kg" : "dispersion-wave";
  rep.csv_header = "h,t," + axis_header("x", d) + "," + axis_header("y", d) + ",reL,imL,absL";
  for (const DecaySample& s : fit.samples) {
    std::vector<std::string> row = {format_number(s.h), format_number(s.t)};
    for (int i = 0; i < d; ++i) row.push_back(format_number(s.x[i]));
    for (int i = 0; i < d; ++i) row.push_back(format_number(s.y[i]));
    row.push_back(format_number(s.L.real()));
    row.push_back(format_number(s.L.imag()));
    row.push_back(format_number(s.abs_L));
    rep.csv_rows.push_back(csv_join(row));
  }
  const double alpha_target = kg ? d + 1.0 : d, beta_target = kg ? 0.5 * d : 0.5 * (d - 1);
  const std::string target = kg ? "kg-dispersive-decay: h^{-(d+1)} (1 + t/h)^{-d/2}"
                                : "wave-dispersive-decay: h^{-d} (1 + t/h)^{-(d-1)/2}";
  rep.criteria.push_back(within("alpha", target, fit.alpha, alpha_target, get<double>(c.tree, "dispersion.alpha_tol", 0.25)));
  rep.criteria.push_back(within("beta", target, fit.beta, beta_target, get<double>(c.tree, "dispersion.beta_tol", 0.15)));
  rep.facts.push_back({"fit_residual", format_number(fit.residual)});
  rep.facts.push_back({"reliable", fit.reliable ? "true" : "false"});
  return rep;
}

// ---------------------------------------------------------------- strichartz-fit

RunReport run_strichartz(const ExperimentConfig& c) {
  const std::string model_name = get<std::string>(c.tree, "strichartz.model", "torus");
  ModelKind model;
  if (model_name == "torus")
    model = ModelKind::torus;
  else if (model_name == "sphere")
    model = ModelKind::sphere;
  else
    throw ConfigError("strichartz.model: unknown model '" + model_name + "' (torus, sphere)");
  const int d = get<int>(c.tree, "strichartz.d", 2);
  const LebesgueExponent p = parse_exponent(get<std::string>(c.tree, "strichartz.p", "8"), "strichartz.p");
  const LebesgueExponent q = parse_exponent(get<std::string>(c.tree, "strichartz.q", "4"), "strichartz.q");
  const std::string cls_name = get<std::string>(c.tree, "strichartz.class", "wave");
  const PairClass cls = cls_name == "schrodinger" ? PairClass::schrodinger : PairClass::wave;
  if (cls_name != "wave" && cls_name != "schrodinger")
    throw ConfigError("strichartz.class: expected wave or schrodinger");
  const AdmissiblePair pair{p, q, d, cls};
  const ExponentReport ex = exponents(pair);

  LossFitOptions o;
  o.k_min = get<int>(c.tree, "strichartz.k_min", 3);
  o.k_max = get<int>(c.tree, "strichartz.k_max", 8);
  o.m = get<double>(c.tree, "strichartz.m", 0.0);
  o.T = get<double>(c.tree, "strichartz.T", 1.0);
  o.time_steps = get<int>(c.tree, "strichartz.time_steps", 64);
  o.family.random_trials = get<int>(c.tree, "strichartz.trials", 16);
  o.family.seed = c.seed;
  o.workers = c.workers;
  const LossFit fit = loss_exponent_fit(model, d, pair, o);

  RunReport rep;
  rep.experiment = "strichartz-fit";
  rep.csv_header = "k,trial,index,quotient";
  for (const ShellQuotient& s : fit.shells)
    for (const TrialResult& t : s.trials)
      rep.csv_rows.push_back(csv_join({std::to_string(s.k), to_string(t.kind), std::to_string(t.index),
                                       format_number(t.quotient)}));
  rep.facts.push_back({"gamma_w", show(ex.gamma_w)});
  rep.facts.push_back({"gamma_kg", show(ex.gamma_kg)});
  rep.facts.push_back({"predicted_loss", show(ex.predicted_loss)});
  rep.facts.push_back({"kappa", show(ex.kappa)});
  rep.facts.push_back({"slope", format_number(fit.slope)});
  const double tol = get<double>(c.tree, "strichartz.slope_slack", 0.15);
  rep.criteria.push_back(at_most("loss slope", "strichartz-loss: predicted loss exponent plus slack", fit.slope,
                                 boost::rational_cast<double>(ex.predicted_loss) + tol));
  rep.criteria.push_back(at_most("residual trend", "strichartz-loss: no growing excess over the prediction",
                                 fit.residual_trend, get<double>(c.tree, "strichartz.trend_bound", 0.1)));
  return rep;
}

// ---------------------------------------------------------------- dirac-sharpness

RunReport run_dirac(const ExperimentConfig& c) {
  const int d = get<int>(c.tree, "dirac.d", 4);
  const SharpnessReport sr = sharpness_report(d);
  RunReport rep;
  rep.experiment = "dirac-sharpness";
  rep.csv_header = "d,n,l,q,norm";
  for (const SharpnessRow& r : sr.rows) {
    const std::string tag = d == 3 ? "epsilon=" + show(r.epsilon) : "row";
    rep.facts.push_back({tag + " gamma_w", show(r.gamma_w)});
    rep.facts.push_back({tag + " s(q)", show(r.s_q)});
    rep.facts.push_back({tag + " gap", show(r.gap)});
  }
  rep.facts.push_back({"summary", sr.summary});
  bool ok;
  std::string target;
  if (d >= 4) {
    ok = sr.exact;
    target = "sogge-sharpness: s(q) = gamma_W = (d+1)/(2(d-1)) at q = 2(d-1)/(d-3)";
  } else if (d == 3) {
    ok = true;
    for (const SharpnessRow& r : sr.rows)
      ok = ok && r.gap == r.epsilon / (Rational(2) * (Rational(2) + r.epsilon));
    target = "sogge-sharpness: gap epsilon/(2(2+epsilon)) tending to 0";
  } else {
    ok = sr.rows.front().gamma_w == Rational(3, 4) && sr.rows.front().s_q == Rational(1, 2);
    target = "sogge-sharpness: (gamma_W(4, inf), s(inf)) = (3/4, 1/2)";
  }
  rep.criteria.push_back({"sharpness identity", target, boost::rational_cast<double>(sr.limit_gap), 0.0, 0.0, ok});

  if (const auto qtext = c.tree.get_optional<std::string>("dirac.q")) {
    const LebesgueExponent q = parse_exponent(*qtext, "dirac.q");
    const std::vector<int> ns = int_list(c.tree, "dirac.n", {16, 32, 64, 128, 256});
    const SoggeFit sf = sogge_fit(d, q.value(), ns, c.workers);
    for (const GrowthRow& r : sf.rows)
      rep.csv_rows.push_back(csv_join({std::to_string(d), std::to_string(r.n), "0", q.str(), format_number(r.norm)}));
    if (sf.below_threshold) rep.facts.push_back({"warning", "q below 2(d+1)/(d-1): growth exponent not asymptotic"});
    rep.criteria.push_back(within("sogge slope", "sogge-growth: s(q) = (d-1)/2 - d/q", sf.slope, sf.target,
                                  get<double>(c.tree, "dirac.slope_tol", 0.05)));
  }
  return rep;
}

// ---------------------------------------------------------------- jacobi-moments

RunReport run_jacobi(const ExperimentConfig& c) {
  const double alpha = get<double>(c.tree, "jacobi.alpha", 1.0), beta = get<double>(c.tree, "jacobi.beta", 2.0);
  const double p = get<double>(c.tree, "jacobi.p", 4.0), r = get<double>(c.tree, "jacobi.r", 0.0);
  const std::vector<int> ns = int_list(c.tree, "jacobi.n", {16, 32, 64, 128, 256, 512});
  MomentFit fit;
  try {
    fit = jacobi_moment_fit(alpha, beta, p, r, ns);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("jacobi: ") + e.what());
  }
  RunReport rep;
  rep.experiment = "jacobi-moments";
  rep.csv_header = "n,moment";
  for (const GrowthRow& row : fit.rows) rep.csv_rows.push_back(csv_join({std::to_string(row.n), format_number(row.norm)}));
  // relative tolerance, absolute when the exponent vanishes
  const double rel = get<double>(c.tree, "jacobi.rel_tol", 0.05);
  const double tol = fit.target == 0.0 ? get<double>(c.tree, "jacobi.abs_tol", 0.1) : rel * std::abs(fit.target);
  rep.criteria.push_back(within("moment slope", "jacobi-moment: alpha p - 2r - 2", fit.slope, fit.target, tol));
  return rep;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const pt::ptree& tree) {
  ExperimentConfig c;
  c.tree = tree;
  c.name = get<std::string>(tree, "experiment.name", "");
  const long long seed = get<long long>(tree, "experiment.seed", 1);
  if (seed < 0) throw ConfigError("experiment.seed must be nonnegative");
  c.seed = std::uint64_t(seed);
  c.workers = get<int>(tree, "experiment.workers", 1);
  if (const auto b = tree.get_optional<std::string>("experiment.budget"))
    c.budget = get<double>(tree, "experiment.budget", 0.0);
  c.output = get<std::string>(tree, "experiment.output", "out");
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  return parse(tree);
}

void validate(const ExperimentConfig& c) {
  std::vector<std::string> problems;
  bool known = false;
  for (const auto& e : experiments()) known = known || e.name == c.name;
  if (c.name.empty())
    problems.push_back("experiment.name is missing");
  else if (!known)
    problems.push_back("unknown experiment '" + c.name + "'");
  if (c.workers < 1) problems.push_back("workers must be >= 1");
  if (c.budget && !(*c.budget > 0.0)) problems.push_back("budget must be positive");
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      problems.push_back(e.what());
    }
  };
  if (c.name == "hj-validate" || c.name == "dispersion-wave" || c.name == "dispersion-kg") {
    check([&] {
      const MetricChart chart = chart_of(c);
      if (chart.dim() < 1 || chart.dim() > kMaxFlowDim) throw ConfigError("geometry.dim must be 1..3");
    });
    check([&] {
      if (get<double>(c.tree, "geometry.m", 0.0) < 0.0) throw ConfigError("geometry.m must be >= 0");
    });
  }
  if (c.name == "hj-validate")
    check([&] {
      for (double h : parse_list(get<std::string>(c.tree, "hj.h", "1"), "hj.h"))
        if (!(h > 0.0 && h <= 1.0)) throw ConfigError("hj.h entries must lie in (0, 1]");
      if (get<int>(c.tree, "hj.grid", 5) < 2) throw ConfigError("hj.grid must be >= 2");
      if (!(get<double>(c.tree, "hj.t_max", 0.1) > 0.0)) throw ConfigError("hj.t_max must be positive");
    });
  if (c.name == "dispersion-wave" || c.name == "dispersion-kg")
    check([&] {
      const auto hs = parse_list(get<std::string>(c.tree, "dispersion.h", "0.03125, 0.015625, 0.0078125"),
                                 "dispersion.h");
      if (hs.size() < 3) throw ConfigError("dispersion.h needs at least 3 values");
      for (double h : hs)
        if (!(h > 0.0 && h <= 1.0)) throw ConfigError("dispersion.h entries must lie in (0, 1]");
      if (get<int>(c.tree, "dispersion.t_count", 5) < 5) throw ConfigError("dispersion.t_count must be >= 5");
      if (get<double>(c.tree, "dispersion.t_lo_over_h", 16.0) < 4.0)
        throw ConfigError("dispersion.t_lo_over_h must be >= 4");
      if (!(get<double>(c.tree, "dispersion.t0", 1.0) > 0.0)) throw ConfigError("dispersion.t0 must be positive");
    });
  if (c.name == "strichartz-fit")
    check([&] {
      const int d = get<int>(c.tree, "strichartz.d", 2);
      if (d < 2) throw ConfigError("strichartz.d must be >= 2");
      parse_exponent(get<std::string>(c.tree, "strichartz.p", "8"), "strichartz.p");
      parse_exponent(get<std::string>(c.tree, "strichartz.q", "4"), "strichartz.q");
      const int lo = get<int>(c.tree, "strichartz.k_min", 3), hi = get<int>(c.tree, "strichartz.k_max", 8);
      if (lo < 1 || hi - lo < 3) throw ConfigError("strichartz needs k_min >= 1 and at least 4 shells");
    });
  if (c.name == "dirac-sharpness")
    check([&] {
      if (get<int>(c.tree, "dirac.d", 4) < 2) throw ConfigError("dirac.d must be >= 2");
      if (const auto q = c.tree.get_optional<std::string>("dirac.q")) parse_exponent(*q, "dirac.q");
    });
  if (c.name == "jacobi-moments")
    check([&] {
      if (get<double>(c.tree, "jacobi.alpha", 1.0) <= -1.0 || get<double>(c.tree, "jacobi.beta", 2.0) <= -1.0)
        throw ConfigError("jacobi.alpha and jacobi.beta must exceed -1");
      const double a = get<double>(c.tree, "jacobi.alpha", 1.0), p = get<double>(c.tree, "jacobi.p", 4.0);
      const double r = get<double>(c.tree, "jacobi.r", 0.0);
      if (!(2.0 * r < a * p - 2.0 + 0.5 * p))
        throw ConfigError("jacobi: 2r < alpha p - 2 + p/2 fails (" + format_number(2.0 * r) +
                          " >= " + format_number(a * p - 2.0 + 0.5 * p) + ")");
    });
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

bool RunReport::pass() const {
  for (const auto& c : criteria)
    if (!c.pass) return false;
  return true;
}

RunReport run(const ExperimentConfig& config) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  try {
    if (config.name == "hj-validate")
      rep = run_hj(config);
    else if (config.name == "dispersion-wave")
      rep = run_dispersion(config, Window::wave);
    else if (config.name == "dispersion-kg")
      rep = run_dispersion(config, Window::kg);
    else if (config.name == "strichartz-fit")
      rep = run_strichartz(config);
    else if (config.name == "dirac-sharpness")
      rep = run_dirac(config);
    else
      rep = run_jacobi(config);
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::string to_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = report.experiment;
  j["pass"] = report.pass();
  nlohmann::ordered_json crit = nlohmann::ordered_json::array();
  for (const auto& c : report.criteria) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["target"] = c.target;
    e["value"] = format_number(c.value);
    e["expected"] = format_number(c.expected);
    e["tolerance"] = format_number(c.tolerance);
    e["pass"] = c.pass;
    crit.push_back(e);
  }
  j["criteria"] = crit;
  nlohmann::ordered_json facts = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.facts) facts[k] = v;
  j["facts"] = facts;
  j["csv_rows"] = report.csv_rows.size();
  return j.dump(2) + "\n";
}

std::string to_csv(const RunReport& report) {
  std::string s = report.csv_header + "\n";
  for (const auto& row : report.csv_rows) s += row + "\n";
  return s;
}

void emit(const RunReport& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  const auto write = [&](const std::string& name, const std::string& text) {
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
  };
  write(report.experiment + ".csv", to_csv(report));
  write(report.experiment + ".json", to_json(report));
}

}  // namespace wkblab::cli
