#include "wkblab/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "wkblab/errors.hpp"
#include "wkblab/special_functions.hpp"

namespace wkblab {

GaussRule gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw PreconditionError("quadrature needs at least one node");
  if (!(alpha > -1.0 && beta > -1.0)) throw PreconditionError("Jacobi weight parameters must exceed -1");
  const double ab = alpha + beta;
  Eigen::VectorXd diag(n), sub(std::max(n - 1, 1));
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + ab;
    diag[k] = (k == 0 || std::abs(s) < 1e-300) ? (beta - alpha) / (ab + 2.0)
                                              : (beta * beta - alpha * alpha) / (s * (s + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    double b2;
    if (std::abs(s - 1.0) < 1e-14)
      b2 = 2.0 * (1.0 + alpha) * (1.0 + beta);  // k = 1, α + β = -1
    else
      b2 = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    sub[k - 1] = std::sqrt(b2);
  }
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = diag[0];
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::EigenvaluesOnly);
    for (int k = 0; k < n; ++k) rule.nodes[k] = es.eigenvalues()[k];
  }
  const double logc = std::lgamma(n + alpha + 1.0) + std::lgamma(n + beta + 1.0) -
                      std::lgamma(n + ab + 1.0) - std::lgamma(n + 1.0) + (ab + 1.0) * std::log(2.0);
  for (int k = 0; k < n; ++k) {
    double x = rule.nodes[k];
    for (int it = 0; it < 3; ++it) {
      const JacobiValue p = jacobi_eval(n, alpha, beta, x);
      if (p.derivative == 0.0) break;
      const double dx = p.value / p.derivative;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[k] = x;
    const double dp = jacobi_eval(n, alpha, beta, x).derivative;
    rule.weights[k] = std::exp(logc) / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussRule>(gauss_jacobi(n, 0.0, 0.0));
  return *slot;
}

GaussRule map_rule(const GaussRule& rule, double a, double b) {
  GaussRule r;
  r.nodes.resize(rule.nodes.size());
  r.weights.resize(rule.nodes.size());
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    r.nodes[k] = a + 0.5 * (b - a) * (rule.nodes[k] + 1.0);
    r.weights[k] = 0.5 * (b - a) * rule.weights[k];
  }
  return r;
}

}  // namespace wkblab
