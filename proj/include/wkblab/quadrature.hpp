#pragma once

#include <functional>
#include <vector>

namespace wkblab {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss–Jacobi rule on [-1, 1] for the weight (1-x)^α (1+x)^β.
// Nodes from the eigenvalues of the Jacobi matrix, polished by Newton,
// weights from the derivative formula.
GaussRule gauss_jacobi(int n, double alpha, double beta);

// Gauss–Legendre, cached per n.
const GaussRule& gauss_legendre(int n);

// Affine image of a rule on [-1, 1] onto [a, b].
GaussRule map_rule(const GaussRule& rule, double a, double b);

// Composite Gauss–Legendre: `panels` equal panels of `order` points each.
template <typename T, typename F>
T composite_gauss_legendre(F&& f, double a, double b, int panels, int order = 16) {
  const GaussRule& r = gauss_legendre(order);
  const double width = (b - a) / panels;
  T total{};
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    T part{};
    for (int k = 0; k < order; ++k)
      part += r.weights[k] * f(lo + 0.5 * width * (r.nodes[k] + 1.0));
    total += 0.5 * width * part;
  }
  return total;
}

}  // namespace wkblab
