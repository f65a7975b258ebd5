#include "wkblab/special_functions.hpp"

#include "wkblab/errors.hpp"

namespace wkblab {

namespace {

template <typename R>
R jacobi_recurrence(int n, R a, R b, R x) {
  if (n == 0) return R(1);
  R p0 = R(1);
  R p1 = (a + 1) + (a + b + 2) * (x - 1) / 2;
  for (int k = 2; k <= n; ++k) {
    const R kk = R(k);
    const R s = 2 * kk + a + b;
    const R c1 = 2 * kk * (kk + a + b) * (s - 2);
    const R c2 = (s - 1) * (a * a - b * b);
    const R c3 = (s - 1) * s * (s - 2);
    const R c4 = 2 * (kk + a - 1) * (kk + b - 1) * s;
    const R p2 = ((c2 + c3 * x) * p1 - c4 * p0) / c1;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

}  // namespace

double jacobi_value(int n, double alpha, double beta, double x) {
  if (n < 0) throw PreconditionError("Jacobi degree must be >= 0");
  if (!(alpha > -1.0 && beta > -1.0)) throw PreconditionError("Jacobi parameters must exceed -1");
  if (n > 600)
    return double(jacobi_recurrence<long double>(n, alpha, beta, x));
  return jacobi_recurrence<double>(n, alpha, beta, x);
}

JacobiValue jacobi_eval(int n, double alpha, double beta, double x) {
  JacobiValue r;
  r.value = jacobi_value(n, alpha, beta, x);
  r.derivative = n == 0 ? 0.0 : 0.5 * (n + alpha + beta + 1.0) * jacobi_value(n - 1, alpha + 1.0, beta + 1.0, x);
  return r;
}

}  // namespace wkblab
