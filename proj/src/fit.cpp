#include "wkblab/fit.hpp"

#include <cmath>

#include "wkblab/errors.hpp"

namespace wkblab {

LinearFit fit_linear(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  if (A.rows() < A.cols()) throw PreconditionError("underdetermined fit: fewer samples than unknowns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < A.cols()) throw PreconditionError("underdetermined fit: design matrix is rank deficient");
  LinearFit f;
  f.coefficients = qr.solve(b);
  f.residuals = b - A * f.coefficients;
  f.rms_residual = std::sqrt(f.residuals.squaredNorm() / double(A.rows()));
  return f;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw PreconditionError("fit_line: size mismatch");
  const int n = int(x.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = x[i];
    b[i] = y[i];
  }
  const LinearFit f = fit_linear(A, b);
  LineFit out;
  out.intercept = f.coefficients[0];
  out.slope = f.coefficients[1];
  out.rms_residual = f.rms_residual;
  out.residuals.assign(f.residuals.data(), f.residuals.data() + n);
  return out;
}

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t m = n / 2;
  return pairwise_sum(v, m) + pairwise_sum(v + m, n - m);
}

}  // namespace wkblab
