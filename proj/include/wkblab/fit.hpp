#pragma once

#include <Eigen/Dense>
#include <vector>

namespace wkblab {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  std::vector<double> residuals;
};

// Ordinary least squares y ≈ intercept + slope x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Least-squares solution of A c ≈ b with its RMS residual.
struct LinearFit {
  Eigen::VectorXd coefficients;
  double rms_residual = 0.0;
  Eigen::VectorXd residuals;
};
LinearFit fit_linear(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

// Sum with a fixed pairwise tree, independent of how the data were produced.
double pairwise_sum(const double* v, std::size_t n);

}  // namespace wkblab
