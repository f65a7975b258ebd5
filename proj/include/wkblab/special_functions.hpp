#pragma once

namespace wkblab {

struct JacobiValue {
  double value = 0.0;
  double derivative = 0.0;
};

// P_n^{(α,β)}(x) by the three-term recurrence in n; derivative from
// d/dx P_n^{α,β} = (n+α+β+1)/2 P_{n-1}^{α+1,β+1}. Degrees above 600 run the
// recurrence in extended precision.
JacobiValue jacobi_eval(int n, double alpha, double beta, double x);

// Value only.
double jacobi_value(int n, double alpha, double beta, double x);

}  // namespace wkblab
