#pragma once

// Reference implementations used only by tests. They avoid the library's
// solvers on purpose: plain Gaussian elimination, textbook formulas.

#include <cstddef>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
// Row-major n x p.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;
  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

// Solves A x = b by Gaussian elimination with partial pivoting.
Vec solve(Mat A, Vec b);

// (X'X)^-1 X'y.
Vec normal_equations(const Mat& x, const Vec& y);

// Logistic MLE by Newton-Raphson from zero.
Vec newton_logistic(const Mat& x, const Vec& y, int iterations = 50);

// Minimizer of (1/(2n)) ||y - b0 - X d||^2 + lambda * sum_j pf_j d_j^2, with
// b0 unpenalized. Returns {b0, d_1, ..., d_p}.
Vec closed_form_ridge(const Mat& x, const Vec& y, double lambda, const Vec& pf = {});

struct Decisions {
  std::vector<bool> rejected;
};
Decisions bonferroni(const Vec& p, double alpha);
Decisions sidak(const Vec& p, double alpha);
Decisions holm(const Vec& p, double alpha);
Decisions hochberg(const Vec& p, double alpha);

struct Pearson {
  double r = 0.0;
  double t = 0.0;
  double p = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};
// p from a Simpson-rule integral of the t density; CI by Fisher z with the
// 97.5% normal quantile from bisection on erfc.
Pearson pearson(const Vec& x, const Vec& y);

// Two-sided tail of Student's t by numerical integration.
double t_two_sided(double t, double df);
double normal_quantile(double q);

}  // namespace oracle
