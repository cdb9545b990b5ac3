#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oracle {

Vec solve(Mat A, Vec b) {
  const std::size_t n = A.rows;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(A(i, k)) > std::abs(A(piv, k))) piv = i;
    }
    if (A(piv, k) == 0.0) throw std::runtime_error("singular system");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = A(i, k) / A(k, k);
      for (std::size_t j = k; j < n; ++j) A(i, j) -= f * A(k, j);
      b[i] -= f * b[k];
    }
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
    x[i] = s / A(i, i);
  }
  return x;
}

Vec normal_equations(const Mat& x, const Vec& y) {
  Mat g{x.cols, x.cols, std::vector<double>(x.cols * x.cols, 0.0)};
  Vec c(x.cols, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) {
      c[j] += x(i, j) * y[i];
      for (std::size_t k = 0; k < x.cols; ++k) g(j, k) += x(i, j) * x(i, k);
    }
  }
  return solve(g, c);
}

Vec newton_logistic(const Mat& x, const Vec& y, int iterations) {
  Vec beta(x.cols, 0.0);
  for (int it = 0; it < iterations; ++it) {
    Mat h{x.cols, x.cols, std::vector<double>(x.cols * x.cols, 0.0)};
    Vec grad(x.cols, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
      double eta = 0.0;
      for (std::size_t j = 0; j < x.cols; ++j) eta += x(i, j) * beta[j];
      const double mu = 1.0 / (1.0 + std::exp(-eta));
      for (std::size_t j = 0; j < x.cols; ++j) {
        grad[j] += x(i, j) * (y[i] - mu);
        for (std::size_t k = 0; k < x.cols; ++k) h(j, k) += mu * (1.0 - mu) * x(i, j) * x(i, k);
      }
    }
    const Vec step = solve(h, grad);
    for (std::size_t j = 0; j < x.cols; ++j) beta[j] += step[j];
  }
  return beta;
}

Vec closed_form_ridge(const Mat& x, const Vec& y, double lambda, const Vec& pf) {
  const std::size_t n = x.rows, p = x.cols;
  Vec xbar(p, 0.0);
  double ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ybar += y[i];
    for (std::size_t j = 0; j < p; ++j) xbar[j] += x(i, j);
  }
  ybar /= static_cast<double>(n);
  for (auto& v : xbar) v /= static_cast<double>(n);
  // Setting the gradient of the objective to zero:
  //   (Xc'Xc / n + 2 lambda diag(pf)) d = Xc'(y - ybar) / n.
  Mat g{p, p, std::vector<double>(p * p, 0.0)};
  Vec c(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double xj = x(i, j) - xbar[j];
      c[j] += xj * (y[i] - ybar) / static_cast<double>(n);
      for (std::size_t k = 0; k < p; ++k) g(j, k) += xj * (x(i, k) - xbar[k]) / static_cast<double>(n);
    }
  }
  for (std::size_t j = 0; j < p; ++j) g(j, j) += 2.0 * lambda * (pf.empty() ? 1.0 : pf[j]);
  const Vec d = solve(g, c);
  Vec out{ybar};
  for (std::size_t j = 0; j < p; ++j) out[0] -= xbar[j] * d[j];
  out.insert(out.end(), d.begin(), d.end());
  return out;
}

Decisions bonferroni(const Vec& p, double alpha) {
  Decisions d;
  for (double v : p) d.rejected.push_back(v < alpha / static_cast<double>(p.size()));
  return d;
}

Decisions sidak(const Vec& p, double alpha) {
  const double level = 1.0 - std::pow(1.0 - alpha, 1.0 / static_cast<double>(p.size()));
  Decisions d;
  for (double v : p) d.rejected.push_back(v < level);
  return d;
}

namespace {
std::vector<std::size_t> sorted_order(const Vec& p) {
  std::vector<std::size_t> idx(p.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  return idx;
}
}  // namespace

Decisions holm(const Vec& p, double alpha) {
  const std::size_t m = p.size();
  const auto idx = sorted_order(p);
  Decisions d{std::vector<bool>(m, false)};
  for (std::size_t k = 0; k < m; ++k) {
    if (!(p[idx[k]] < alpha / static_cast<double>(m - k))) break;
    d.rejected[idx[k]] = true;
  }
  return d;
}

Decisions hochberg(const Vec& p, double alpha) {
  const std::size_t m = p.size();
  const auto idx = sorted_order(p);
  Decisions d{std::vector<bool>(m, false)};
  for (std::size_t k = m; k-- > 0;) {
    if (p[idx[k]] < alpha / static_cast<double>(m - k)) {
      for (std::size_t i = 0; i <= k; ++i) d.rejected[idx[i]] = true;
      break;
    }
  }
  return d;
}

double t_two_sided(double t, double df) {
  // Density integrated over [0, |t|] by composite Simpson on a fine grid.
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  auto f = [&](double u) { return c * std::pow(1.0 + u * u / df, -(df + 1) / 2); };
  const double a = std::abs(t);
  const int steps = 200000;
  const double h = a / steps;
  double s = f(0.0) + f(a);
  for (int i = 1; i < steps; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
  const double half = s * h / 3.0;
  return std::max(0.0, 1.0 - 2.0 * half);
}

double normal_quantile(double q) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Pearson pearson(const Vec& x, const Vec& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  Pearson out;
  out.r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  out.t = out.r * std::sqrt((n - 2) / (1 - out.r * out.r));
  out.p = t_two_sided(out.t, n - 2);
  const double z = 0.5 * std::log((1 + out.r) / (1 - out.r));
  const double half = normal_quantile(0.975) / std::sqrt(n - 3);
  out.lo = std::tanh(z - half);
  out.hi = std::tanh(z + half);
  return out;
}

}  // namespace oracle
