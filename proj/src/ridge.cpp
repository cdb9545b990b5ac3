#include "twostage/ridge.hpp"

#include "twostage/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace twostage {

namespace {

constexpr double kConstantSd = 1e-12;

Eigen::VectorXd penalty_vector(std::span<const double> factors, Eigen::Index p) {
  if (factors.empty()) return Eigen::VectorXd::Ones(p);
  if (static_cast<Eigen::Index>(factors.size()) != p) {
    throw DimensionMismatch("penalty factor count does not match design columns");
  }
  Eigen::VectorXd pf(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(factors[static_cast<std::size_t>(j)] >= 0.0)) {
      throw ConfigError("penalty factors must be nonnegative");
    }
    pf(j) = factors[static_cast<std::size_t>(j)];
  }
  return pf;
}

// Minimizes 0.5 d'Gd - c'd + kappa * sum_j pf_j d_j^2 by cyclic coordinate
// descent, keeping the gradient residual r = c - Gd up to date so each
// coordinate costs O(p).
struct CdResult {
  bool converged = false;
  int sweeps = 0;
};

CdResult cd_minimize(const Eigen::MatrixXd& gram, const Eigen::VectorXd& lin, double kappa,
                     const Eigen::VectorXd& pf, Eigen::VectorXd& delta, int max_sweeps,
                     double tol) {
  const Eigen::Index p = gram.cols();
  Eigen::VectorXd resid = lin - gram * delta;
  Eigen::VectorXd denom(p);
  for (Eigen::Index j = 0; j < p; ++j) denom(j) = gram(j, j) + 2.0 * kappa * pf(j);

  CdResult out;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!(denom(j) > 0.0)) continue;
      const double updated = (resid(j) + gram(j, j) * delta(j)) / denom(j);
      const double change = updated - delta(j);
      if (change != 0.0) {
        resid.noalias() -= change * gram.col(j);
        delta(j) = updated;
        max_change = std::max(max_change, std::abs(change));
      }
    }
    out.sweeps = sweep;
    if (max_change < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

// Cross-product sums over a set of rows; differences of these give fold
// training statistics without recomputing the Gram from scratch.
struct CrossProducts {
  Eigen::MatrixXd xtx;
  Eigen::VectorXd xsum;
  Eigen::VectorXd xty;
  double ysum = 0.0;
  double yy = 0.0;
  double count = 0.0;

  CrossProducts operator-(const CrossProducts& other) const {
    return {xtx - other.xtx, xsum - other.xsum, xty - other.xty, ysum - other.ysum,
            yy - other.yy, count - other.count};
  }
};

CrossProducts cross_products(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  CrossProducts s;
  s.xtx = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  s.xtx.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  s.xtx = s.xtx.selfadjointView<Eigen::Lower>();
  s.xsum = x.colwise().sum().transpose();
  s.xty = x.transpose() * y;
  s.ysum = y.sum();
  s.yy = y.squaredNorm();
  s.count = static_cast<double>(x.rows());
  return s;
}

// Centred least-squares problem for the linear family: the intercept is
// profiled out by centring on the row subset's means.
struct LinearProblem {
  Eigen::MatrixXd gram;
  Eigen::VectorXd lin;
  Eigen::VectorXd xbar;
  double ybar = 0.0;
  double yvar = 0.0;
};

LinearProblem linear_problem(const CrossProducts& s) {
  LinearProblem lp;
  const double n = s.count;
  lp.xbar = s.xsum / n;
  lp.ybar = s.ysum / n;
  lp.gram = (s.xtx - n * lp.xbar * lp.xbar.transpose()) / n;
  lp.lin = (s.xty - n * lp.xbar * lp.ybar) / n;
  lp.yvar = std::max(0.0, (s.yy - n * lp.ybar * lp.ybar) / n);
  return lp;
}

// Sample SD of the response recovered from the cross products; the linear
// stopping rule is relative to it. Falls back to 1 for a constant response.
double response_scale(const LinearProblem& lp) {
  return lp.yvar > 0.0 ? std::sqrt(lp.yvar) : 1.0;
}

double logistic_mu(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

double binomial_deviance_unit(double y, double mu) {
  constexpr double kFloor = 1e-15;
  mu = std::clamp(mu, kFloor, 1.0 - kFloor);
  return -2.0 * (y * std::log(mu) + (1.0 - y) * std::log(1.0 - mu));
}

// Penalized logistic fit at one lambda by iteratively reweighted quadratic
// approximations, each minimized by coordinate descent. The quadratic
// surrogate of (1/n) deviance is (1/n) sum w (z - eta)^2, so the coordinate
// problem carries kappa = lambda / 2.
RidgeSolution logistic_solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                             double intercept, Eigen::VectorXd delta, const Eigen::VectorXd& pf,
                             const RidgeConfig& config) {
  const Eigen::Index n = x.rows();
  RidgeSolution sol;
  sol.converged = false;
  for (int outer = 1; outer <= config.max_outer; ++outer) {
    const Eigen::VectorXd eta = (x * delta).array() + intercept;
    Eigen::VectorXd w(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = std::clamp(logistic_mu(eta(i)), 1e-10, 1.0 - 1e-10);
      w(i) = mu * (1.0 - mu);
      z(i) = eta(i) + (y(i) - mu) / w(i);
    }
    const double wsum = w.sum();
    const Eigen::VectorXd xbar = x.transpose() * w / wsum;
    const double zbar = w.dot(z) / wsum;
    const Eigen::MatrixXd xc = x.rowwise() - xbar.transpose();
    const Eigen::MatrixXd gram = xc.transpose() * w.asDiagonal() * xc / static_cast<double>(n);
    const Eigen::VectorXd lin =
        xc.transpose() * (w.array() * (z.array() - zbar)).matrix() / static_cast<double>(n);

    const Eigen::VectorXd before = delta;
    const double intercept_before = intercept;
    const CdResult cd = cd_minimize(gram, lin, 0.5 * lambda, pf, delta, config.max_iter, config.tol);
    intercept = zbar - xbar.dot(delta);
    sol.sweeps += cd.sweeps;
    const double change =
        std::max((delta - before).cwiseAbs().maxCoeff(), std::abs(intercept - intercept_before));
    if (cd.converged && change < config.tol) {
      sol.converged = true;
      break;
    }
  }
  sol.intercept = intercept;
  sol.coefs = std::move(delta);
  return sol;
}

double lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& pf) {
  const double n = static_cast<double>(x.rows());
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::RowVectorXd xbar = x.colwise().mean();
  double best = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (pf(j) <= 0.0) continue;
    const double g = std::abs((x.col(j).array() - xbar(j)).matrix().dot(yc)) / n;
    best = std::max(best, g / pf(j));
  }
  return best > 0.0 ? best : 1.0;
}

std::vector<double> make_grid(double top, int count, double ratio) {
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double log_ratio = std::log(ratio);
  for (int k = 0; k < count; ++k) {
    grid[static_cast<std::size_t>(k)] =
        top * std::exp(log_ratio * static_cast<double>(k) / static_cast<double>(count - 1));
  }
  grid.front() = top;
  grid.back() = top * ratio;
  return grid;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

Eigen::VectorXd select_rows(const Eigen::VectorXd& y, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(rows[i]);
  return out;
}

// Fits the whole grid prefix [0, last] on one row subset with warm starts and
// calls `visit(k, intercept, coefs)` after each lambda.
template <typename Visit>
bool fit_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const CrossProducts* stats,
              const std::vector<double>& grid, std::size_t last, const Eigen::VectorXd& pf,
              const RidgeConfig& config, Visit&& visit) {
  bool all_converged = true;
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(x.cols());
  if (config.family == Family::linear) {
    const LinearProblem lp = linear_problem(stats ? *stats : cross_products(x, y));
    const double tol = config.tol * response_scale(lp);
    for (std::size_t k = 0; k <= last; ++k) {
      const CdResult cd = cd_minimize(lp.gram, lp.lin, grid[k], pf, delta, config.max_iter, tol);
      all_converged = all_converged && cd.converged;
      visit(k, lp.ybar - lp.xbar.dot(delta), delta);
    }
  } else {
    const double ybar = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
    double intercept = std::log(ybar / (1.0 - ybar));
    for (std::size_t k = 0; k <= last; ++k) {
      RidgeSolution sol = logistic_solve(x, y, grid[k], intercept, delta, pf, config);
      all_converged = all_converged && sol.converged;
      intercept = sol.intercept;
      delta = std::move(sol.coefs);
      visit(k, intercept, delta);
    }
  }
  return all_converged;
}

}  // namespace

double RidgeConfig::effective_min_ratio(std::size_t n, std::size_t m) const {
  if (lambda_min_ratio) return *lambda_min_ratio;
  return m > n ? 1e-2 : 1e-3;
}

void RidgeConfig::validate() const {
  if (n_lambdas < 2) throw ConfigError("ridge.n_lambdas: must be >= 2");
  if (lambda_min_ratio && !(*lambda_min_ratio > 0.0 && *lambda_min_ratio < 1.0)) {
    throw ConfigError("ridge.lambda_min_ratio: must lie in (0, 1)");
  }
  if (cv_folds < 2) throw ConfigError("ridge.cv_folds: must be >= 2");
  if (max_iter < 1) throw ConfigError("ridge.max_iter: must be >= 1");
  if (max_outer < 1) throw ConfigError("ridge.max_outer: must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("ridge.tol: must be positive");
}

Standardized standardize(const Eigen::MatrixXd& matrix) {
  const Eigen::Index n = matrix.rows();
  const Eigen::Index m = matrix.cols();
  if (n < 2) throw DimensionMismatch("standardize needs at least two rows");
  Standardized out;
  out.matrix.resize(n, m);
  out.scaling.mean.resize(static_cast<std::size_t>(m));
  out.scaling.sd.resize(static_cast<std::size_t>(m));
  out.scaling.constant.resize(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto col = matrix.col(j);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n - 1));
    const auto k = static_cast<std::size_t>(j);
    out.scaling.mean[k] = mean;
    out.scaling.sd[k] = sd;
    out.scaling.constant[k] = !(sd > kConstantSd);
    if (out.scaling.constant[k]) {
      out.matrix.col(j).setZero();
    } else {
      out.matrix.col(j) = (col.array() - mean) / sd;
    }
  }
  return out;
}

double ridge_objective(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                       double lambda, double intercept, const Eigen::VectorXd& coefs,
                       Family family, std::span<const double> penalty_factors) {
  const Eigen::VectorXd pf = penalty_vector(penalty_factors, design.cols());
  const double n = static_cast<double>(design.rows());
  const Eigen::VectorXd eta = (design * coefs).array() + intercept;
  double loss = 0.0;
  if (family == Family::linear) {
    loss = (response - eta).squaredNorm() / (2.0 * n);
  } else {
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      loss += binomial_deviance_unit(response(i), logistic_mu(eta(i)));
    }
    loss /= n;
  }
  return loss + lambda * (pf.array() * coefs.array().square()).sum();
}

RidgeSolution ridge_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                          double lambda, const std::optional<Eigen::VectorXd>& warm_start,
                          const RidgeConfig& config, std::span<const double> penalty_factors) {
  if (design.rows() != response.size()) throw DimensionMismatch("design and response row counts differ");
  if (design.rows() < 1) throw DimensionMismatch("design has no rows");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  const Eigen::VectorXd pf = penalty_vector(penalty_factors, design.cols());
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(design.cols());
  if (warm_start) {
    if (warm_start->size() != design.cols()) throw DimensionMismatch("warm start has wrong length");
    delta = *warm_start;
  }

  if (config.family == Family::linear) {
    const LinearProblem lp = linear_problem(cross_products(design, response));
    const CdResult cd = cd_minimize(lp.gram, lp.lin, lambda, pf, delta, config.max_iter,
                                    config.tol * response_scale(lp));
    RidgeSolution sol;
    sol.converged = cd.converged;
    sol.sweeps = cd.sweeps;
    sol.intercept = lp.ybar - lp.xbar.dot(delta);
    sol.coefs = std::move(delta);
    return sol;
  }
  const double ybar = std::clamp(response.mean(), 1e-6, 1.0 - 1e-6);
  const double intercept0 = std::log(ybar / (1.0 - ybar)) - (design * delta).mean();
  return logistic_solve(design, response, lambda, intercept0, std::move(delta), pf, config);
}

std::vector<double> lambda_grid(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                                const RidgeConfig& config, std::span<const double> penalty_factors) {
  config.validate();
  const Eigen::VectorXd pf = penalty_vector(penalty_factors, design.cols());
  const double ratio = config.effective_min_ratio(static_cast<std::size_t>(design.rows()),
                                                  static_cast<std::size_t>(design.cols()));
  return make_grid(lambda_max(design, response, pf), config.n_lambdas, ratio);
}

RidgeFit cross_validate(const TrialDataset& data, const RidgeConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto m = static_cast<Eigen::Index>(data.m());
  const int folds = config.cv_folds;
  if (n < 2 * folds) {
    throw ConfigError("ridge.cv_folds: need at least 2 rows per fold (n=" + std::to_string(n) +
                      ", folds=" + std::to_string(folds) + ")");
  }
  if (config.family != data.family()) {
    throw ConfigError("ridge.family: does not match the dataset family");
  }

  Eigen::MatrixXd raw(n, m + 1);
  raw.col(0) = data.treatment();
  raw.rightCols(m) = data.biomarkers();
  Standardized z = standardize(raw);
  const Eigen::VectorXd& y = data.outcome();

  Eigen::VectorXd pf = Eigen::VectorXd::Ones(m + 1);
  pf(0) = config.penalize_treatment ? 1.0 : 0.0;
  const std::vector<double> grid =
      make_grid(lambda_max(z.matrix, y, pf), config.n_lambdas,
                config.effective_min_ratio(data.n(), data.m()));
  const std::size_t n_lambda = grid.size();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(config.cv_seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<Eigen::Index>> held(static_cast<std::size_t>(folds));
  for (std::size_t pos = 0; pos < order.size(); ++pos) held[pos % folds].push_back(order[pos]);
  for (auto& rows : held) std::sort(rows.begin(), rows.end());

  const bool linear = config.family == Family::linear;
  std::optional<CrossProducts> full;
  if (linear) full = cross_products(z.matrix, y);

  std::vector<std::vector<double>> fold_loss(static_cast<std::size_t>(folds),
                                             std::vector<double>(n_lambda, 0.0));
  bool converged = true;
  for (int f = 0; f < folds; ++f) {
    const auto& test_rows = held[static_cast<std::size_t>(f)];
    std::vector<char> is_test(static_cast<std::size_t>(n), 0);
    for (auto i : test_rows) is_test[static_cast<std::size_t>(i)] = 1;
    std::vector<Eigen::Index> train_rows;
    train_rows.reserve(static_cast<std::size_t>(n) - test_rows.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!is_test[static_cast<std::size_t>(i)]) train_rows.push_back(i);
    }
    const Eigen::MatrixXd x_test = select_rows(z.matrix, test_rows);
    const Eigen::VectorXd y_test = select_rows(y, test_rows);
    auto& loss = fold_loss[static_cast<std::size_t>(f)];
    auto record = [&](std::size_t k, double intercept, const Eigen::VectorXd& delta) {
      const Eigen::VectorXd eta = (x_test * delta).array() + intercept;
      double total = 0.0;
      for (Eigen::Index i = 0; i < eta.size(); ++i) {
        total += linear ? (y_test(i) - eta(i)) * (y_test(i) - eta(i))
                        : binomial_deviance_unit(y_test(i), logistic_mu(eta(i)));
      }
      loss[k] = total / static_cast<double>(eta.size());
    };
    if (linear) {
      const CrossProducts train = *full - cross_products(x_test, y_test);
      converged &= fit_path(z.matrix, y, &train, grid, n_lambda - 1, pf, config, record);
    } else {
      const Eigen::MatrixXd x_train = select_rows(z.matrix, train_rows);
      const Eigen::VectorXd y_train = select_rows(y, train_rows);
      converged &= fit_path(x_train, y_train, nullptr, grid, n_lambda - 1, pf, config, record);
    }
  }

  RidgeFit fit;
  fit.lambda_grid = grid;
  fit.cv_mean.assign(n_lambda, 0.0);
  fit.cv_se.assign(n_lambda, 0.0);
  const double total_rows = static_cast<double>(n);
  for (std::size_t k = 0; k < n_lambda; ++k) {
    double mean = 0.0;
    for (int f = 0; f < folds; ++f) {
      mean += static_cast<double>(held[static_cast<std::size_t>(f)].size()) *
              fold_loss[static_cast<std::size_t>(f)][k];
    }
    mean /= total_rows;
    double var = 0.0;
    for (int f = 0; f < folds; ++f) {
      const double d = fold_loss[static_cast<std::size_t>(f)][k] - mean;
      var += static_cast<double>(held[static_cast<std::size_t>(f)].size()) * d * d;
    }
    var /= total_rows;
    fit.cv_mean[k] = mean;
    fit.cv_se[k] = std::sqrt(var / static_cast<double>(folds - 1));
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < n_lambda; ++k) {
    if (fit.cv_mean[k] < fit.cv_mean[best]) best = k;
  }
  fit.lambda_opt_index = best;
  fit.lambda_opt = grid[best];

  double intercept = 0.0;
  Eigen::VectorXd delta;
  converged &= fit_path(z.matrix, y, full ? &*full : nullptr, grid, best, pf, config,
                        [&](std::size_t, double b0, const Eigen::VectorXd& d) {
                          intercept = b0;
                          delta = d;
                        });
  fit.intercept = intercept;
  fit.treatment_coef = delta(0);
  fit.biomarker_coefs = delta.tail(m);
  fit.treatment_mean = z.scaling.mean[0];
  fit.treatment_sd = z.scaling.sd[0];
  fit.scaling.mean.assign(z.scaling.mean.begin() + 1, z.scaling.mean.end());
  fit.scaling.sd.assign(z.scaling.sd.begin() + 1, z.scaling.sd.end());
  fit.scaling.constant.assign(z.scaling.constant.begin() + 1, z.scaling.constant.end());
  fit.converged = converged;
  return fit;
}

RidgeRanking rank_coefficients(const Eigen::VectorXd& coefs, const std::vector<bool>& constant) {
  const auto m = static_cast<std::size_t>(coefs.size());
  if (!constant.empty() && constant.size() != m) {
    throw DimensionMismatch("constant-column flags do not match coefficient count");
  }
  auto is_constant = [&](std::size_t j) { return !constant.empty() && constant[j]; };
  RidgeRanking ranking;
  ranking.order.resize(m);
  std::iota(ranking.order.begin(), ranking.order.end(), std::size_t{0});
  std::sort(ranking.order.begin(), ranking.order.end(), [&](std::size_t a, std::size_t b) {
    if (is_constant(a) != is_constant(b)) return is_constant(b);
    const double sa = std::abs(coefs(static_cast<Eigen::Index>(a)));
    const double sb = std::abs(coefs(static_cast<Eigen::Index>(b)));
    if (sa != sb) return sa > sb;
    return a < b;
  });
  ranking.scores.reserve(m);
  for (auto j : ranking.order) ranking.scores.push_back(std::abs(coefs(static_cast<Eigen::Index>(j))));
  return ranking;
}

RidgeRanking rank_biomarkers(const RidgeFit& fit) {
  return rank_coefficients(fit.biomarker_coefs, fit.scaling.constant);
}

}  // namespace twostage
