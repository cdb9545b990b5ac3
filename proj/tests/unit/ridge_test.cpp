#include "fixtures.hpp"
#include "twostage/errors.hpp"
#include "twostage/ridge.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace twostage;

namespace {

RidgeConfig tight() {
  RidgeConfig c;
  c.tol = 1e-13;
  c.max_iter = 200000;
  return c;
}

TrialDataset sparse_trial(std::uint64_t seed, std::size_t n = 500, std::size_t m = 50) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd x = fixtures::random_matrix(n, m, rng);
  std::bernoulli_distribution arm(0.5);
  std::normal_distribution<double> z;
  Eigen::VectorXd t(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    t(i) = arm(rng) ? 1.0 : 0.0;
    y(i) = 0.5 * t(i) + x(i, 0) + x(i, 1) + x(i, 2) - x(i, 3) - x(i, 4) + z(rng);
  }
  return {y, t, x};
}

double l2(const Eigen::VectorXd& v) { return v.norm(); }

}  // namespace

TEST(Standardize, SimpleColumn) {
  Eigen::MatrixXd m(3, 2);
  m << 1, 5, 2, 5, 3, 5;
  const auto s = standardize(m);
  EXPECT_NEAR(s.matrix(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(s.matrix(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(s.matrix(2, 0), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.scaling.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.scaling.sd[0], 1.0);
  EXPECT_FALSE(s.scaling.constant[0]);
  EXPECT_TRUE(s.scaling.constant[1]);
  EXPECT_TRUE(s.matrix.col(1).isZero(0.0));
}

TEST(Standardize, Idempotent) {
  std::mt19937_64 rng(2);
  const auto once = standardize(fixtures::random_matrix(30, 4, rng)).matrix;
  const auto twice = standardize(once).matrix;
  EXPECT_LT((once - twice).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Standardize, NeedsTwoRows) {
  EXPECT_THROW(standardize(Eigen::MatrixXd::Ones(1, 2)), DimensionMismatch);
}

TEST(RidgeSolve, ThreeByTwoClosedForm) {
  Eigen::MatrixXd x(3, 2);
  x << 1, 2, 2, 1, 4, 3;
  const Eigen::MatrixXd z = standardize(x).matrix;
  const Eigen::Vector3d y(1, 0, 3);
  const auto sol = ridge_solve(z, y, 0.5, std::nullopt, tight());
  EXPECT_NEAR(sol.coefs(0), 0.346738856264552, 1e-8);
  EXPECT_NEAR(sol.coefs(1), 0.50920245398773, 1e-8);
  EXPECT_NEAR(sol.intercept, 4.0 / 3.0, 1e-8);
  const auto ref = oracle::closed_form_ridge(fixtures::to_oracle(z), fixtures::to_vec(y), 0.5);
  EXPECT_NEAR(sol.coefs(0), ref[1], 1e-8);
  EXPECT_NEAR(sol.coefs(1), ref[2], 1e-8);
}

TEST(RidgeSolve, MatchesClosedFormOnRandomInstances) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> nd(20, 100), pd(2, 10);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = nd(rng), p = pd(rng);
    const Eigen::MatrixXd z = standardize(fixtures::random_matrix(n, p, rng)).matrix;
    const Eigen::VectorXd y = fixtures::random_matrix(n, 1, rng).col(0);
    for (double lambda : {0.0, 0.1, 1.0, 10.0}) {
      const auto sol = ridge_solve(z, y, lambda, std::nullopt, tight());
      const auto ref = oracle::closed_form_ridge(fixtures::to_oracle(z), fixtures::to_vec(y), lambda);
      for (int j = 0; j < p; ++j) {
        EXPECT_NEAR(sol.coefs(j), ref[j + 1], 1e-6 * std::max(1.0, std::abs(ref[j + 1])));
      }
      // Optimality certificate.
      const Eigen::VectorXd rc = Eigen::Map<const Eigen::VectorXd>(ref.data() + 1, p);
      EXPECT_LE(ridge_objective(z, y, lambda, sol.intercept, sol.coefs, Family::linear),
                ridge_objective(z, y, lambda, ref[0], rc, Family::linear) + 1e-10);
    }
  }
}

TEST(RidgeSolve, ZeroPenaltyIsLeastSquares) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd z = standardize(fixtures::random_matrix(60, 4, rng)).matrix;
  const Eigen::VectorXd y = fixtures::random_matrix(60, 1, rng).col(0);
  Eigen::MatrixXd d(60, 5);
  d << Eigen::VectorXd::Ones(60), z;
  const auto ols = fit_linear(d, y);
  const auto sol = ridge_solve(z, y, 0.0, std::nullopt, tight());
  EXPECT_NEAR(sol.intercept, ols.estimates(0), 1e-6);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(sol.coefs(j), ols.estimates(j + 1), 1e-6);
}

TEST(RidgeSolve, HugePenaltyShrinksToZero) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd z = standardize(fixtures::random_matrix(50, 6, rng)).matrix;
  const Eigen::VectorXd y = 10.0 * fixtures::random_matrix(50, 1, rng).col(0);
  const auto sol = ridge_solve(z, y, 1e6, std::nullopt, RidgeConfig{});
  EXPECT_LT(sol.coefs.cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_NEAR(sol.intercept, y.mean(), 1e-6);
}

TEST(RidgeSolve, UnpenalizedColumnMatchesOracle) {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd z = standardize(fixtures::random_matrix(40, 3, rng)).matrix;
  const Eigen::VectorXd y = fixtures::random_matrix(40, 1, rng).col(0);
  const std::vector<double> pf{0.0, 1.0, 1.0};
  const auto sol = ridge_solve(z, y, 2.0, std::nullopt, tight(), pf);
  const auto ref = oracle::closed_form_ridge(fixtures::to_oracle(z), fixtures::to_vec(y), 2.0, pf);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(sol.coefs(j), ref[j + 1], 1e-8);
}

TEST(RidgeSolve, MonotoneShrinkage) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd z = standardize(fixtures::random_matrix(80, 8, rng)).matrix;
  const Eigen::VectorXd y = fixtures::random_matrix(80, 1, rng).col(0);
  const auto grid = lambda_grid(z, y, RidgeConfig{});
  double previous = 0.0;
  for (double lambda : grid) {
    const double norm = l2(ridge_solve(z, y, lambda, std::nullopt, tight()).coefs);
    EXPECT_LE(previous, norm + 1e-8);
    previous = norm;
  }
}

TEST(RidgeSolve, LogisticObjectiveNotAboveNeighbours) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd z = standardize(fixtures::random_matrix(120, 3, rng)).matrix;
  std::uniform_real_distribution<double> u;
  Eigen::VectorXd y(120);
  for (int i = 0; i < 120; ++i) y(i) = u(rng) < 1.0 / (1.0 + std::exp(-z(i, 0))) ? 1.0 : 0.0;
  RidgeConfig c = tight();
  c.family = Family::logistic;
  const auto sol = ridge_solve(z, y, 0.05, std::nullopt, c);
  const double best = ridge_objective(z, y, 0.05, sol.intercept, sol.coefs, Family::logistic);
  for (int j = 0; j < 3; ++j) {
    for (double h : {-1e-4, 1e-4}) {
      Eigen::VectorXd moved = sol.coefs;
      moved(j) += h;
      EXPECT_LE(best, ridge_objective(z, y, 0.05, sol.intercept, moved, Family::logistic) + 1e-12);
    }
  }
}

TEST(LambdaGrid, Endpoints) {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd z = standardize(fixtures::random_matrix(30, 3, rng)).matrix;
  const Eigen::VectorXd y = fixtures::random_matrix(30, 1, rng).col(0);
  RidgeConfig c;
  c.n_lambdas = 2;
  c.lambda_min_ratio = 0.01;
  const auto grid = lambda_grid(z, y, c);
  ASSERT_EQ(grid.size(), 2u);
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double top = (z.transpose() * yc).cwiseAbs().maxCoeff() / 30.0;
  EXPECT_NEAR(grid[0], top, 1e-14);
  EXPECT_NEAR(grid[1], 0.01 * top, 1e-15);
}

TEST(LambdaGrid, StrictlyDescendingAndLinearInResponseScale) {
  std::mt19937_64 rng(10);
  const Eigen::MatrixXd z = standardize(fixtures::random_matrix(40, 5, rng)).matrix;
  const Eigen::VectorXd y = fixtures::random_matrix(40, 1, rng).col(0);
  const auto grid = lambda_grid(z, y, RidgeConfig{});
  ASSERT_EQ(grid.size(), 100u);
  for (std::size_t k = 1; k < grid.size(); ++k) EXPECT_LT(grid[k], grid[k - 1]);
  EXPECT_GT(grid.back(), 0.0);
  const auto scaled = lambda_grid(z, 7.5 * y, RidgeConfig{});
  EXPECT_NEAR(scaled[0], 7.5 * grid[0], 1e-12 * scaled[0]);
}

TEST(RidgeConfig, Validation) {
  RidgeConfig c;
  c.n_lambdas = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RidgeConfig{};
  c.lambda_min_ratio = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RidgeConfig{};
  c.cv_folds = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_DOUBLE_EQ(RidgeConfig{}.effective_min_ratio(100, 50), 1e-3);
  EXPECT_DOUBLE_EQ(RidgeConfig{}.effective_min_ratio(50, 100), 1e-2);
}

TEST(CrossValidate, Deterministic) {
  const auto data = sparse_trial(3, 200, 20);
  RidgeConfig c;
  c.cv_seed = 42;
  const auto a = cross_validate(data, c);
  const auto b = cross_validate(data, c);
  EXPECT_EQ(a.lambda_opt, b.lambda_opt);
  EXPECT_EQ(a.cv_mean, b.cv_mean);
  EXPECT_EQ(a.cv_se, b.cv_se);
  EXPECT_EQ(a.intercept, b.intercept);
  EXPECT_EQ(a.treatment_coef, b.treatment_coef);
  EXPECT_TRUE(a.biomarker_coefs == b.biomarker_coefs);
}

TEST(CrossValidate, FitInvariants) {
  const auto data = sparse_trial(4, 200, 20);
  for (int folds : {2, 5}) {
    RidgeConfig c;
    c.cv_folds = folds;
    const auto fit = cross_validate(data, c);
    ASSERT_EQ(fit.cv_mean.size(), fit.lambda_grid.size());
    EXPECT_EQ(fit.lambda_grid[fit.lambda_opt_index], fit.lambda_opt);
    EXPECT_GT(fit.lambda_opt, 0.0);
    EXPECT_EQ(fit.biomarker_coefs.size(), 20);
    // Minimum CV error, ties to the larger lambda.
    for (std::size_t k = 0; k < fit.cv_mean.size(); ++k) {
      EXPECT_GE(fit.cv_mean[k], fit.cv_mean[fit.lambda_opt_index]);
      if (k < fit.lambda_opt_index) EXPECT_GT(fit.cv_mean[k], fit.cv_mean[fit.lambda_opt_index]);
    }
  }
}

TEST(CrossValidate, TooFewRowsPerFold) {
  RidgeConfig c;
  c.cv_folds = 10;
  EXPECT_THROW(cross_validate(sparse_trial(1, 15, 3), c), ConfigError);
}

TEST(CrossValidate, InteriorLambdaOnSparseSignal) {
  int interior = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    RidgeConfig c;
    c.cv_seed = seed;
    const auto fit = cross_validate(sparse_trial(seed), c);
    if (fit.lambda_opt_index > 0 && fit.lambda_opt_index + 1 < fit.lambda_grid.size()) ++interior;
  }
  EXPECT_GE(interior, 80);
}

TEST(CrossValidate, RankingIgnoresColumnScale) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> scale(0.1, 20.0);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto data = sparse_trial(seed, 150, 12);
    Eigen::MatrixXd x = data.biomarkers();
    for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) *= scale(rng);
    const TrialDataset rescaled(data.outcome(), data.treatment(), x);
    EXPECT_EQ(rank_biomarkers(cross_validate(data, RidgeConfig{})).order,
              rank_biomarkers(cross_validate(rescaled, RidgeConfig{})).order);
  }
}

TEST(Ranking, Examples) {
  EXPECT_EQ(rank_coefficients(Eigen::Vector3d(0.5, -0.9, 0.1)).order,
            (std::vector<std::size_t>{1, 0, 2}));
  EXPECT_EQ(rank_coefficients(Eigen::Vector2d(0.3, 0.3)).order, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(rank_coefficients(Eigen::VectorXd::Zero(4)).order,
            (std::vector<std::size_t>{0, 1, 2, 3}));
  const auto r = rank_coefficients(Eigen::Vector3d(0.0, 0.2, -0.4), {false, false, true});
  EXPECT_EQ(r.order, (std::vector<std::size_t>{1, 0, 2}));
}

TEST(Ranking, ScoresNonIncreasingPermutation) {
  std::mt19937_64 rng(13);
  const Eigen::VectorXd coefs = fixtures::random_matrix(30, 1, rng).col(0);
  const auto r = rank_coefficients(coefs);
  std::vector<std::size_t> sorted = r.order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t j = 0; j < sorted.size(); ++j) EXPECT_EQ(sorted[j], j);
  for (std::size_t k = 1; k < r.scores.size(); ++k) EXPECT_LE(r.scores[k], r.scores[k - 1]);
}
