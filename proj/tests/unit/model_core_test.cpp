#include "fixtures.hpp"
#include "twostage/errors.hpp"
#include "twostage/model_core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace twostage;

namespace {

TrialDataset null_trial(std::uint64_t seed, std::size_t n, std::size_t m) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd x = fixtures::random_matrix(n, m, rng);
  std::bernoulli_distribution arm(0.5);
  std::normal_distribution<double> z;
  Eigen::VectorXd t(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    t(i) = arm(rng) ? 1.0 : 0.0;
    y(i) = 0.3 * t(i) + 0.8 * x(i, 0) + z(rng);
  }
  return {y, t, x};
}

}  // namespace

TEST(FitLinear, SaturatedTwoByTwo) {
  Eigen::MatrixXd d(2, 2);
  d << 1, 0, 1, 1;
  const auto fit = fit_linear(d, Eigen::Vector2d(0, 1));
  EXPECT_EQ(fit.estimates(0), 0.0);
  EXPECT_EQ(fit.estimates(1), 1.0);
  EXPECT_TRUE(std::isnan(fit.covariance(0, 0)));
}

TEST(FitLinear, NoiselessRecovery) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd x = fixtures::random_matrix(50, 3, rng);
  Eigen::MatrixXd d(50, 4);
  d << Eigen::VectorXd::Ones(50), x;
  const Eigen::Vector4d beta(1.0, -2.0, 0.5, 3.0);
  const auto fit = fit_linear(d, d * beta);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(fit.estimates(k), beta(k), 1e-10);
}

TEST(FitLinear, MatchesNormalEquations) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd d = fixtures::random_matrix(40, 4, rng);
    const Eigen::VectorXd y = fixtures::random_matrix(40, 1, rng).col(0);
    const auto fit = fit_linear(d, y);
    const auto ref = oracle::normal_equations(fixtures::to_oracle(d), fixtures::to_vec(y));
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(fit.estimates(k), ref[k], 1e-8 * std::max(1.0, std::abs(ref[k])));
  }
}

TEST(FitLinear, SimpleRegressionSlope) {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd xy = fixtures::random_matrix(40, 2, rng);
  Eigen::MatrixXd d(40, 2);
  d << Eigen::VectorXd::Ones(40), xy.col(0);
  const auto fit = fit_linear(d, xy.col(1));
  const Eigen::VectorXd xc = xy.col(0).array() - xy.col(0).mean();
  const Eigen::VectorXd yc = xy.col(1).array() - xy.col(1).mean();
  EXPECT_NEAR(fit.estimates(1), xc.dot(yc) / xc.squaredNorm(), 1e-10);
}

TEST(FitLinear, RejectsCollinearDesign) {
  Eigen::MatrixXd d(4, 3);
  d << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8;
  EXPECT_THROW(fit_linear(d, Eigen::Vector4d(1, 2, 3, 4)), RankDeficient);
  EXPECT_THROW(fit_linear(d.topRows(2), Eigen::Vector2d(1, 2)), RankDeficient);
}

TEST(FitLogistic, TwoByTwoTableGivesLogOddsRatio) {
  // Cells (T, Y): (0, 0) 20, (0, 1) 10, (1, 0) 10, (1, 1) 20.
  const int counts[2][2] = {{20, 10}, {10, 20}};
  Eigen::MatrixXd d(60, 2);
  Eigen::VectorXd y(60);
  int row = 0;
  for (int t = 0; t < 2; ++t) {
    for (int v = 0; v < 2; ++v) {
      for (int c = 0; c < counts[t][v]; ++c, ++row) {
        d.row(row) << 1.0, t;
        y(row) = v;
      }
    }
  }
  const auto fit = fit_logistic(d, y);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.estimates(0), std::log(0.5), 1e-8);
  EXPECT_NEAR(fit.estimates(1), std::log(4.0), 1e-8);
}

TEST(FitLogistic, SymmetricDataHasZeroSlope) {
  Eigen::MatrixXd d(10, 2);
  Eigen::VectorXd y(10);
  const double xs[] = {-2, -1, 0, 1, 2};
  for (int i = 0; i < 5; ++i) {
    d.row(2 * i) << 1, xs[i];
    d.row(2 * i + 1) << 1, xs[i];
    y(2 * i) = 1;
    y(2 * i + 1) = 0;
  }
  const auto fit = fit_logistic(d, y);
  EXPECT_NEAR(fit.estimates(1), 0.0, 1e-6);
}

TEST(FitLogistic, MatchesNewtonRaphson) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd d = fixtures::random_matrix(200, 3, rng);
    d.col(0).setOnes();
    std::uniform_real_distribution<double> u;
    Eigen::VectorXd y(200);
    for (int i = 0; i < 200; ++i) {
      const double eta = 0.2 + 0.7 * d(i, 1) - 0.5 * d(i, 2);
      y(i) = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    }
    const auto fit = fit_logistic(d, y);
    const auto ref = oracle::newton_logistic(fixtures::to_oracle(d), fixtures::to_vec(y));
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(fit.estimates(k), ref[k], 1e-6);
  }
}

TEST(FitLogistic, FlagsSeparation) {
  Eigen::MatrixXd d(6, 2);
  d << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
  const auto fit = fit_logistic(d, (Eigen::VectorXd(6) << 0, 0, 0, 1, 1, 1).finished());
  EXPECT_TRUE(fit.separated || !fit.converged);
}

TEST(Wald, NormalReference) {
  EXPECT_NEAR(two_sided_normal_p(1.959963984540054), 0.05, 1e-12);
  EXPECT_NEAR(two_sided_normal_p(0.0), 1.0, 1e-15);
  EXPECT_GT(two_sided_normal_p(30.0), 0.0);
}

TEST(InteractionTest, NullCalibration) {
  int rejections = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    if (interaction_test(null_trial(seed, 2000, 1), 0).p_value < 0.05) ++rejections;
  }
  EXPECT_GE(rejections, 30);
  EXPECT_LE(rejections, 70);
}

TEST(InteractionTest, DetectsUnitInteraction) {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd x = fixtures::random_matrix(1500, 1, rng);
    std::bernoulli_distribution arm(0.5);
    std::normal_distribution<double> z;
    Eigen::VectorXd t(1500), y(1500);
    for (int i = 0; i < 1500; ++i) {
      t(i) = arm(rng) ? 1.0 : 0.0;
      y(i) = 0.5 * t(i) + 0.5 * x(i, 0) + x(i, 0) * t(i) + 5.0 * z(rng);
    }
    const auto w = interaction_test(TrialDataset(y, t, x), 0);
    if (w.statistic > 0 && w.p_value < 0.05) ++hits;
  }
  EXPECT_GT(hits, 10);
}

TEST(MarginalTest, PerfectFit) {
  const auto data = null_trial(8, 50, 1);
  const TrialDataset same(data.biomarkers().col(0), data.treatment(), data.biomarkers());
  const auto w = marginal_test(same, 0);
  EXPECT_NEAR(w.estimate, 1.0, 1e-12);
  EXPECT_LT(w.p_value, 1e-10);
}

TEST(MarginalTest, NullCalibration) {
  int rejections = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    // Column 1 is independent of the outcome.
    if (marginal_test(null_trial(seed, 200, 2), 1).p_value < 0.05) ++rejections;
  }
  EXPECT_GE(rejections, 30);
  EXPECT_LE(rejections, 70);
}

TEST(MarginalTest, SimpleSlope) {
  const auto data = null_trial(9, 60, 1);
  const Eigen::VectorXd xc = data.biomarkers().col(0).array() - data.biomarkers().col(0).mean();
  const Eigen::VectorXd yc = data.outcome().array() - data.outcome().mean();
  EXPECT_NEAR(marginal_test(data, 0).estimate, xc.dot(yc) / xc.squaredNorm(), 1e-10);
}

TEST(InteractionTest, OutcomeShiftInvariance) {
  const auto data = null_trial(5, 150, 2);
  const TrialDataset shifted(data.outcome().array() + 100.0, data.treatment(), data.biomarkers());
  const auto a = interaction_test(data, 1);
  const auto b = interaction_test(shifted, 1);
  EXPECT_NEAR(a.estimate, b.estimate, 1e-8);
  EXPECT_NEAR(a.p_value, b.p_value, 1e-8);
  EXPECT_NEAR(marginal_test(data, 0).estimate, marginal_test(shifted, 0).estimate, 1e-8);
}

TEST(InteractionTest, ArmRelabelFlipsSignOnly) {
  const auto data = null_trial(6, 150, 2);
  const TrialDataset flipped(data.outcome(), 1.0 - data.treatment().array(), data.biomarkers());
  for (std::size_t j = 0; j < 2; ++j) {
    const auto a = interaction_test(data, j);
    const auto b = interaction_test(flipped, j);
    EXPECT_NEAR(a.estimate, -b.estimate, 1e-10);
    EXPECT_NEAR(a.p_value, b.p_value, 1e-10);
  }
}

TEST(InteractionTest, StatisticCarriesEstimateSign) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto w = interaction_test(null_trial(seed, 100, 1), 0);
    EXPECT_EQ(std::signbit(w.statistic), std::signbit(w.estimate));
    EXPECT_NEAR(w.statistic, w.estimate / w.std_error, 1e-12);
  }
}

TEST(InteractionTest, Errors) {
  auto data = null_trial(7, 30, 2);
  Eigen::MatrixXd x = data.biomarkers();
  x.col(1).setConstant(2.0);
  EXPECT_THROW(interaction_test(TrialDataset(data.outcome(), data.treatment(), x), 1),
               DegenerateBiomarker);
  EXPECT_THROW(interaction_test(TrialDataset(data.outcome(), Eigen::VectorXd::Zero(30), x), 0),
               SingleArm);
  EXPECT_THROW(interaction_test(data, 5), DimensionMismatch);
}

TEST(TrialDataset, RejectsBadInput) {
  Eigen::VectorXd y = Eigen::VectorXd::Ones(3);
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 1);
  EXPECT_THROW(TrialDataset(y, Eigen::Vector3d(0, 1, 2), x), InvalidDataset);
  EXPECT_THROW(TrialDataset(y, Eigen::Vector2d(0, 1), x), InvalidDataset);
  y(0) = std::nan("");
  EXPECT_THROW(TrialDataset(y, Eigen::Vector3d(0, 1, 0), x), InvalidDataset);
  EXPECT_THROW(TrialDataset(Eigen::Vector3d(0, 2, 1), Eigen::Vector3d(0, 1, 0), x, {}, Family::logistic),
               InvalidDataset);
}
