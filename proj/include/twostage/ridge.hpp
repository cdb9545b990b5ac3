#pragma once

#include "twostage/model_core.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace twostage {

// Settings for the penalized stage-1 screening fit.
//
// The objective is
//   linear:   (1/(2n)) * RSS            + lambda * ||delta||^2
//   logistic: (1/n)    * deviance       + lambda * ||delta||^2
// where ||delta||^2 covers the treatment coefficient (when
// `penalize_treatment`) and every biomarker coefficient, never the
// intercept.
struct RidgeConfig {
  int n_lambdas = 100;
  // Unset means 1e-3, or 1e-2 when there are more biomarkers than rows.
  std::optional<double> lambda_min_ratio;
  int cv_folds = 5;
  std::uint64_t cv_seed = 0;
  bool penalize_treatment = true;
  Family family = Family::linear;
  // Maximum full coordinate sweeps per lambda.
  int max_iter = 10000;
  // Convergence: largest coordinate update in a sweep below `tol`. For the
  // linear family the update is measured in units of the response SD, which
  // keeps the rule independent of the outcome's scale.
  double tol = 1e-4;
  // Outer iteratively-reweighted steps for the logistic family.
  int max_outer = 100;

  double effective_min_ratio(std::size_t n, std::size_t m) const;
  void validate() const;
};

struct Scaling {
  std::vector<double> mean;
  std::vector<double> sd;
  // Columns whose SD is <= 1e-12; these are zeroed rather than scaled.
  std::vector<bool> constant;
};

struct Standardized {
  Eigen::MatrixXd matrix;
  Scaling scaling;
};

// Centres every column on its sample mean and scales it to unit sample SD
// (n - 1 denominator). Constant columns become zero and are flagged.
Standardized standardize(const Eigen::MatrixXd& matrix);

struct RidgeSolution {
  double intercept = 0.0;
  Eigen::VectorXd coefs;
  bool converged = true;
  int sweeps = 0;
};

// Penalized objective value at (intercept, coefs), in the normalization
// documented on RidgeConfig.
double ridge_objective(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                       double lambda, double intercept, const Eigen::VectorXd& coefs,
                       Family family, std::span<const double> penalty_factors = {});

// Coordinate-descent minimizer of the ridge objective at one lambda. The
// intercept is unpenalized and profiled out. `penalty_factors` (default all
// ones) multiplies the penalty per column; 0 leaves a column unpenalized.
RidgeSolution ridge_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                          double lambda, const std::optional<Eigen::VectorXd>& warm_start,
                          const RidgeConfig& config, std::span<const double> penalty_factors = {});

// Log-spaced, strictly descending grid from lambda_max to
// lambda_max * min_ratio, where lambda_max = max_j |x_j' (y - ybar)| / n over
// penalized columns.
std::vector<double> lambda_grid(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                                const RidgeConfig& config,
                                std::span<const double> penalty_factors = {});

struct RidgeFit {
  double intercept = 0.0;
  double treatment_coef = 0.0;
  // Standardized scale.
  Eigen::VectorXd biomarker_coefs;
  double lambda_opt = 0.0;
  std::size_t lambda_opt_index = 0;
  std::vector<double> lambda_grid;
  std::vector<double> cv_mean;
  std::vector<double> cv_se;
  Scaling scaling;
  double treatment_mean = 0.0;
  double treatment_sd = 1.0;
  bool converged = true;
};

// Fits Y ~ T + X_1..X_m with k-fold cross-validated lambda. Folds come from a
// seeded shuffle; lambda_opt minimizes mean held-out loss (ties go to the
// larger lambda); the final fit is refit on all rows along the warm-started
// path down to lambda_opt.
RidgeFit cross_validate(const TrialDataset& data, const RidgeConfig& config);

struct RidgeRanking {
  // 0-based biomarker indices, strongest first.
  std::vector<std::size_t> order;
  std::vector<double> scores;
};

// Descending |standardized coefficient|, ties by ascending index, constant
// columns last. The treatment coefficient is not ranked.
RidgeRanking rank_biomarkers(const RidgeFit& fit);
RidgeRanking rank_coefficients(const Eigen::VectorXd& coefs, const std::vector<bool>& constant = {});

}  // namespace twostage
