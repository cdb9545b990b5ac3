#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace twostage {

enum class Family { linear, logistic };

std::string_view to_string(Family family);
Family parse_family(std::string_view text);

// Outcome, 0/1 treatment and an n x m biomarker panel. Immutable once built,
// so one instance can be shared by concurrent workers.
class TrialDataset {
 public:
  TrialDataset(Eigen::VectorXd outcome, Eigen::VectorXd treatment, Eigen::MatrixXd biomarkers,
               std::vector<std::string> names = {}, Family family = Family::linear);

  const Eigen::VectorXd& outcome() const noexcept { return outcome_; }
  const Eigen::VectorXd& treatment() const noexcept { return treatment_; }
  const Eigen::MatrixXd& biomarkers() const noexcept { return biomarkers_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  Family family() const noexcept { return family_; }

  std::size_t n() const noexcept { return static_cast<std::size_t>(outcome_.size()); }
  std::size_t m() const noexcept { return static_cast<std::size_t>(biomarkers_.cols()); }

  bool has_both_arms() const noexcept;
  // Sample SD <= 1e-12.
  bool is_degenerate(std::size_t j) const;

 private:
  Eigen::VectorXd outcome_;
  Eigen::VectorXd treatment_;
  Eigen::MatrixXd biomarkers_;
  std::vector<std::string> names_;
  Family family_;
};

struct CoefficientFit {
  Eigen::VectorXd estimates;
  // Undefined (NaN) for saturated linear fits where n == p.
  Eigen::MatrixXd covariance;
  std::vector<std::string> coef_names;
  bool converged = true;
  bool separated = false;
  int iterations = 0;
  std::size_t n_used = 0;
};

struct WaldResult {
  double estimate = 0.0;
  double std_error = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
};

// 2 * (1 - Phi(|z|)), computed through erfc so tail values keep precision.
double two_sided_normal_p(double z);

WaldResult wald_test(const CoefficientFit& fit, std::size_t coef);

// Ordinary least squares through Householder QR. Throws RankDeficient when
// the singular-value ratio of R drops below 1e-10.
CoefficientFit fit_linear(const Eigen::MatrixXd& design, const Eigen::VectorXd& response);

struct LogisticOptions {
  int max_iter = 100;
  double tol = 1e-8;
  double separation_norm = 1e3;
};

// Bernoulli maximum likelihood by iteratively reweighted least squares.
// Non-convergence and separation are flagged on the result, not thrown.
CoefficientFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                            const LogisticOptions& options = {});

CoefficientFit fit_family(Family family, const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& response);

// Wald test of the X_j x T coefficient in
//   G(E[Y | X_j, T]) = b0 + bX X_j + bT T + bXT X_j T.
// `j` is a 0-based column index.
WaldResult interaction_test(const TrialDataset& data, std::size_t j);

// Wald test of the slope in G(E[Y | X_j]) = d0 + dX X_j.
WaldResult marginal_test(const TrialDataset& data, std::size_t j);

}  // namespace twostage
