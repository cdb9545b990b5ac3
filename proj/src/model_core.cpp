#include "twostage/model_core.hpp"

#include "twostage/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace twostage {

namespace {

constexpr double kRankTolerance = 1e-10;
constexpr double kDegenerateSd = 1e-12;

double sample_sd(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto n = x.size();
  if (n < 2) return 0.0;
  const double mean = x.mean();
  return std::sqrt((x.array() - mean).square().sum() / static_cast<double>(n - 1));
}

bool is_binary(const Eigen::VectorXd& v) {
  return std::all_of(v.data(), v.data() + v.size(), [](double x) { return x == 0.0 || x == 1.0; });
}

// Ratio check on the singular values of the triangular factor; R has the
// same singular values as the design.
void check_rank(const Eigen::MatrixXd& r) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
  const auto& sv = svd.singularValues();
  const double smax = sv.maxCoeff();
  const double smin = sv.minCoeff();
  if (!(smax > 0.0) || smin / smax < kRankTolerance) {
    throw RankDeficient("design is rank deficient (singular value ratio " +
                        std::to_string(smax > 0.0 ? smin / smax : 0.0) + ")");
  }
}

std::vector<std::string> default_names(Eigen::Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) names.push_back("b" + std::to_string(k));
  return names;
}

struct QrSolve {
  Eigen::VectorXd beta;
  Eigen::MatrixXd r_inv;  // inverse of the upper-triangular factor
};

QrSolve qr_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& response) {
  const Eigen::Index p = design.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  check_rank(r);
  const Eigen::VectorXd qty = (qr.householderQ().transpose() * response).head(p);
  QrSolve out;
  out.beta = r.triangularView<Eigen::Upper>().solve(qty);
  out.r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  return out;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

std::string_view to_string(Family family) {
  return family == Family::linear ? "linear" : "logistic";
}

Family parse_family(std::string_view text) {
  if (text == "linear") return Family::linear;
  if (text == "logistic") return Family::logistic;
  throw ConfigError("family: expected 'linear' or 'logistic', got '" + std::string(text) + "'");
}

TrialDataset::TrialDataset(Eigen::VectorXd outcome, Eigen::VectorXd treatment,
                           Eigen::MatrixXd biomarkers, std::vector<std::string> names,
                           Family family)
    : outcome_(std::move(outcome)),
      treatment_(std::move(treatment)),
      biomarkers_(std::move(biomarkers)),
      names_(std::move(names)),
      family_(family) {
  const auto n = outcome_.size();
  if (n < 1) throw InvalidDataset("dataset needs at least one row");
  if (biomarkers_.cols() < 1) throw InvalidDataset("dataset needs at least one biomarker");
  if (treatment_.size() != n || biomarkers_.rows() != n) {
    throw InvalidDataset("outcome, treatment and biomarkers must have the same number of rows");
  }
  if (!outcome_.allFinite() || !treatment_.allFinite() || !biomarkers_.allFinite()) {
    throw InvalidDataset("dataset contains missing or non-finite values");
  }
  if (!is_binary(treatment_)) throw InvalidDataset("treatment entries must be 0 or 1");
  if (family_ == Family::logistic && !is_binary(outcome_)) {
    throw InvalidDataset("logistic outcome entries must be 0 or 1");
  }
  if (names_.empty()) {
    for (Eigen::Index j = 0; j < biomarkers_.cols(); ++j) names_.push_back("X" + std::to_string(j + 1));
  }
  if (names_.size() != static_cast<std::size_t>(biomarkers_.cols())) {
    throw InvalidDataset("expected one name per biomarker column");
  }
}

bool TrialDataset::has_both_arms() const noexcept {
  const double treated = treatment_.sum();
  return treated > 0.0 && treated < static_cast<double>(treatment_.size());
}

bool TrialDataset::is_degenerate(std::size_t j) const {
  return sample_sd(biomarkers_.col(static_cast<Eigen::Index>(j))) <= kDegenerateSd;
}

double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

WaldResult wald_test(const CoefficientFit& fit, std::size_t coef) {
  const auto k = static_cast<Eigen::Index>(coef);
  if (k >= fit.estimates.size()) throw DimensionMismatch("coefficient index out of range");
  WaldResult w;
  w.estimate = fit.estimates(k);
  w.std_error = std::sqrt(fit.covariance(k, k));
  if (!(w.std_error > 0.0) || !std::isfinite(w.std_error)) {
    throw RankDeficient("standard error is not positive for coefficient " + std::to_string(coef));
  }
  w.statistic = w.estimate / w.std_error;
  w.p_value = two_sided_normal_p(w.statistic);
  return w;
}

CoefficientFit fit_linear(const Eigen::MatrixXd& design, const Eigen::VectorXd& response) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (response.size() != n) throw DimensionMismatch("design and response row counts differ");
  if (p < 1) throw DimensionMismatch("design has no columns");
  if (n < p) throw RankDeficient("fewer rows than columns");

  const QrSolve solved = qr_solve(design, response);
  CoefficientFit fit;
  fit.estimates = solved.beta;
  fit.n_used = static_cast<std::size_t>(n);
  fit.coef_names = default_names(p);
  fit.iterations = 1;
  if (n > p) {
    const double rss = (response - design * solved.beta).squaredNorm();
    const double sigma2 = rss / static_cast<double>(n - p);
    fit.covariance = symmetrize(sigma2 * solved.r_inv * solved.r_inv.transpose());
  } else {
    fit.covariance = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
  }
  return fit;
}

CoefficientFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                            const LogisticOptions& options) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (response.size() != n) throw DimensionMismatch("design and response row counts differ");
  if (p < 1) throw DimensionMismatch("design has no columns");
  if (n <= p) throw RankDeficient("logistic fit needs more rows than columns");
  if (!is_binary(response)) throw InvalidDataset("logistic response must be 0 or 1");

  constexpr double kMuFloor = 1e-12;
  CoefficientFit fit;
  fit.coef_names = default_names(p);
  fit.n_used = static_cast<std::size_t>(n);
  fit.converged = false;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd mu(n), w(n);
  auto update_weights = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = design * b;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = std::clamp(1.0 / (1.0 + std::exp(-eta(i))), kMuFloor, 1.0 - kMuFloor);
      mu(i) = m;
      w(i) = m * (1.0 - m);
    }
    return eta;
  };

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Eigen::VectorXd eta = update_weights(beta);
    const Eigen::VectorXd sw = w.array().sqrt();
    const Eigen::VectorXd z = eta.array() + (response - mu).array() / w.array();
    const Eigen::MatrixXd wx = sw.asDiagonal() * design;
    const Eigen::VectorXd wz = sw.asDiagonal() * z;
    QrSolve step;
    try {
      step = qr_solve(wx, wz);
    } catch (const RankDeficient&) {
      // Weights collapse toward zero as fitted probabilities saturate.
      if (iter == 1) throw;
      fit.separated = true;
      break;
    }
    const double change = (step.beta - beta).cwiseAbs().maxCoeff();
    beta = step.beta;
    fit.iterations = iter;
    if (beta.norm() > options.separation_norm) {
      fit.separated = true;
      break;
    }
    if (change < options.tol) {
      fit.converged = true;
      break;
    }
  }

  update_weights(beta);
  fit.estimates = beta;
  const Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
  fit.covariance = symmetrize(info.ldlt().solve(Eigen::MatrixXd::Identity(p, p)));
  return fit;
}

CoefficientFit fit_family(Family family, const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& response) {
  return family == Family::linear ? fit_linear(design, response) : fit_logistic(design, response);
}

namespace {

WaldResult checked_wald(const CoefficientFit& fit, std::size_t coef, std::size_t j) {
  if (fit.separated) {
    throw Separation("logistic fit for biomarker " + std::to_string(j + 1) + " shows separation");
  }
  if (!fit.converged) {
    throw Separation("logistic fit for biomarker " + std::to_string(j + 1) + " did not converge");
  }
  return wald_test(fit, coef);
}

void check_index(const TrialDataset& data, std::size_t j) {
  if (j >= data.m()) throw DimensionMismatch("biomarker index out of range");
  if (data.is_degenerate(j)) throw DegenerateBiomarker(j);
}

}  // namespace

WaldResult interaction_test(const TrialDataset& data, std::size_t j) {
  check_index(data, j);
  if (!data.has_both_arms()) throw SingleArm();
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto x = data.biomarkers().col(static_cast<Eigen::Index>(j));
  Eigen::MatrixXd design(n, 4);
  design.col(0).setOnes();
  design.col(1) = x;
  design.col(2) = data.treatment();
  design.col(3) = x.cwiseProduct(data.treatment());
  CoefficientFit fit = fit_family(data.family(), design, data.outcome());
  fit.coef_names = {"intercept", data.names()[j], "treatment", data.names()[j] + ":treatment"};
  return checked_wald(fit, 3, j);
}

WaldResult marginal_test(const TrialDataset& data, std::size_t j) {
  check_index(data, j);
  const auto n = static_cast<Eigen::Index>(data.n());
  Eigen::MatrixXd design(n, 2);
  design.col(0).setOnes();
  design.col(1) = data.biomarkers().col(static_cast<Eigen::Index>(j));
  CoefficientFit fit = fit_family(data.family(), design, data.outcome());
  fit.coef_names = {"intercept", data.names()[j]};
  return checked_wald(fit, 1, j);
}

}  // namespace twostage
