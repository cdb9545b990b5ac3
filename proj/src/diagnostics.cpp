#include "twostage/diagnostics.hpp"

#include "twostage/errors.hpp"
#include "twostage/parallel.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <optional>

namespace twostage {

std::string_view to_string(IndependenceMode mode) {
  return mode == IndependenceMode::across_biomarkers ? "across_biomarkers" : "across_replicates";
}

IndependenceMode parse_independence_mode(std::string_view text) {
  if (text == "across_biomarkers") return IndependenceMode::across_biomarkers;
  if (text == "across_replicates") return IndependenceMode::across_replicates;
  throw ConfigError("mode: expected 'across_biomarkers' or 'across_replicates', got '" +
                    std::string(text) + "'");
}

IndependenceReport pearson_report(std::span<const double> x, std::span<const double> y,
                                  IndependenceMode mode) {
  if (x.size() != y.size()) throw DimensionMismatch("correlation inputs differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw InsufficientPairs(n);

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw DataError("ZeroVariance", "correlation undefined: one input has zero variance");
  }

  IndependenceReport report;
  report.mode = mode;
  report.n_pairs = n;
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  report.estimate = r;

  const double df = static_cast<double>(n - 2);
  if (std::abs(r) >= 1.0) {
    report.p_value = 0.0;
  } else {
    const double t = r * std::sqrt(df / (1.0 - r * r));
    const boost::math::students_t dist(df);
    report.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }

  if (std::abs(r) >= 1.0) {
    report.ci_low = report.ci_high = r;
  } else if (n <= 3) {
    report.ci_low = -1.0;
    report.ci_high = 1.0;
  } else {
    const double z = std::atanh(r);
    const double half = boost::math::quantile(boost::math::normal(), 0.975) /
                        std::sqrt(static_cast<double>(n - 3));
    report.ci_low = std::tanh(z - half);
    report.ci_high = std::tanh(z + half);
  }
  return report;
}

IndependenceReport independence_across_biomarkers(const TrialDataset& data,
                                                  const RidgeConfig& ridge_config) {
  if (data.m() < 3) throw InsufficientPairs(data.m());
  const RidgeFit fit = cross_validate(data, ridge_config);
  std::vector<double> stage1, stage2;
  for (std::size_t j = 0; j < data.m(); ++j) {
    if (fit.scaling.constant[j]) continue;
    try {
      const WaldResult w = interaction_test(data, j);
      stage1.push_back(fit.biomarker_coefs(static_cast<Eigen::Index>(j)));
      stage2.push_back(w.statistic);
    } catch (const Error&) {
      // Biomarkers without a stage-2 statistic contribute no pair.
    }
  }
  return pearson_report(stage1, stage2, IndependenceMode::across_biomarkers);
}

ReplicatePairs collect_replicate_pairs(const ScenarioConfig& config, std::size_t j,
                                       std::size_t replicates, const RidgeConfig& ridge_config,
                                       unsigned threads) {
  config.validate();
  ridge_config.validate();
  if (j >= config.m) throw ConfigError("biomarker: index out of range");
  if (config.has_interaction(j)) throw IndexHasInteraction(j);

  struct Pair {
    double ridge = 0.0;
    double interaction = 0.0;
  };
  std::vector<std::optional<Pair>> pairs(replicates);
  parallel_for(replicates, threads, [&](std::size_t r) {
    ScenarioConfig c = config;
    c.seed = config.seed + r;
    try {
      const TrialDataset data = generate(c);
      RidgeConfig rc = ridge_config;
      rc.cv_seed = derived_cv_seed(c.seed);
      const RidgeFit fit = cross_validate(data, rc);
      const WaldResult w = interaction_test(data, j);
      pairs[r] = Pair{fit.biomarker_coefs(static_cast<Eigen::Index>(j)), w.estimate};
    } catch (const Error&) {
    }
  });

  ReplicatePairs out;
  for (const auto& p : pairs) {
    if (!p) {
      ++out.failures;
      continue;
    }
    out.ridge_coef.push_back(p->ridge);
    out.interaction_estimate.push_back(p->interaction);
  }
  return out;
}

IndependenceReport independence_across_replicates(const ScenarioConfig& config, std::size_t j,
                                                  std::size_t replicates,
                                                  const RidgeConfig& ridge_config,
                                                  unsigned threads) {
  const ReplicatePairs pairs = collect_replicate_pairs(config, j, replicates, ridge_config, threads);
  return pearson_report(pairs.ridge_coef, pairs.interaction_estimate,
                        IndependenceMode::across_replicates);
}

}  // namespace twostage
