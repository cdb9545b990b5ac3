#pragma once

#include "twostage/model_core.hpp"
#include "twostage/ridge.hpp"
#include "twostage/simulate.hpp"

#include <cstddef>
#include <span>
#include <string_view>

namespace twostage {

enum class IndependenceMode { across_biomarkers, across_replicates };
std::string_view to_string(IndependenceMode mode);
IndependenceMode parse_independence_mode(std::string_view text);

// Pearson correlation between stage-1 and stage-2 statistics, with a
// two-sided t-test (n - 2 df) and a Fisher-z 95% interval.
struct IndependenceReport {
  IndependenceMode mode = IndependenceMode::across_biomarkers;
  double estimate = 0.0;
  double p_value = 1.0;
  double ci_low = -1.0;
  double ci_high = 1.0;
  std::size_t n_pairs = 0;

  bool ci_contains(double value) const { return ci_low <= value && value <= ci_high; }
};

IndependenceReport pearson_report(std::span<const double> x, std::span<const double> y,
                                  IndependenceMode mode);

// Pairs (ridge coefficient of X_j on the standardized scale, interaction Wald
// statistic of X_j) over all non-degenerate biomarkers of one dataset.
IndependenceReport independence_across_biomarkers(const TrialDataset& data,
                                                  const RidgeConfig& ridge_config);

struct ReplicatePairs {
  std::vector<double> ridge_coef;
  std::vector<double> interaction_estimate;
  std::size_t failures = 0;
};

// Replicate r is generated with seed config.seed + r. Throws
// IndexHasInteraction if biomarker j carries an interaction effect.
ReplicatePairs collect_replicate_pairs(const ScenarioConfig& config, std::size_t j,
                                       std::size_t replicates, const RidgeConfig& ridge_config,
                                       unsigned threads = 0);

// Correlation across replicates of (ridge coefficient of X_j, estimated
// X_j x T interaction).
IndependenceReport independence_across_replicates(const ScenarioConfig& config, std::size_t j,
                                                  std::size_t replicates,
                                                  const RidgeConfig& ridge_config,
                                                  unsigned threads = 0);

}  // namespace twostage
