#pragma once

#include "twostage/model_core.hpp"
#include "twostage/ridge.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace twostage {

// Stamped on every report produced from logistic fits.
inline constexpr std::string_view kLogisticCaveat =
    "family-wise error rate control is only guaranteed for linear regression; logistic "
    "interaction estimates can be biased when the biomarker is associated with the outcome";

enum class ScreeningMode { threshold, rank };
enum class ScreeningMethod { none, univariate_threshold, univariate_rank, ridge_rank };

std::string_view to_string(ScreeningMethod method);

// All biomarker indices are 0-based.
struct ScreeningOutcome {
  ScreeningMode mode = ScreeningMode::threshold;
  ScreeningMethod method = ScreeningMethod::none;
  // Threshold mode: ascending indices passing stage 1.
  std::vector<std::size_t> selected;
  // Rank mode: a permutation, strongest first.
  std::vector<std::size_t> ranking;
  // Marginal p-values or |ridge coefficients|, indexed by biomarker.
  std::vector<double> stage1_stats;
  // Constant biomarkers; never selected, ranked last.
  std::vector<std::size_t> degenerate;
};

enum class RowStatus { tested, untested, degenerate, failed };
std::string_view to_string(RowStatus status);
RowStatus parse_row_status(std::string_view text);

struct ReportRow {
  std::size_t index = 0;
  std::string name;
  RowStatus status = RowStatus::tested;
  std::optional<WaldResult> wald;
  // NaN unless tested.
  double p_value = 0.0;
  double threshold = 0.0;
  bool rejected = false;
  std::string note;
};

// One row per biomarker, in column order. rejected == (p_value < threshold).
struct StageTwoReport {
  std::vector<ReportRow> rows;
  double overall_alpha = 0.05;
  std::string method;
  std::string caveat;

  std::size_t tested() const;
  std::vector<std::size_t> rejected_indices() const;
};

struct WeightScheme {
  int bucket_size = 5;
  double overall_alpha = 0.05;
  void validate() const;
};

// Stage-2 interaction tests for every biomarker, computed once and shared by
// the procedures below.
struct InteractionPanel {
  std::vector<std::optional<WaldResult>> results;
  std::vector<RowStatus> status;
  std::vector<std::string> notes;
  std::vector<std::string> names;
  Family family = Family::linear;

  std::size_t m() const { return results.size(); }
  std::vector<double> p_values() const;
};

InteractionPanel interaction_panel(const TrialDataset& data);

StageTwoReport single_step(const TrialDataset& data, double overall_alpha);
StageTwoReport single_step(const InteractionPanel& panel, double overall_alpha);

ScreeningOutcome univariate_threshold_screen(const TrialDataset& data, double alpha1);
// Ascending marginal p-value, ties by index, degenerate columns last.
ScreeningOutcome univariate_rank_screen(const TrialDataset& data);
ScreeningOutcome ridge_rank_screen(const TrialDataset& data, const RidgeConfig& config);

// Bonferroni at overall_alpha / m* over the selected biomarkers.
StageTwoReport stage2_bonferroni(const TrialDataset& data, const ScreeningOutcome& screening,
                                 double overall_alpha);
StageTwoReport stage2_bonferroni(const InteractionPanel& panel, const ScreeningOutcome& screening,
                                 double overall_alpha);

// Threshold for 0-based rank r: bucket k spans 2^k * B ranks starting at
// B * (2^k - 1) and carries (alpha / 2^(k+1)) / (2^k * B).
double bucket_threshold(std::size_t rank, const WeightScheme& scheme);
std::vector<double> weighted_thresholds(std::size_t m, const WeightScheme& scheme);

StageTwoReport weighted_hypothesis_test(std::span<const std::size_t> ranking,
                                        std::span<const double> p_values,
                                        const WeightScheme& scheme);
StageTwoReport weighted_stage2(const InteractionPanel& panel, std::span<const std::size_t> ranking,
                               const WeightScheme& scheme, std::string method);

StageTwoReport univariate_rank_procedure(const TrialDataset& data, const WeightScheme& scheme);
StageTwoReport ridge_rank_procedure(const TrialDataset& data, const RidgeConfig& ridge_config,
                                    const WeightScheme& scheme);

enum class AdjustMethod { bonferroni, sidak, holm, hochberg };
std::string_view to_string(AdjustMethod method);
AdjustMethod parse_adjust_method(std::string_view text);

struct AdjustResult {
  // Level each hypothesis was compared against. For holm and hochberg this is
  // the step level at the hypothesis' sorted position.
  std::vector<double> thresholds;
  std::vector<bool> rejected;
};

double sidak_threshold(double alpha, std::size_t m);

// Strict p < level comparisons throughout; equal p-values are ordered by index.
AdjustResult adjust(std::span<const double> p_values, AdjustMethod method, double alpha);

}  // namespace twostage
