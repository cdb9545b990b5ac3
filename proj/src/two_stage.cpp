#include "twostage/two_stage.hpp"

#include "twostage/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace twostage {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string caveat_for(Family family) {
  return family == Family::logistic ? std::string(kLogisticCaveat) : std::string();
}

ReportRow row_from_panel(const InteractionPanel& panel, std::size_t j, double threshold) {
  ReportRow row;
  row.index = j;
  row.name = panel.names[j];
  row.status = panel.status[j];
  row.note = panel.notes[j];
  row.wald = panel.results[j];
  row.p_value = row.wald ? row.wald->p_value : kNaN;
  row.threshold = threshold;
  row.rejected = row.p_value < row.threshold;
  return row;
}

void check_alpha(double alpha, const char* field) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError(std::string(field) + ": must lie in (0, 1)");
  }
}

// Interaction tests for the listed biomarkers only; the others are marked
// untested.
InteractionPanel partial_panel(const TrialDataset& data, std::span<const std::size_t> indices) {
  InteractionPanel panel;
  const std::size_t m = data.m();
  panel.results.assign(m, std::nullopt);
  panel.status.assign(m, RowStatus::untested);
  panel.notes.assign(m, "");
  panel.names = data.names();
  panel.family = data.family();
  for (auto j : indices) {
    try {
      panel.results[j] = interaction_test(data, j);
      panel.status[j] = RowStatus::tested;
    } catch (const DegenerateBiomarker& e) {
      panel.status[j] = RowStatus::degenerate;
      panel.notes[j] = e.kind();
    } catch (const Error& e) {
      panel.status[j] = RowStatus::failed;
      panel.notes[j] = e.kind() + ": " + e.what();
    }
  }
  return panel;
}

// Stage-1 order for a per-biomarker statistic: `better(a, b)` on finite
// values, non-finite (degenerate or failed) entries last, ties by index.
template <typename Better>
std::vector<std::size_t> order_by(const std::vector<double>& stats, Better better) {
  std::vector<std::size_t> order(stats.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool fa = std::isfinite(stats[a]);
    const bool fb = std::isfinite(stats[b]);
    if (fa != fb) return fa;
    if (fa && stats[a] != stats[b]) return better(stats[a], stats[b]);
    return a < b;
  });
  return order;
}

void check_permutation(std::span<const std::size_t> ranking, std::size_t m) {
  if (ranking.size() != m) {
    throw InvalidRanking("ranking has " + std::to_string(ranking.size()) + " entries for " +
                         std::to_string(m) + " biomarkers");
  }
  std::vector<char> seen(m, 0);
  for (auto j : ranking) {
    if (j >= m || seen[j]) throw InvalidRanking("ranking is not a permutation of the biomarkers");
    seen[j] = 1;
  }
}

}  // namespace

std::string_view to_string(ScreeningMethod method) {
  switch (method) {
    case ScreeningMethod::none: return "none";
    case ScreeningMethod::univariate_threshold: return "univariate_threshold";
    case ScreeningMethod::univariate_rank: return "univariate_rank";
    case ScreeningMethod::ridge_rank: return "ridge_rank";
  }
  return "none";
}

std::string_view to_string(RowStatus status) {
  switch (status) {
    case RowStatus::tested: return "tested";
    case RowStatus::untested: return "untested";
    case RowStatus::degenerate: return "degenerate";
    case RowStatus::failed: return "failed";
  }
  return "failed";
}

RowStatus parse_row_status(std::string_view text) {
  if (text == "tested") return RowStatus::tested;
  if (text == "untested") return RowStatus::untested;
  if (text == "degenerate") return RowStatus::degenerate;
  if (text == "failed") return RowStatus::failed;
  throw DataError("ParseError", "unknown row status '" + std::string(text) + "'");
}

std::size_t StageTwoReport::tested() const {
  return static_cast<std::size_t>(std::count_if(
      rows.begin(), rows.end(), [](const ReportRow& r) { return r.status == RowStatus::tested; }));
}

std::vector<std::size_t> StageTwoReport::rejected_indices() const {
  std::vector<std::size_t> out;
  for (const auto& r : rows) {
    if (r.rejected) out.push_back(r.index);
  }
  return out;
}

void WeightScheme::validate() const {
  if (bucket_size < 1) throw ConfigError("bucket_size: must be >= 1");
  check_alpha(overall_alpha, "alpha");
}

std::vector<double> InteractionPanel::p_values() const {
  std::vector<double> p(results.size(), kNaN);
  for (std::size_t j = 0; j < results.size(); ++j) {
    if (results[j]) p[j] = results[j]->p_value;
  }
  return p;
}

InteractionPanel interaction_panel(const TrialDataset& data) {
  std::vector<std::size_t> all(data.m());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return partial_panel(data, all);
}

StageTwoReport single_step(const TrialDataset& data, double overall_alpha) {
  check_alpha(overall_alpha, "alpha");
  return single_step(interaction_panel(data), overall_alpha);
}

StageTwoReport single_step(const InteractionPanel& panel, double overall_alpha) {
  check_alpha(overall_alpha, "alpha");
  StageTwoReport report;
  report.overall_alpha = overall_alpha;
  report.method = "single_step";
  report.caveat = caveat_for(panel.family);
  const double threshold = overall_alpha / static_cast<double>(panel.m());
  for (std::size_t j = 0; j < panel.m(); ++j) report.rows.push_back(row_from_panel(panel, j, threshold));
  return report;
}

ScreeningOutcome univariate_threshold_screen(const TrialDataset& data, double alpha1) {
  check_alpha(alpha1, "alpha1");
  ScreeningOutcome out = univariate_rank_screen(data);
  out.mode = ScreeningMode::threshold;
  out.method = ScreeningMethod::univariate_threshold;
  out.ranking.clear();
  for (std::size_t j = 0; j < data.m(); ++j) {
    if (out.stage1_stats[j] < alpha1) out.selected.push_back(j);
  }
  return out;
}

ScreeningOutcome univariate_rank_screen(const TrialDataset& data) {
  ScreeningOutcome out;
  out.mode = ScreeningMode::rank;
  out.method = ScreeningMethod::univariate_rank;
  out.stage1_stats.assign(data.m(), kNaN);
  for (std::size_t j = 0; j < data.m(); ++j) {
    try {
      out.stage1_stats[j] = marginal_test(data, j).p_value;
    } catch (const DegenerateBiomarker&) {
      out.degenerate.push_back(j);
    } catch (const Error&) {
      // Failed stage-1 fits rank with the degenerate columns at the end.
    }
  }
  out.ranking = order_by(out.stage1_stats, [](double a, double b) { return a < b; });
  return out;
}

ScreeningOutcome ridge_rank_screen(const TrialDataset& data, const RidgeConfig& config) {
  const RidgeFit fit = cross_validate(data, config);
  const RidgeRanking ranking = rank_biomarkers(fit);
  ScreeningOutcome out;
  out.mode = ScreeningMode::rank;
  out.method = ScreeningMethod::ridge_rank;
  out.ranking = ranking.order;
  out.stage1_stats.resize(data.m());
  for (std::size_t j = 0; j < data.m(); ++j) {
    out.stage1_stats[j] = std::abs(fit.biomarker_coefs(static_cast<Eigen::Index>(j)));
    if (fit.scaling.constant[j]) out.degenerate.push_back(j);
  }
  return out;
}

StageTwoReport stage2_bonferroni(const TrialDataset& data, const ScreeningOutcome& screening,
                                 double overall_alpha) {
  if (screening.mode != ScreeningMode::threshold) {
    throw ConfigError("stage2_bonferroni needs a threshold-mode screening outcome");
  }
  return stage2_bonferroni(partial_panel(data, screening.selected), screening, overall_alpha);
}

StageTwoReport stage2_bonferroni(const InteractionPanel& panel, const ScreeningOutcome& screening,
                                 double overall_alpha) {
  check_alpha(overall_alpha, "alpha");
  if (screening.mode != ScreeningMode::threshold) {
    throw ConfigError("stage2_bonferroni needs a threshold-mode screening outcome");
  }
  StageTwoReport report;
  report.overall_alpha = overall_alpha;
  report.method = "uni_threshold";
  report.caveat = caveat_for(panel.family);
  const std::size_t m_star = screening.selected.size();
  const double threshold = m_star > 0 ? overall_alpha / static_cast<double>(m_star) : kNaN;
  std::vector<char> chosen(panel.m(), 0);
  for (auto j : screening.selected) {
    if (j >= panel.m()) throw DimensionMismatch("selected biomarker index out of range");
    chosen[j] = 1;
  }
  for (std::size_t j = 0; j < panel.m(); ++j) {
    if (chosen[j]) {
      report.rows.push_back(row_from_panel(panel, j, threshold));
    } else {
      ReportRow row;
      row.index = j;
      row.name = panel.names[j];
      row.status = panel.status[j] == RowStatus::degenerate ? RowStatus::degenerate
                                                            : RowStatus::untested;
      row.p_value = kNaN;
      row.threshold = kNaN;
      row.rejected = false;
      row.note = "not selected at stage 1";
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

double bucket_threshold(std::size_t rank, const WeightScheme& scheme) {
  const std::size_t b = static_cast<std::size_t>(scheme.bucket_size);
  // Bucket k holds ranks [b (2^k - 1), b (2^(k+1) - 1)).
  int k = 0;
  std::size_t end = b;
  while (rank >= end) {
    ++k;
    end = b * ((std::size_t{1} << (k + 1)) - 1);
  }
  const double bucket_alpha = std::ldexp(scheme.overall_alpha, -(k + 1));
  const double bucket_count = std::ldexp(static_cast<double>(b), k);
  return bucket_alpha / bucket_count;
}

std::vector<double> weighted_thresholds(std::size_t m, const WeightScheme& scheme) {
  scheme.validate();
  std::vector<double> out(m);
  for (std::size_t r = 0; r < m; ++r) out[r] = bucket_threshold(r, scheme);
  return out;
}

StageTwoReport weighted_hypothesis_test(std::span<const std::size_t> ranking,
                                        std::span<const double> p_values,
                                        const WeightScheme& scheme) {
  const std::size_t m = p_values.size();
  check_permutation(ranking, m);
  const std::vector<double> by_rank = weighted_thresholds(m, scheme);
  StageTwoReport report;
  report.overall_alpha = scheme.overall_alpha;
  report.method = "weighted";
  report.rows.resize(m);
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t j = ranking[r];
    ReportRow& row = report.rows[j];
    row.index = j;
    row.name = "X" + std::to_string(j + 1);
    row.p_value = p_values[j];
    row.status = std::isfinite(row.p_value) ? RowStatus::tested : RowStatus::untested;
    row.threshold = by_rank[r];
    row.rejected = row.p_value < row.threshold;
  }
  return report;
}

StageTwoReport weighted_stage2(const InteractionPanel& panel, std::span<const std::size_t> ranking,
                               const WeightScheme& scheme, std::string method) {
  check_permutation(ranking, panel.m());
  const std::vector<double> by_rank = weighted_thresholds(panel.m(), scheme);
  StageTwoReport report;
  report.overall_alpha = scheme.overall_alpha;
  report.method = std::move(method);
  report.caveat = caveat_for(panel.family);
  report.rows.resize(panel.m());
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    const std::size_t j = ranking[r];
    report.rows[j] = row_from_panel(panel, j, by_rank[r]);
  }
  return report;
}

StageTwoReport univariate_rank_procedure(const TrialDataset& data, const WeightScheme& scheme) {
  scheme.validate();
  const ScreeningOutcome screen = univariate_rank_screen(data);
  return weighted_stage2(interaction_panel(data), screen.ranking, scheme, "uni_rank");
}

StageTwoReport ridge_rank_procedure(const TrialDataset& data, const RidgeConfig& ridge_config,
                                    const WeightScheme& scheme) {
  scheme.validate();
  const ScreeningOutcome screen = ridge_rank_screen(data, ridge_config);
  return weighted_stage2(interaction_panel(data), screen.ranking, scheme, "ridge_rank");
}

std::string_view to_string(AdjustMethod method) {
  switch (method) {
    case AdjustMethod::bonferroni: return "bonferroni";
    case AdjustMethod::sidak: return "sidak";
    case AdjustMethod::holm: return "holm";
    case AdjustMethod::hochberg: return "hochberg";
  }
  return "bonferroni";
}

AdjustMethod parse_adjust_method(std::string_view text) {
  if (text == "bonferroni") return AdjustMethod::bonferroni;
  if (text == "sidak") return AdjustMethod::sidak;
  if (text == "holm") return AdjustMethod::holm;
  if (text == "hochberg") return AdjustMethod::hochberg;
  throw ConfigError("adjust.method: expected bonferroni, sidak, holm or hochberg");
}

double sidak_threshold(double alpha, std::size_t m) {
  return -std::expm1(std::log1p(-alpha) / static_cast<double>(m));
}

AdjustResult adjust(std::span<const double> p_values, AdjustMethod method, double alpha) {
  check_alpha(alpha, "alpha");
  const std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidDataset("p-values must lie in [0, 1]");
  }
  AdjustResult out;
  out.thresholds.assign(m, 0.0);
  out.rejected.assign(m, false);
  if (m == 0) return out;

  if (method == AdjustMethod::bonferroni || method == AdjustMethod::sidak) {
    const double level = method == AdjustMethod::bonferroni ? alpha / static_cast<double>(m)
                                                            : sidak_threshold(alpha, m);
    for (std::size_t j = 0; j < m; ++j) {
      out.thresholds[j] = level;
      out.rejected[j] = p_values[j] < level;
    }
    return out;
  }

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p_values[a] != p_values[b] ? p_values[a] < p_values[b] : a < b;
  });
  for (std::size_t k = 0; k < m; ++k) {
    out.thresholds[order[k]] = alpha / static_cast<double>(m - k);
  }
  if (method == AdjustMethod::holm) {
    for (std::size_t k = 0; k < m; ++k) {
      if (!(p_values[order[k]] < out.thresholds[order[k]])) break;
      out.rejected[order[k]] = true;
    }
  } else {
    std::size_t count = 0;
    for (std::size_t k = m; k > 0; --k) {
      if (p_values[order[k - 1]] < out.thresholds[order[k - 1]]) {
        count = k;
        break;
      }
    }
    for (std::size_t k = 0; k < count; ++k) out.rejected[order[k]] = true;
  }
  return out;
}

}  // namespace twostage
