#pragma once

#include "twostage/diagnostics.hpp"
#include "twostage/io.hpp"
#include "twostage/ridge.hpp"
#include "twostage/simulate.hpp"
#include "twostage/two_stage.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace twostage {

// Parameters for every subcommand. Flags fill it first; a config document
// then overrides any field it names.
struct RunConfig {
  std::string input;
  std::string outcome;
  std::string treatment;
  bool id_column = false;
  Family family = Family::linear;
  Method method = Method::ridge_rank;
  AdjustMethod adjust_method = AdjustMethod::bonferroni;
  double alpha = 0.05;
  double alpha1 = 0.05;
  int bucket_size = 5;
  std::size_t top_k = 10;
  RidgeConfig ridge;

  std::string preset;
  Scale scale = Scale::desk;
  std::optional<ScenarioConfig> scenario;
  std::vector<Method> methods = all_methods();
  std::optional<std::size_t> replicates;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  FwerGranularity granularity = FwerGranularity::cluster;

  IndependenceMode mode = IndependenceMode::across_biomarkers;
  // 0-based; across_replicates only.
  std::size_t biomarker = 1;

  std::string out_dir = "out";
};

// Applies a JSON document onto `config`. Unknown fields, wrong types and
// out-of-range values raise ConfigError naming the field path.
void apply_config_text(RunConfig& config, const std::string& text);
void apply_config_file(RunConfig& config, const std::string& path);

struct AnalysisResult {
  StageTwoReport report;
  PreprocessLog log;
  // Per screening method ("univariate", "ridge"): biomarker indices, best first.
  std::vector<std::pair<std::string, std::vector<std::size_t>>> top;
};

// analyze: report.tsv, screening_topk.tsv, preprocess.log, summary.json.
AnalysisResult run_analysis(const RunConfig& config);
// simulate: power.tsv, summary.json.
PowerTable run_simulation(const RunConfig& config);
// independence: independence.tsv, summary.json.
IndependenceReport run_independence(const RunConfig& config);
// adjust: adjust.tsv from a one-column file of p-values.
AdjustResult run_adjust(const RunConfig& config);

// 2 for configuration problems, 3 for data problems, 4 otherwise.
int exit_code_for(const std::exception& error);

}  // namespace twostage
