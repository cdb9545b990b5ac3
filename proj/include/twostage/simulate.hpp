#pragma once

#include "twostage/model_core.hpp"
#include "twostage/ridge.hpp"
#include "twostage/two_stage.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace twostage {

struct Effect {
  std::size_t index = 0;  // 0-based biomarker
  double main_effect = 0.0;
  double interaction_effect = 0.0;
};

// Treatment drawn with P(T = 1) = logistic(logit(treatment_prob) + strength *
// X_index), or strength * X_index * X_partner when a partner is set. Breaks
// randomization; used only as a negative control. With Gaussian biomarkers a
// treatment that depends on X_index alone leaves the two stages uncorrelated,
// so a visible violation needs the product form.
struct TreatmentDependence {
  std::size_t index = 0;
  double strength = 0.0;
  std::optional<std::size_t> partner;
};

// Y = b0 + bT T + sum_j (bXj X_j + bXjT X_j T) + eps, eps ~ N(0, noise_sd^2).
// Biomarkers are N(0, 1) with correlation rho inside consecutive clusters of
// `cluster_size` columns and zero across clusters.
struct ScenarioConfig {
  std::string label;
  std::size_t n = 1500;
  std::size_t m = 1000;
  std::size_t cluster_size = 20;
  double rho = 0.0;
  std::vector<Effect> effects;
  double treatment_effect = 0.5;
  double intercept = 0.0;
  double noise_sd = 5.0;
  double treatment_prob = 0.5;
  std::uint64_t seed = 1;
  std::optional<TreatmentDependence> dependence;

  void validate() const;
  std::size_t cluster_of(std::size_t j) const { return j / cluster_size; }
  std::size_t cluster_count() const { return m / cluster_size; }
  bool has_interaction(std::size_t j) const;
  // Clusters containing at least one biomarker with a nonzero interaction.
  std::vector<bool> interacting_clusters() const;
};

// Paper setting: X1 main 0.5 and interaction 1; X21, X41, X61, X81 main 1.5;
// bT = 0.5, b0 = 0, noise SD 5, Bernoulli(0.5) treatment, clusters of 20.
// The main-effect-only markers keep their share of clusters when m shrinks:
// round(4 m / 1000) of them, at least one and at most four (m = 200 keeps X21).
ScenarioConfig paper_defaults(std::size_t n, std::size_t m, double rho);

TrialDataset generate(const ScenarioConfig& config);

enum class Method { single_step, uni_threshold, uni_rank, ridge_rank };
std::string_view to_string(Method method);
Method parse_method(std::string_view text);
std::vector<Method> all_methods();

enum class FwerGranularity { cluster, biomarker };

struct StudyOptions {
  double overall_alpha = 0.05;
  double alpha1 = 0.05;
  int bucket_size = 5;
  RidgeConfig ridge;
  FwerGranularity granularity = FwerGranularity::cluster;
  unsigned threads = 0;
};

// Rejected biomarker indices per replicate; nullopt marks a failed replicate.
using RejectionSets = std::vector<std::optional<std::vector<std::size_t>>>;

// Share of (replicate, interacting cluster) pairs with at least one rejection
// inside the cluster. Throws NoInteractionCluster if no cluster interacts.
double cluster_discovery_power(const RejectionSets& sets, const ScenarioConfig& config);
double cluster_discovery_power(std::span<const StageTwoReport> reports, const ScenarioConfig& config);

// Share of replicates with a rejection in a cluster without interacting
// biomarkers (or, at biomarker granularity, of any non-interacting biomarker).
double fwer_estimate(const RejectionSets& sets, const ScenarioConfig& config,
                     FwerGranularity granularity = FwerGranularity::cluster);
double fwer_estimate(std::span<const StageTwoReport> reports, const ScenarioConfig& config,
                     FwerGranularity granularity = FwerGranularity::cluster);

double mc_standard_error(double estimate, std::size_t replicates);

struct PowerRow {
  std::string label;
  Method method = Method::single_step;
  // NaN when the scenario has no interacting cluster.
  double power = 0.0;
  double power_se = 0.0;
  double fwer = 0.0;
  double fwer_se = 0.0;
  std::size_t replicates = 0;
  std::size_t failures = 0;
};

struct PowerTable {
  std::vector<PowerRow> rows;
};

// Replicate r of every scenario uses seed base_seed + r; the CV fold stream is
// derived from that seed, so all methods see the same datasets and folds.
PowerTable run_study(std::span<const ScenarioConfig> grid, std::span<const Method> methods,
                     std::size_t replicates, std::uint64_t base_seed,
                     const StudyOptions& options = {});

// Runs every method on one dataset and returns the rejected index sets, in
// the order of `methods`.
std::vector<std::vector<std::size_t>> run_methods(const TrialDataset& data,
                                                  std::span<const Method> methods,
                                                  const StudyOptions& options,
                                                  std::uint64_t cv_seed);

std::uint64_t derived_cv_seed(std::uint64_t data_seed);

enum class Scale { desk, paper };
Scale parse_scale(std::string_view text);

struct Preset {
  std::string name;
  std::vector<ScenarioConfig> grid;
  std::size_t default_replicates = 200;
};

// Names: fig1a, fig1b, fig1c, fig1d, global_null.
Preset make_preset(std::string_view name, Scale scale = Scale::desk);
std::vector<std::string> preset_names();

}  // namespace twostage
