#include "twostage/simulate.hpp"

#include "twostage/errors.hpp"
#include "twostage/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace twostage {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

RejectionSets to_sets(std::span<const StageTwoReport> reports) {
  RejectionSets sets;
  sets.reserve(reports.size());
  for (const auto& r : reports) sets.emplace_back(r.rejected_indices());
  return sets;
}

std::string format_label(const char* key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s=%g", key, value);
  return buf;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (n < 1) throw ConfigError("scenario.n: must be >= 1");
  if (m < 1) throw ConfigError("scenario.m: must be >= 1");
  if (cluster_size < 1 || m % cluster_size != 0) {
    throw ConfigError("scenario.cluster_size: must divide m");
  }
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("scenario.rho: must lie in [0, 1)");
  if (!(noise_sd > 0.0)) throw ConfigError("scenario.noise_sd: must be positive");
  if (!(treatment_prob > 0.0 && treatment_prob < 1.0)) {
    throw ConfigError("scenario.treatment_prob: must lie in (0, 1)");
  }
  std::set<std::size_t> seen;
  for (const auto& e : effects) {
    if (e.index >= m) throw ConfigError("scenario.effects: index out of range");
    if (!seen.insert(e.index).second) throw ConfigError("scenario.effects: duplicate index");
  }
  if (dependence && dependence->index >= m) {
    throw ConfigError("scenario.dependence.index: out of range");
  }
  if (dependence && dependence->partner && *dependence->partner >= m) {
    throw ConfigError("scenario.dependence.partner: out of range");
  }
}

bool ScenarioConfig::has_interaction(std::size_t j) const {
  for (const auto& e : effects) {
    if (e.index == j && e.interaction_effect != 0.0) return true;
  }
  return false;
}

std::vector<bool> ScenarioConfig::interacting_clusters() const {
  std::vector<bool> out(cluster_count(), false);
  for (const auto& e : effects) {
    if (e.interaction_effect != 0.0) out[cluster_of(e.index)] = true;
  }
  return out;
}

ScenarioConfig paper_defaults(std::size_t n, std::size_t m, double rho) {
  ScenarioConfig c;
  c.n = n;
  c.m = m;
  c.cluster_size = 20;
  c.rho = rho;
  c.treatment_effect = 0.5;
  c.intercept = 0.0;
  c.noise_sd = 5.0;
  c.treatment_prob = 0.5;
  c.effects = {{0, 0.5, 1.0}};
  const auto markers = std::clamp<std::size_t>((4 * m + 500) / 1000, 1, 4);
  for (std::size_t k = 1; k <= markers && 20 * k < m; ++k) c.effects.push_back({20 * k, 1.5, 0.0});
  return c;
}

TrialDataset generate(const ScenarioConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(config.n);
  const auto m = static_cast<Eigen::Index>(config.m);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  // Single-factor construction: X_j = sqrt(rho) Z_c + sqrt(1 - rho) E_j.
  Eigen::MatrixXd x(n, m);
  const double shared = std::sqrt(config.rho);
  const double own = std::sqrt(1.0 - config.rho);
  Eigen::VectorXd factor(n);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (static_cast<std::size_t>(j) % config.cluster_size == 0) {
      for (Eigen::Index i = 0; i < n; ++i) factor(i) = normal(rng);
    }
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = shared * factor(i) + own * normal(rng);
  }

  Eigen::VectorXd t(n);
  const double base_logit = std::log(config.treatment_prob / (1.0 - config.treatment_prob));
  for (Eigen::Index i = 0; i < n; ++i) {
    double prob = config.treatment_prob;
    if (config.dependence) {
      const auto& dep = *config.dependence;
      double driver = x(i, static_cast<Eigen::Index>(dep.index));
      if (dep.partner) driver *= x(i, static_cast<Eigen::Index>(*dep.partner));
      const double eta = base_logit + dep.strength * driver;
      prob = 1.0 / (1.0 + std::exp(-eta));
    }
    t(i) = uniform(rng) < prob ? 1.0 : 0.0;
  }

  Eigen::VectorXd y = Eigen::VectorXd::Constant(n, config.intercept) + config.treatment_effect * t;
  for (const auto& e : config.effects) {
    const auto col = x.col(static_cast<Eigen::Index>(e.index));
    y += e.main_effect * col + e.interaction_effect * col.cwiseProduct(t);
  }
  for (Eigen::Index i = 0; i < n; ++i) y(i) += config.noise_sd * normal(rng);

  return TrialDataset(std::move(y), std::move(t), std::move(x), {}, Family::linear);
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::single_step: return "single_step";
    case Method::uni_threshold: return "uni_threshold";
    case Method::uni_rank: return "uni_rank";
    case Method::ridge_rank: return "ridge_rank";
  }
  return "single_step";
}

Method parse_method(std::string_view text) {
  if (text == "single_step") return Method::single_step;
  if (text == "uni_threshold") return Method::uni_threshold;
  if (text == "uni_rank") return Method::uni_rank;
  if (text == "ridge_rank") return Method::ridge_rank;
  throw ConfigError("method: expected single_step, uni_threshold, uni_rank or ridge_rank, got '" +
                    std::string(text) + "'");
}

std::vector<Method> all_methods() {
  return {Method::single_step, Method::uni_threshold, Method::uni_rank, Method::ridge_rank};
}

double cluster_discovery_power(const RejectionSets& sets, const ScenarioConfig& config) {
  const std::vector<bool> interacting = config.interacting_clusters();
  std::size_t n_clusters = 0;
  for (bool b : interacting) n_clusters += b ? 1 : 0;
  if (n_clusters == 0) throw NoInteractionCluster();
  std::size_t hits = 0;
  std::size_t trials = 0;
  for (const auto& set : sets) {
    if (!set) continue;
    std::vector<bool> found(interacting.size(), false);
    for (auto j : *set) found[config.cluster_of(j)] = true;
    for (std::size_t c = 0; c < interacting.size(); ++c) {
      if (!interacting[c]) continue;
      ++trials;
      if (found[c]) ++hits;
    }
  }
  return trials ? static_cast<double>(hits) / static_cast<double>(trials) : kNaN;
}

double cluster_discovery_power(std::span<const StageTwoReport> reports, const ScenarioConfig& config) {
  return cluster_discovery_power(to_sets(reports), config);
}

double fwer_estimate(const RejectionSets& sets, const ScenarioConfig& config,
                     FwerGranularity granularity) {
  const std::vector<bool> interacting = config.interacting_clusters();
  std::size_t errors = 0;
  std::size_t used = 0;
  for (const auto& set : sets) {
    if (!set) continue;
    ++used;
    bool error = false;
    for (auto j : *set) {
      error = granularity == FwerGranularity::cluster ? !interacting[config.cluster_of(j)]
                                                      : !config.has_interaction(j);
      if (error) break;
    }
    if (error) ++errors;
  }
  return used ? static_cast<double>(errors) / static_cast<double>(used) : kNaN;
}

double fwer_estimate(std::span<const StageTwoReport> reports, const ScenarioConfig& config,
                     FwerGranularity granularity) {
  return fwer_estimate(to_sets(reports), config, granularity);
}

double mc_standard_error(double estimate, std::size_t replicates) {
  if (replicates == 0 || !std::isfinite(estimate)) return kNaN;
  return std::sqrt(estimate * (1.0 - estimate) / static_cast<double>(replicates));
}

std::uint64_t derived_cv_seed(std::uint64_t data_seed) {
  // splitmix64 finalizer
  std::uint64_t z = data_seed + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<std::vector<std::size_t>> run_methods(const TrialDataset& data,
                                                  std::span<const Method> methods,
                                                  const StudyOptions& options,
                                                  std::uint64_t cv_seed) {
  const WeightScheme scheme{options.bucket_size, options.overall_alpha};
  const InteractionPanel panel = interaction_panel(data);
  std::optional<ScreeningOutcome> univariate;
  auto univariate_screen = [&]() -> const ScreeningOutcome& {
    if (!univariate) univariate = univariate_rank_screen(data);
    return *univariate;
  };

  std::vector<std::vector<std::size_t>> out;
  out.reserve(methods.size());
  for (Method method : methods) {
    switch (method) {
      case Method::single_step:
        out.push_back(single_step(panel, options.overall_alpha).rejected_indices());
        break;
      case Method::uni_threshold: {
        ScreeningOutcome screen = univariate_screen();
        screen.mode = ScreeningMode::threshold;
        screen.method = ScreeningMethod::univariate_threshold;
        screen.ranking.clear();
        for (std::size_t j = 0; j < data.m(); ++j) {
          if (screen.stage1_stats[j] < options.alpha1) screen.selected.push_back(j);
        }
        out.push_back(stage2_bonferroni(panel, screen, options.overall_alpha).rejected_indices());
        break;
      }
      case Method::uni_rank:
        out.push_back(
            weighted_stage2(panel, univariate_screen().ranking, scheme, "uni_rank").rejected_indices());
        break;
      case Method::ridge_rank: {
        RidgeConfig ridge = options.ridge;
        ridge.cv_seed = cv_seed;
        const ScreeningOutcome screen = ridge_rank_screen(data, ridge);
        out.push_back(weighted_stage2(panel, screen.ranking, scheme, "ridge_rank").rejected_indices());
        break;
      }
    }
  }
  return out;
}

PowerTable run_study(std::span<const ScenarioConfig> grid, std::span<const Method> methods,
                     std::size_t replicates, std::uint64_t base_seed, const StudyOptions& options) {
  if (grid.empty()) throw ConfigError("simulate: scenario grid is empty");
  if (methods.empty()) throw ConfigError("simulate: no methods requested");
  if (replicates < 1) throw ConfigError("replicates: must be >= 1");
  for (const auto& s : grid) s.validate();
  options.ridge.validate();
  WeightScheme{options.bucket_size, options.overall_alpha}.validate();
  if (!(options.alpha1 > 0.0 && options.alpha1 < 1.0)) throw ConfigError("alpha1: must lie in (0, 1)");

  const std::size_t n_methods = methods.size();
  // sets[s][k][r]: rejections of method k on replicate r of scenario s.
  std::vector<std::vector<RejectionSets>> sets(
      grid.size(), std::vector<RejectionSets>(n_methods, RejectionSets(replicates)));

  parallel_for(grid.size() * replicates, options.threads, [&](std::size_t unit) {
    const std::size_t s = unit / replicates;
    const std::size_t r = unit % replicates;
    ScenarioConfig config = grid[s];
    config.seed = base_seed + r;
    try {
      const TrialDataset data = generate(config);
      const auto rejected = run_methods(data, methods, options, derived_cv_seed(config.seed));
      for (std::size_t k = 0; k < n_methods; ++k) sets[s][k][r] = rejected[k];
    } catch (const std::exception&) {
      // Recorded as a failure; the replicate is excluded from every method.
    }
  });

  PowerTable table;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    const ScenarioConfig& config = grid[s];
    bool any_interaction = false;
    for (bool b : config.interacting_clusters()) any_interaction = any_interaction || b;
    for (std::size_t k = 0; k < n_methods; ++k) {
      const RejectionSets& rs = sets[s][k];
      PowerRow row;
      row.label = config.label;
      row.method = methods[k];
      for (const auto& set : rs) (set ? row.replicates : row.failures) += 1;
      row.power = any_interaction ? cluster_discovery_power(rs, config) : kNaN;
      row.power_se = mc_standard_error(row.power, row.replicates);
      row.fwer = fwer_estimate(rs, config, options.granularity);
      row.fwer_se = mc_standard_error(row.fwer, row.replicates);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

Scale parse_scale(std::string_view text) {
  if (text == "desk") return Scale::desk;
  if (text == "paper") return Scale::paper;
  throw ConfigError("scale: expected 'desk' or 'paper'");
}

std::vector<std::string> preset_names() {
  return {"fig1a", "fig1b", "fig1c", "fig1d", "global_null"};
}

Preset make_preset(std::string_view name, Scale scale) {
  const std::size_t m = scale == Scale::desk ? 200 : 1000;
  Preset preset;
  preset.name = std::string(name);
  preset.default_replicates = scale == Scale::desk ? 200 : 1000;
  const std::vector<std::size_t> sample_sizes = {500, 1000, 1500, 2000, 2500};

  if (name == "fig1a" || name == "fig1b") {
    const double rho = name == "fig1a" ? 0.6 : 0.0;
    for (auto n : sample_sizes) {
      ScenarioConfig c = paper_defaults(n, m, rho);
      c.label = format_label("n", static_cast<double>(n));
      preset.grid.push_back(std::move(c));
    }
  } else if (name == "fig1c") {
    for (double beta : {-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5}) {
      ScenarioConfig c = paper_defaults(1500, m, 0.0);
      c.effects[0].main_effect = beta;
      c.label = format_label("beta_x1", beta);
      preset.grid.push_back(std::move(c));
    }
  } else if (name == "fig1d") {
    for (double sd : {1.0, 2.5, 5.0, 7.5, 10.0, 15.0}) {
      ScenarioConfig c = paper_defaults(1500, m, 0.6);
      c.noise_sd = sd;
      c.label = format_label("noise_sd", sd);
      preset.grid.push_back(std::move(c));
    }
  } else if (name == "global_null") {
    const std::size_t n = scale == Scale::desk ? 500 : 1500;
    for (double rho : {0.0, 0.6}) {
      ScenarioConfig c = paper_defaults(n, m, rho);
      c.effects[0].interaction_effect = 0.0;
      c.label = format_label("rho", rho);
      preset.grid.push_back(std::move(c));
    }
  } else {
    throw ConfigError("preset: unknown preset '" + std::string(name) +
                      "' (expected fig1a, fig1b, fig1c, fig1d or global_null)");
  }
  return preset;
}

}  // namespace twostage
