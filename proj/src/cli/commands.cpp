#include "twostage/cli.hpp"

#include "twostage/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

namespace twostage {

namespace {

using json = nlohmann::ordered_json;

// ---- config document -------------------------------------------------------

void check_keys(const json& object, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!object.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, value] : object.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) throw ConfigError(path + "." + key + ": unknown field");
  }
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

std::uint64_t as_count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ConfigError(path + ": expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

// Index fields in documents are 1-based, like the report.
std::size_t as_biomarker(const json& v, const std::string& path) {
  const std::uint64_t k = as_count(v, path);
  if (k == 0) throw ConfigError(path + ": biomarker numbers start at 1");
  return static_cast<std::size_t>(k - 1);
}

template <typename Parse>
auto parse_field(const json& v, const std::string& path, Parse parse) {
  const std::string text = as_string(v, path);
  try {
    return parse(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_ridge(RidgeConfig& ridge, const json& j, const std::string& path) {
  check_keys(j, path, {"n_lambdas", "lambda_min_ratio", "cv_folds", "penalize_treatment", "max_iter", "tol"});
  if (j.contains("n_lambdas")) ridge.n_lambdas = static_cast<int>(as_count(j["n_lambdas"], path + ".n_lambdas"));
  if (j.contains("lambda_min_ratio")) {
    ridge.lambda_min_ratio = as_number(j["lambda_min_ratio"], path + ".lambda_min_ratio");
  }
  if (j.contains("cv_folds")) ridge.cv_folds = static_cast<int>(as_count(j["cv_folds"], path + ".cv_folds"));
  if (j.contains("penalize_treatment")) {
    ridge.penalize_treatment = as_bool(j["penalize_treatment"], path + ".penalize_treatment");
  }
  if (j.contains("max_iter")) ridge.max_iter = static_cast<int>(as_count(j["max_iter"], path + ".max_iter"));
  if (j.contains("tol")) ridge.tol = as_number(j["tol"], path + ".tol");
  try {
    ridge.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

ScenarioConfig parse_scenario(const json& j, const std::string& path) {
  check_keys(j, path, {"label", "n", "m", "cluster_size", "rho", "effects", "treatment_effect", "intercept",
                       "noise_sd", "treatment_prob", "dependence"});
  const std::size_t n = j.contains("n") ? as_count(j["n"], path + ".n") : 1500;
  const std::size_t m = j.contains("m") ? as_count(j["m"], path + ".m") : 200;
  const double rho = j.contains("rho") ? as_number(j["rho"], path + ".rho") : 0.0;
  ScenarioConfig c = paper_defaults(n, m, rho);
  c.label = j.contains("label") ? as_string(j["label"], path + ".label") : "scenario";
  if (j.contains("cluster_size")) c.cluster_size = as_count(j["cluster_size"], path + ".cluster_size");
  if (j.contains("treatment_effect")) c.treatment_effect = as_number(j["treatment_effect"], path + ".treatment_effect");
  if (j.contains("intercept")) c.intercept = as_number(j["intercept"], path + ".intercept");
  if (j.contains("noise_sd")) c.noise_sd = as_number(j["noise_sd"], path + ".noise_sd");
  if (j.contains("treatment_prob")) c.treatment_prob = as_number(j["treatment_prob"], path + ".treatment_prob");
  if (j.contains("effects")) {
    const json& list = j["effects"];
    if (!list.is_array()) throw ConfigError(path + ".effects: expected an array");
    c.effects.clear();
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string p = path + ".effects[" + std::to_string(k) + "]";
      check_keys(list[k], p, {"biomarker", "main_effect", "interaction_effect"});
      if (!list[k].contains("biomarker")) throw ConfigError(p + ".biomarker: required");
      Effect e;
      e.index = as_biomarker(list[k]["biomarker"], p + ".biomarker");
      if (list[k].contains("main_effect")) e.main_effect = as_number(list[k]["main_effect"], p + ".main_effect");
      if (list[k].contains("interaction_effect")) {
        e.interaction_effect = as_number(list[k]["interaction_effect"], p + ".interaction_effect");
      }
      c.effects.push_back(e);
    }
  }
  if (j.contains("dependence")) {
    const std::string p = path + ".dependence";
    const json& d = j["dependence"];
    check_keys(d, p, {"biomarker", "strength", "partner"});
    if (!d.contains("biomarker")) throw ConfigError(p + ".biomarker: required");
    TreatmentDependence dep;
    dep.index = as_biomarker(d["biomarker"], p + ".biomarker");
    if (d.contains("strength")) dep.strength = as_number(d["strength"], p + ".strength");
    if (d.contains("partner")) dep.partner = as_biomarker(d["partner"], p + ".partner");
    c.dependence = dep;
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return c;
}

void check_probability(double value, const std::string& path) {
  if (!(value > 0.0 && value < 1.0)) throw ConfigError(path + ": must lie in (0, 1)");
}

// ---- output helpers --------------------------------------------------------

// Numbers in the summary carry the same 6 significant digits as the tables.
json number_json(double value) {
  if (!std::isfinite(value)) return nullptr;
  return std::stod(format_number(value));
}

std::filesystem::path prepare_out_dir(const RunConfig& config) {
  std::filesystem::path dir(config.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("out_dir: cannot create '" + config.out_dir + "': " + ec.message());
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("IoError", "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("IoError", "write failed for '" + path.string() + "'");
}

void write_summary(const std::filesystem::path& dir, const json& summary) {
  write_text(dir / "summary.json", summary.dump(2) + "\n");
}

std::string_view scale_name(Scale scale) { return scale == Scale::desk ? "desk" : "paper"; }

json ridge_json(const RidgeConfig& ridge) {
  json j;
  j["n_lambdas"] = ridge.n_lambdas;
  j["lambda_min_ratio"] = ridge.lambda_min_ratio ? number_json(*ridge.lambda_min_ratio) : json(nullptr);
  j["cv_folds"] = ridge.cv_folds;
  j["penalize_treatment"] = ridge.penalize_treatment;
  j["tol"] = number_json(ridge.tol);
  j["max_iter"] = ridge.max_iter;
  return j;
}

StageTwoReport run_procedure(const TrialDataset& data, const InteractionPanel& panel, Method method,
                             const RunConfig& config, const ScreeningOutcome& univariate,
                             const std::optional<RidgeRanking>& ridge, std::size_t& m_star) {
  const WeightScheme scheme{config.bucket_size, config.alpha};
  switch (method) {
    case Method::single_step:
      return single_step(panel, config.alpha);
    case Method::uni_threshold: {
      ScreeningOutcome screen = univariate;
      screen.mode = ScreeningMode::threshold;
      screen.method = ScreeningMethod::univariate_threshold;
      screen.ranking.clear();
      for (std::size_t j = 0; j < data.m(); ++j) {
        if (screen.stage1_stats[j] < config.alpha1) screen.selected.push_back(j);
      }
      m_star = screen.selected.size();
      return stage2_bonferroni(panel, screen, config.alpha);
    }
    case Method::uni_rank:
      return weighted_stage2(panel, univariate.ranking, scheme, "uni_rank");
    case Method::ridge_rank:
      return weighted_stage2(panel, ridge->order, scheme, "ridge_rank");
  }
  throw ConfigError("method: unsupported");
}

void validate_common(const RunConfig& config) {
  check_probability(config.alpha, "alpha");
  check_probability(config.alpha1, "alpha1");
  if (config.bucket_size < 1) throw ConfigError("bucket_size: must be at least 1");
  if (config.top_k < 1) throw ConfigError("top_k: must be at least 1");
  config.ridge.validate();
}

Ingested load_dataset(const RunConfig& config) {
  if (config.input.empty()) throw ConfigError("input: required");
  if (config.outcome.empty()) throw ConfigError("outcome: required");
  if (config.treatment.empty()) throw ConfigError("treatment: required");
  const RawTable table = read_table(config.input, TableOptions{0, config.id_column});
  return ingest(table, config.outcome, config.treatment, config.family);
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

}  // namespace

void apply_config_text(RunConfig& config, const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  const std::string root = "config";
  check_keys(doc, root,
             {"input", "outcome", "treatment", "id_column", "family", "method", "adjust_method", "alpha",
              "alpha1", "bucket_size", "top_k", "ridge", "preset", "scale", "scenario", "methods", "replicates",
              "seed", "threads", "granularity", "mode", "biomarker", "out_dir"});
  auto at = [&](const char* key) { return root + "." + key; };
  if (doc.contains("input")) config.input = as_string(doc["input"], at("input"));
  if (doc.contains("outcome")) config.outcome = as_string(doc["outcome"], at("outcome"));
  if (doc.contains("treatment")) config.treatment = as_string(doc["treatment"], at("treatment"));
  if (doc.contains("id_column")) config.id_column = as_bool(doc["id_column"], at("id_column"));
  if (doc.contains("family")) config.family = parse_field(doc["family"], at("family"), parse_family);
  if (doc.contains("method")) config.method = parse_field(doc["method"], at("method"), parse_method);
  if (doc.contains("adjust_method")) {
    config.adjust_method = parse_field(doc["adjust_method"], at("adjust_method"), parse_adjust_method);
  }
  if (doc.contains("alpha")) {
    config.alpha = as_number(doc["alpha"], at("alpha"));
    check_probability(config.alpha, at("alpha"));
  }
  if (doc.contains("alpha1")) {
    config.alpha1 = as_number(doc["alpha1"], at("alpha1"));
    check_probability(config.alpha1, at("alpha1"));
  }
  if (doc.contains("bucket_size")) {
    const auto b = as_count(doc["bucket_size"], at("bucket_size"));
    if (b < 1) throw ConfigError(at("bucket_size") + ": must be at least 1");
    config.bucket_size = static_cast<int>(b);
  }
  if (doc.contains("top_k")) {
    config.top_k = as_count(doc["top_k"], at("top_k"));
    if (config.top_k < 1) throw ConfigError(at("top_k") + ": must be at least 1");
  }
  if (doc.contains("ridge")) apply_ridge(config.ridge, doc["ridge"], at("ridge"));
  if (doc.contains("preset")) {
    config.preset = as_string(doc["preset"], at("preset"));
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), config.preset) == names.end()) {
      throw ConfigError(at("preset") + ": unknown preset '" + config.preset + "'");
    }
  }
  if (doc.contains("scale")) config.scale = parse_field(doc["scale"], at("scale"), parse_scale);
  if (doc.contains("scenario")) config.scenario = parse_scenario(doc["scenario"], at("scenario"));
  if (doc.contains("methods")) {
    const json& list = doc["methods"];
    if (!list.is_array() || list.empty()) throw ConfigError(at("methods") + ": expected a nonempty array");
    config.methods.clear();
    for (std::size_t k = 0; k < list.size(); ++k) {
      config.methods.push_back(
          parse_field(list[k], at("methods") + "[" + std::to_string(k) + "]", parse_method));
    }
  }
  if (doc.contains("replicates")) {
    config.replicates = as_count(doc["replicates"], at("replicates"));
    if (*config.replicates < 1) throw ConfigError(at("replicates") + ": must be at least 1");
  }
  if (doc.contains("seed")) config.seed = as_count(doc["seed"], at("seed"));
  if (doc.contains("threads")) config.threads = static_cast<unsigned>(as_count(doc["threads"], at("threads")));
  if (doc.contains("granularity")) {
    const std::string g = as_string(doc["granularity"], at("granularity"));
    if (g == "cluster") {
      config.granularity = FwerGranularity::cluster;
    } else if (g == "biomarker") {
      config.granularity = FwerGranularity::biomarker;
    } else {
      throw ConfigError(at("granularity") + ": expected 'cluster' or 'biomarker'");
    }
  }
  if (doc.contains("mode")) config.mode = parse_field(doc["mode"], at("mode"), parse_independence_mode);
  if (doc.contains("biomarker")) config.biomarker = as_biomarker(doc["biomarker"], at("biomarker"));
  if (doc.contains("out_dir")) config.out_dir = as_string(doc["out_dir"], at("out_dir"));
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(config, ss.str());
}

AnalysisResult run_analysis(const RunConfig& config) {
  validate_common(config);
  Ingested ingested = load_dataset(config);
  const TrialDataset& data = ingested.data;

  RidgeConfig ridge = config.ridge;
  ridge.family = data.family();
  ridge.cv_seed = config.seed;

  const InteractionPanel panel = interaction_panel(data);
  const ScreeningOutcome univariate = univariate_rank_screen(data);
  const RidgeFit fit = cross_validate(data, ridge);
  const RidgeRanking ranking = rank_biomarkers(fit);

  AnalysisResult result;
  std::size_t m_star = data.m();
  result.report = run_procedure(data, panel, config.method, config, univariate, ranking, m_star);
  result.log = std::move(ingested.log);

  const std::size_t k = std::min(config.top_k, data.m());
  result.top.emplace_back("univariate",
                          std::vector<std::size_t>(univariate.ranking.begin(), univariate.ranking.begin() + k));
  result.top.emplace_back("ridge", std::vector<std::size_t>(ranking.order.begin(), ranking.order.begin() + k));

  const auto dir = prepare_out_dir(config);
  std::ostringstream report;
  write_report(report, result.report);
  write_text(dir / "report.tsv", report.str());

  std::ostringstream top;
  top << "screening\trank\tindex\tname\tstatistic\n";
  for (const auto& [name, order] : result.top) {
    for (std::size_t r = 0; r < order.size(); ++r) {
      const std::size_t j = order[r];
      const double stat = name == "univariate" ? univariate.stage1_stats[j]
                                               : fit.biomarker_coefs(static_cast<Eigen::Index>(j));
      top << name << '\t' << r + 1 << '\t' << j + 1 << '\t' << data.names()[j] << '\t' << format_number(stat)
          << '\n';
    }
  }
  write_text(dir / "screening_topk.tsv", top.str());
  write_text(dir / "preprocess.log", join_lines(result.log.lines()));

  json summary;
  summary["command"] = "analyze";
  summary["input"] = config.input;
  summary["outcome"] = config.outcome;
  summary["treatment"] = config.treatment;
  summary["family"] = std::string(to_string(data.family()));
  summary["method"] = std::string(to_string(config.method));
  summary["alpha"] = number_json(config.alpha);
  summary["alpha1"] = number_json(config.alpha1);
  summary["bucket_size"] = config.bucket_size;
  summary["seed"] = config.seed;
  summary["n"] = data.n();
  summary["m"] = data.m();
  summary["tested"] = result.report.tested();
  summary["m_star"] = m_star;
  json rejected = json::array();
  for (std::size_t j : result.report.rejected_indices()) {
    rejected.push_back({{"index", j + 1}, {"name", data.names()[j]}});
  }
  summary["rejected"] = rejected;
  summary["caveat"] = result.report.caveat.empty() ? json(nullptr) : json(result.report.caveat);
  json r = ridge_json(ridge);
  r["lambda_opt"] = number_json(fit.lambda_opt);
  r["converged"] = fit.converged;
  summary["ridge"] = r;
  summary["top_k"] = k;
  summary["files"] = {"report.tsv", "screening_topk.tsv", "preprocess.log", "summary.json"};
  write_summary(dir, summary);
  return result;
}

PowerTable run_simulation(const RunConfig& config) {
  validate_common(config);
  std::vector<ScenarioConfig> grid;
  std::size_t replicates = 200;
  if (config.scenario) {
    grid.push_back(*config.scenario);
  } else if (!config.preset.empty()) {
    Preset preset = make_preset(config.preset, config.scale);
    grid = std::move(preset.grid);
    replicates = preset.default_replicates;
  } else {
    throw ConfigError("preset: required unless an inline scenario is given");
  }
  if (config.replicates) replicates = *config.replicates;

  StudyOptions options;
  options.overall_alpha = config.alpha;
  options.alpha1 = config.alpha1;
  options.bucket_size = config.bucket_size;
  options.ridge = config.ridge;
  options.granularity = config.granularity;
  options.threads = config.threads;
  PowerTable table = run_study(grid, config.methods, replicates, config.seed, options);

  const auto dir = prepare_out_dir(config);
  std::ostringstream out;
  out << "point\tsweep\tvalue\tmethod\tpower\tpower_se\tfwer\tfwer_se\treplicates\tfailures\n";
  for (const auto& row : table.rows) {
    std::string sweep = "NA", value = "NA";
    if (const auto eq = row.label.find('='); eq != std::string::npos) {
      sweep = row.label.substr(0, eq);
      value = row.label.substr(eq + 1);
    }
    out << row.label << '\t' << sweep << '\t' << value << '\t' << to_string(row.method) << '\t'
        << format_number(row.power) << '\t' << format_number(row.power_se) << '\t' << format_number(row.fwer)
        << '\t' << format_number(row.fwer_se) << '\t' << row.replicates << '\t' << row.failures << '\n';
  }
  write_text(dir / "power.tsv", out.str());

  json summary;
  summary["command"] = "simulate";
  summary["preset"] = config.scenario ? json(nullptr) : json(config.preset);
  summary["scale"] = std::string(scale_name(config.scale));
  summary["points"] = grid.size();
  json methods = json::array();
  for (Method m : config.methods) methods.push_back(std::string(to_string(m)));
  summary["methods"] = methods;
  summary["replicates"] = replicates;
  summary["seed"] = config.seed;
  summary["alpha"] = number_json(config.alpha);
  summary["alpha1"] = number_json(config.alpha1);
  summary["bucket_size"] = config.bucket_size;
  summary["granularity"] = config.granularity == FwerGranularity::cluster ? "cluster" : "biomarker";
  summary["ridge"] = ridge_json(config.ridge);
  summary["files"] = {"power.tsv", "summary.json"};
  write_summary(dir, summary);
  return table;
}

IndependenceReport run_independence(const RunConfig& config) {
  validate_common(config);
  IndependenceReport report;
  std::size_t failures = 0;
  std::optional<PreprocessLog> log;
  if (config.mode == IndependenceMode::across_biomarkers) {
    Ingested ingested = load_dataset(config);
    RidgeConfig ridge = config.ridge;
    ridge.family = ingested.data.family();
    ridge.cv_seed = config.seed;
    report = independence_across_biomarkers(ingested.data, ridge);
    log = std::move(ingested.log);
  } else {
    ScenarioConfig scenario;
    if (config.scenario) {
      scenario = *config.scenario;
    } else if (!config.preset.empty()) {
      scenario = make_preset(config.preset, config.scale).grid.front();
    } else {
      throw ConfigError("scenario: across_replicates needs an inline scenario or a preset");
    }
    scenario.seed = config.seed;
    const std::size_t replicates = config.replicates.value_or(500);
    const ReplicatePairs pairs =
        collect_replicate_pairs(scenario, config.biomarker, replicates, config.ridge, config.threads);
    failures = pairs.failures;
    report = pearson_report(pairs.ridge_coef, pairs.interaction_estimate, IndependenceMode::across_replicates);
  }

  const auto dir = prepare_out_dir(config);
  const bool replicates_mode = config.mode == IndependenceMode::across_replicates;
  std::ostringstream out;
  out << "mode\tbiomarker\testimate\tp_value\tci_low\tci_high\tn_pairs\tfailures\n";
  out << to_string(report.mode) << '\t' << (replicates_mode ? std::to_string(config.biomarker + 1) : "NA")
      << '\t' << format_number(report.estimate) << '\t' << format_number(report.p_value) << '\t'
      << format_number(report.ci_low) << '\t' << format_number(report.ci_high) << '\t' << report.n_pairs << '\t'
      << failures << '\n';
  write_text(dir / "independence.tsv", out.str());
  if (log) write_text(dir / "preprocess.log", join_lines(log->lines()));

  json summary;
  summary["command"] = "independence";
  summary["mode"] = std::string(to_string(report.mode));
  summary["seed"] = config.seed;
  summary["estimate"] = number_json(report.estimate);
  summary["p_value"] = number_json(report.p_value);
  summary["ci"] = {number_json(report.ci_low), number_json(report.ci_high)};
  summary["ci_contains_zero"] = report.ci_contains(0.0);
  summary["n_pairs"] = report.n_pairs;
  summary["ridge"] = ridge_json(config.ridge);
  json files = {"independence.tsv", "summary.json"};
  if (log) files.push_back("preprocess.log");
  summary["files"] = files;
  write_summary(dir, summary);
  return report;
}

AdjustResult run_adjust(const RunConfig& config) {
  check_probability(config.alpha, "alpha");
  if (config.input.empty()) throw ConfigError("input: required");
  std::ifstream in(config.input);
  if (!in) throw ConfigError("input: cannot open '" + config.input + "'");

  std::vector<double> p;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    const std::string cell = line.substr(first, last - first + 1);
    if (cell.find_first_of(",\t") != std::string::npos) {
      throw InvalidDataset("adjust input must have one column (line " + std::to_string(line_no) + ")");
    }
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) {
      // A non-numeric first line is a header.
      if (p.empty() && line_no == 1) continue;
      throw NonNumericCell(line_no, 1, "p_value", cell);
    }
    p.push_back(v);
  }
  if (p.empty()) throw EmptyAfterFiltering("adjust input has no p-values");
  const AdjustResult result = adjust(p, config.adjust_method, config.alpha);

  const auto dir = prepare_out_dir(config);
  std::ostringstream out;
  out << "index\tp_value\tthreshold\trejected\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    out << i + 1 << '\t' << format_number(p[i]) << '\t' << format_number(result.thresholds[i]) << '\t'
        << (result.rejected[i] ? "true" : "false") << '\n';
  }
  write_text(dir / "adjust.tsv", out.str());

  json summary;
  summary["command"] = "adjust";
  summary["method"] = std::string(to_string(config.adjust_method));
  summary["alpha"] = number_json(config.alpha);
  summary["m"] = p.size();
  summary["rejected"] = std::count(result.rejected.begin(), result.rejected.end(), true);
  summary["files"] = {"adjust.tsv", "summary.json"};
  write_summary(dir, summary);
  return result;
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error)) return 2;
  if (dynamic_cast<const DataError*>(&error)) return 3;
  return 4;
}

}  // namespace twostage
