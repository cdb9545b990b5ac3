#include "twostage/cli.hpp"
#include "twostage/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

using namespace twostage;

namespace {

struct Flags {
  std::string family, method, scale, mode, config;
  std::vector<std::string> methods;
  std::size_t biomarker = 0;
  std::size_t replicates = 0;
};

void add_common(CLI::App* cmd, RunConfig& config, Flags& flags) {
  cmd->add_option("--alpha", config.alpha, "Overall family-wise error rate");
  cmd->add_option("--seed", config.seed, "Base seed");
  cmd->add_option("--out-dir", config.out_dir, "Directory for output files");
  cmd->add_option("--config", flags.config, "JSON config document; its fields override flags");
  cmd->add_option("--threads", config.threads, "Worker threads (0 = hardware concurrency)");
}

void add_dataset(CLI::App* cmd, RunConfig& config, Flags& flags) {
  cmd->add_option("--input", config.input, "Delimited input table with a header row");
  cmd->add_option("--outcome", config.outcome, "Outcome column");
  cmd->add_option("--treatment", config.treatment, "Treatment column (two distinct values)");
  cmd->add_option("--family", flags.family, "linear or logistic");
  cmd->add_flag("--id-column", config.id_column, "First column is a row identifier");
}

void add_screening(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--alpha1", config.alpha1, "Stage-1 threshold for uni_threshold");
  cmd->add_option("--bucket-size", config.bucket_size, "Initial bucket size B of the weighted test");
}

void add_scenario(CLI::App* cmd, RunConfig& config, Flags& flags) {
  cmd->add_option("--preset", config.preset, "fig1a, fig1b, fig1c, fig1d or global_null");
  cmd->add_option("--scale", flags.scale, "desk or paper");
  cmd->add_option("--replicates", flags.replicates, "Monte Carlo replicates");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage biomarker-treatment interaction testing"};
  app.require_subcommand(1);

  RunConfig config;
  Flags flags;

  auto* analyze = app.add_subcommand("analyze", "Run one testing procedure on a dataset");
  add_common(analyze, config, flags);
  add_dataset(analyze, config, flags);
  add_screening(analyze, config);
  analyze->add_option("--method", flags.method, "single_step, uni_threshold, uni_rank or ridge_rank");
  analyze->add_option("--top-k", config.top_k, "Depth of the stage-1 screening listing");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo power and FWER study");
  add_common(simulate, config, flags);
  add_screening(simulate, config);
  add_scenario(simulate, config, flags);
  simulate->add_option("--method", flags.methods, "Restrict to these methods (repeatable)");

  auto* independence = app.add_subcommand("independence", "Between-stage independence diagnostic");
  add_common(independence, config, flags);
  add_dataset(independence, config, flags);
  add_scenario(independence, config, flags);
  independence->add_option("--mode", flags.mode, "across_biomarkers or across_replicates");
  independence->add_option("--biomarker", flags.biomarker, "1-based biomarker for across_replicates");

  auto* adjust_cmd = app.add_subcommand("adjust", "Adjust a one-column file of p-values");
  add_common(adjust_cmd, config, flags);
  adjust_cmd->add_option("--input", config.input, "One p-value per line, optional header");
  adjust_cmd->add_option("--method", flags.method, "bonferroni, sidak, holm or hochberg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!flags.family.empty()) config.family = parse_family(flags.family);
    if (!flags.scale.empty()) config.scale = parse_scale(flags.scale);
    if (!flags.mode.empty()) config.mode = parse_independence_mode(flags.mode);
    if (flags.replicates > 0) config.replicates = flags.replicates;
    if (flags.biomarker > 0) config.biomarker = flags.biomarker - 1;
    if (!flags.methods.empty()) {
      config.methods.clear();
      for (const auto& m : flags.methods) config.methods.push_back(parse_method(m));
    }
    if (!flags.method.empty()) {
      if (adjust_cmd->parsed()) {
        config.adjust_method = parse_adjust_method(flags.method);
      } else {
        config.method = parse_method(flags.method);
      }
    }
    if (!flags.config.empty()) apply_config_file(config, flags.config);

    if (analyze->parsed()) {
      const AnalysisResult result = run_analysis(config);
      if (!result.report.caveat.empty()) std::cerr << "note: " << result.report.caveat << "\n";
      std::cout << result.report.rejected_indices().size() << " of " << result.report.tested()
                << " tested biomarkers rejected; outputs in " << config.out_dir << "\n";
    } else if (simulate->parsed()) {
      const PowerTable table = run_simulation(config);
      std::cout << table.rows.size() << " rows written to " << config.out_dir << "/power.tsv\n";
    } else if (independence->parsed()) {
      const IndependenceReport report = run_independence(config);
      std::cout << "r = " << format_number(report.estimate) << ", 95% CI [" << format_number(report.ci_low)
                << ", " << format_number(report.ci_high) << "]\n";
    } else {
      const AdjustResult result = run_adjust(config);
      std::cout << std::count(result.rejected.begin(), result.rejected.end(), true) << " of "
                << result.rejected.size() << " hypotheses rejected\n";
    }
  } catch (const Error& e) {
    std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
