// segex: behavioral segmentation for A/B experiment analysis.
//
// Subcommands: synth (generate a labeled cohort), fit (build a segment model
// from pre-experiment events), select-k (K selection curve only), analyze
// (segment-level treatment effects from experiment events).

#include <exception>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "segex/errors.hpp"
#include "segex/pipeline.hpp"
#include "segex/reports.hpp"
#include "segex/util.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> k;
    std::optional<std::string> k_range;
    std::optional<double> variance_threshold;
    std::optional<double> outlier_quantile;
    std::optional<double> suppress_below;
    bool drop_constant = false;
    bool bonferroni = false;
    std::string format = "text";
    std::string output_dir;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--seed", flags.seed, "root random seed");
    cmd->add_option("--k", flags.k, "fixed number of segments (skips selection)");
    cmd->add_option("--k-range", flags.k_range, "candidate K range, e.g. 2..10");
    cmd->add_option("--variance-threshold", flags.variance_threshold,
                    "cumulative PCA variance to retain (0,1]");
    cmd->add_option("--outlier-quantile", flags.outlier_quantile,
                    "per-column outlier removal quantile (0,1)");
    cmd->add_option("--suppress-below", flags.suppress_below,
                    "suppress segments below this user share");
    cmd->add_flag("--drop-constant", flags.drop_constant,
                  "drop constant feature columns instead of failing");
    cmd->add_flag("--bonferroni", flags.bonferroni, "Bonferroni-adjust segment p-values");
    cmd->add_option("--format", flags.format, "stdout format: text|csv|json")
        ->check(CLI::IsMember({"text", "csv", "json"}));
    cmd->add_option("--out-dir", flags.output_dir, "directory for output files");
}

segex::RunConfig build_config(const CommonFlags& flags) {
    segex::RunConfig config;
    if (!flags.config_path.empty()) config = segex::load_config_file(flags.config_path);
    if (flags.seed) config.seed = *flags.seed;
    if (flags.k) config.k = *flags.k;
    if (flags.k_range) {
        const auto sep = flags.k_range->find("..");
        if (sep == std::string::npos)
            throw segex::ConfigError("--k-range expects the form a..b");
        config.k_min = std::stoi(flags.k_range->substr(0, sep));
        config.k_max = std::stoi(flags.k_range->substr(sep + 2));
        config.k = 0;
    }
    if (flags.variance_threshold) config.variance_threshold = *flags.variance_threshold;
    if (flags.outlier_quantile) config.outlier_quantile = *flags.outlier_quantile;
    if (flags.suppress_below) config.suppression_threshold = *flags.suppress_below;
    if (flags.drop_constant) config.drop_constant = true;
    if (flags.bonferroni) config.bonferroni = true;
    if (!flags.output_dir.empty()) config.output_dir = flags.output_dir;
    segex::validate_config(config);
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"data-driven behavioral segmentation for A/B experiment analysis"};
    app.require_subcommand(1);

    CommonFlags fit_flags, analyze_flags, synth_flags, selectk_flags;

    auto* fit = app.add_subcommand("fit", "build a segment model from definition-period events");
    std::string fit_events, fit_model = "model.json", fit_kcurve = "kselect.csv";
    fit->add_option("--events", fit_events, "definition-period event log (csv or jsonl)")->required();
    fit->add_option("--model", fit_model, "output model path");
    fit->add_option("--kcurve", fit_kcurve, "output K selection curve CSV");
    add_common_flags(fit, fit_flags);

    auto* analyze = app.add_subcommand("analyze", "segment-level treatment effect report");
    std::string an_model, an_events, an_assignments;
    analyze->add_option("--model", an_model, "segment model from fit")->required();
    analyze->add_option("--events", an_events, "experiment-period event log")->required();
    analyze->add_option("--assignments", an_assignments,
                        "arm assignment log csv (user_id,arm) for definition-only users");
    add_common_flags(analyze, analyze_flags);

    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort from a scenario");
    std::string synth_scenario;
    std::optional<std::size_t> synth_n;
    synth->add_option("--scenario", synth_scenario, "scenario JSON")->required();
    synth->add_option("--n", synth_n, "override scenario n_users");
    add_common_flags(synth, synth_flags);

    auto* selectk = app.add_subcommand("select-k", "emit the K selection curve only");
    std::string sk_events, sk_out = "kselect.csv";
    selectk->add_option("--events", sk_events, "definition-period event log")->required();
    selectk->add_option("--out", sk_out, "output curve CSV");
    add_common_flags(selectk, selectk_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fit->parsed()) {
            segex::RunConfig config = build_config(fit_flags);
            const std::string dir = config.output_dir.empty() ? "." : config.output_dir;
            segex::SegmentModel model = segex::run_fit(
                config, fit_events, dir + "/" + fit_model,
                config.k == 0 ? dir + "/" + fit_kcurve : std::string());
            std::cout << segex::fit_summary(model);
        } else if (analyze->parsed()) {
            segex::RunConfig config = build_config(analyze_flags);
            segex::AnalysisReport report =
                segex::run_analyze(config, an_model, an_events, an_assignments);
            if (analyze_flags.format == "json")
                std::cout << segex::effects_json(report);
            else if (analyze_flags.format == "csv")
                std::cout << segex::effects_csv(report);
            else
                std::cout << segex::text_summary(report);
        } else if (synth->parsed()) {
            segex::RunConfig config = build_config(synth_flags);
            segex::Scenario scenario = segex::load_scenario_file(synth_scenario);
            if (synth_n) scenario.n_users = *synth_n;
            segex::validate_scenario(scenario);
            segex::SynthPaths paths = segex::run_synth(scenario, config.seed, config.output_dir);
            std::cout << "wrote " << paths.definition_events << "\n"
                      << "wrote " << paths.experiment_events << "\n"
                      << "wrote " << paths.assignments << "\n"
                      << "wrote " << paths.truth << "\n";
        } else if (selectk->parsed()) {
            segex::RunConfig config = build_config(selectk_flags);
            config.k = 0;
            segex::SegmentModel model = segex::run_fit(config, sk_events, std::string(),
                                                       (config.output_dir.empty() ? "." : config.output_dir) + "/" + sk_out);
            std::cout << segex::selection_curve_csv(model.selection);
        }
    } catch (const segex::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
