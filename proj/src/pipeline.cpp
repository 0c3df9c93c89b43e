#include "segex/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "segex/errors.hpp"
#include "segex/rng.hpp"
#include "segex/util.hpp"

namespace segex {

namespace {

// stage-2 rows for the given users, tagged orthogonal so the frozen
// transform accepts them
FeatureMatrix select_stage2_rows(const FeatureMatrix& stage2, const std::vector<std::string>& ids) {
    FeatureMatrix out;
    out.stage = Stage::orthogonal;
    out.columns = stage2.columns;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < stage2.rows(); ++i) index[stage2.user_ids[i]] = i;
    for (const auto& id : ids) {
        auto it = index.find(id);
        if (it == index.end()) throw DataError("select_stage2_rows: unknown user " + id);
        out.user_ids.push_back(id);
        auto row = stage2.row(it->second);
        out.values.insert(out.values.end(), row.begin(), row.end());
    }
    return out;
}

} // namespace

SegmentModel fit_pipeline(std::span<const RawUserFeatures> features, const RunConfig& config,
                          const std::string& input_digest) {
    if (config.definition_period.start >= config.definition_period.end)
        throw ConfigError("fit requires a definition_period");

    const std::vector<std::string> columns =
        config.feature_columns.empty() ? default_feature_columns(features) : config.feature_columns;

    FeatureMatrix stage1 = build_raw_matrix(features, columns);
    const double weeks = config.definition_period.weeks();
    FeatureMatrix stage2 = orthogonalize(stage1, weeks);
    OutlierResult outliers = remove_outliers(stage2, config.outlier_quantile);
    FeatureMatrix stage4 = log_transform(outliers.cleaned);
    NormalizeResult norm = normalize(stage4, config.drop_constant);
    PcaModel pca = fit_pca(norm.normalized, config.variance_threshold);
    FeatureMatrix scores = project_pca(norm.normalized, pca);

    SegmentModel model;
    model.seed = config.seed;
    model.definition_period = config.definition_period;
    model.input_digest = input_digest;
    model.stage1_columns = columns;
    model.stats.weeks = weeks;
    model.stats.outlier_quantile = config.outlier_quantile;
    model.stats.columns = stage2.columns;
    model.stats.outlier_thresholds = outliers.thresholds;
    model.stats.normalized_columns = norm.normalized.columns;
    model.stats.means = norm.means;
    model.stats.sds = norm.sds;
    model.pca = pca;
    model.n_definition_users = stage2.rows();
    model.outliers_removed = outliers.removed.size();

    KMeansOptions opts;
    opts.restarts = config.restarts;
    opts.max_iter = config.max_iter;
    opts.tol = config.tol;

    int k = config.k;
    if (k == 0) {
        const std::uint64_t selection_seed = mix_seed(config.seed, 0x5345, 0);
        std::cerr << "seed " << config.seed << " -> selection seed " << selection_seed << "\n";
        model.selection = select_k(scores, config.k_min, config.k_max, selection_seed, opts);
        k = model.selection.recommended_k;
    }
    const std::uint64_t kmeans_seed = mix_seed(config.seed, 0x4b4d, static_cast<std::uint64_t>(k));
    std::cerr << "seed " << config.seed << " -> k-means seed " << kmeans_seed << "\n";
    model.kmeans = kmeans_fit(scores, k, kmeans_seed, opts);

    std::vector<int> labels = assign_all(scores, model.kmeans);
    for (std::size_t i = 0; i < scores.rows(); ++i) model.labels[scores.user_ids[i]] = labels[i];

    // outliers sit outside the training set but still get the nearest
    // centroid through the frozen transform, so the segment family stays
    // collectively exhaustive at analysis time
    if (!outliers.removed.empty()) {
        FeatureMatrix removed_rows = select_stage2_rows(stage2, outliers.removed);
        FeatureMatrix removed_scores = apply_frozen_transform(removed_rows, model.stats, model.pca);
        std::vector<int> removed_labels = assign_all(removed_scores, model.kmeans);
        for (std::size_t i = 0; i < removed_scores.rows(); ++i)
            model.labels[removed_scores.user_ids[i]] = removed_labels[i];
    }

    FeatureMatrix kept_stage2 = outliers.cleaned;
    kept_stage2.stage = Stage::orthogonal; // same values, step-2 space
    model.profiles = profile_segments(model.kmeans, kept_stage2, labels);
    name_segments(model.profiles, config.z_threshold, config.segment_name_overrides);
    return model;
}

AnalysisReport analyze_pipeline(const SegmentModel& model,
                                std::span<const ExperimentMetrics> experiment_users,
                                const std::map<std::string, Arm>* assignment_log,
                                const RunConfig& config) {
    AnalysisReport report;
    report.alpha = config.alpha;
    report.assignment = assign_segments(model.labels, experiment_users, assignment_log);

    const std::map<int, std::string> names = segment_names(model);
    const std::vector<std::string> effect_metrics{"days_visited", "sessions", "cpv", "apv"};

    report.effects = segment_effect_table(report.assignment.users, effect_metrics, names,
                                          config.suppression_threshold, config.bonferroni);
    report.importance = preliminary_importance(report.assignment.users,
                                               {"days_visited", "sessions", "cpv"}, names);
    report.contribution_metrics = effect_metrics;
    for (const auto& metric : effect_metrics) {
        try {
            report.contributions[metric] =
                contribution_decomposition(report.assignment.users, metric, names);
        } catch (const NoOverallEffect&) {
            report.contribution_skipped[metric] = "no overall effect";
        }
    }
    report.drilldown = pagetype_drilldown(report.assignment.users, names, config.min_cell_users);
    return report;
}

namespace {

void warn_parse_issues(const std::vector<ParseIssue>& issues, const std::string& path) {
    if (issues.empty()) return;
    std::cerr << "warning: " << issues.size() << "+ malformed lines skipped in " << path
              << " (first: line " << issues[0].line << ", " << issues[0].reason << ")\n";
}

} // namespace

std::vector<RawUserFeatures> load_raw_features(const RunConfig& config,
                                               const std::string& events_path) {
    std::ifstream in(events_path);
    if (!in) throw ConfigError("cannot open events file: " + events_path);
    AggregateOptions opts;
    opts.session_gap_seconds = config.session_gap_minutes * 60.0;
    opts.tz_offset_seconds = config.tz_offset_seconds;
    RawFeatureAggregator agg(config.definition_period, opts);
    std::vector<ParseIssue> issues;
    for_each_event(in, format_from_path(events_path), config.max_parse_error_rate,
                   [&](const EventRecord& ev) { agg.add(ev); }, &issues);
    warn_parse_issues(issues, events_path);
    return agg.finish();
}

std::vector<ExperimentMetrics> load_experiment_metrics(const RunConfig& config,
                                                       const std::string& events_path) {
    std::ifstream in(events_path);
    if (!in) throw ConfigError("cannot open events file: " + events_path);
    AggregateOptions opts;
    opts.session_gap_seconds = config.session_gap_minutes * 60.0;
    opts.tz_offset_seconds = config.tz_offset_seconds;
    ExperimentAggregator agg(config.experiment_period, opts);
    std::vector<ParseIssue> issues;
    for_each_event(in, format_from_path(events_path), config.max_parse_error_rate,
                   [&](const EventRecord& ev) { agg.add(ev); }, &issues);
    warn_parse_issues(issues, events_path);
    return agg.finish();
}

SegmentModel run_fit(const RunConfig& config, const std::string& events_path,
                     const std::string& model_path, const std::string& kcurve_path) {
    if (config.definition_period.start >= config.definition_period.end)
        throw ConfigError("fit requires a definition_period in the config");
    std::vector<RawUserFeatures> features = load_raw_features(config, events_path);
    char digest[32];
    std::snprintf(digest, sizeof(digest), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(events_path)));
    SegmentModel model = fit_pipeline(features, config, digest);
    if (!model_path.empty()) save_model_file(model, model_path);
    if (!kcurve_path.empty() && !model.selection.rows.empty())
        write_text_file(kcurve_path, selection_curve_csv(model.selection));
    return model;
}

AnalysisReport run_analyze(const RunConfig& config, const std::string& model_path,
                           const std::string& events_path, const std::string& assignment_path) {
    if (config.experiment_period.start >= config.experiment_period.end)
        throw ConfigError("analyze requires an experiment_period in the config");
    SegmentModel model = load_model_file(model_path);
    validate_period_pair(model.definition_period, config.experiment_period);
    std::vector<ExperimentMetrics> metrics = load_experiment_metrics(config, events_path);
    std::map<std::string, Arm> log;
    const std::map<std::string, Arm>* log_ptr = nullptr;
    if (!assignment_path.empty()) {
        log = load_assignment_log(assignment_path);
        log_ptr = &log;
    }
    AnalysisReport report = analyze_pipeline(model, metrics, log_ptr, config);
    write_report_files(report, config.output_dir);
    return report;
}

std::string event_csv_header() { return "user_id,timestamp,arm,page_type,event\n"; }

std::string event_csv_line(const EventRecord& ev) {
    std::string line = ev.user_id;
    line += ',';
    const double rounded = std::nearbyint(ev.timestamp);
    if (rounded == ev.timestamp && std::abs(ev.timestamp) < 9.0e15)
        line += std::to_string(static_cast<long long>(ev.timestamp));
    else
        line += fmt_double(ev.timestamp);
    line += ',';
    line += arm_name(ev.arm);
    line += ',';
    line += ev.page_type;
    line += ',';
    line += event_name(ev.event);
    line += '\n';
    return line;
}

SynthPaths run_synth(const Scenario& scenario, std::uint64_t seed, const std::string& out_dir) {
    const std::string base = out_dir.empty() ? "." : out_dir;
    SynthPaths paths{base + "/definition_events.csv", base + "/experiment_events.csv",
                     base + "/assignments.csv", base + "/truth.csv"};

    std::ofstream def_out(paths.definition_events, std::ios::binary);
    std::ofstream exp_out(paths.experiment_events, std::ios::binary);
    std::ofstream assign_out(paths.assignments, std::ios::binary);
    std::ofstream truth_out(paths.truth, std::ios::binary);
    if (!def_out || !exp_out || !assign_out || !truth_out)
        throw DataError("cannot write synth outputs under " + base);

    def_out << event_csv_header();
    exp_out << event_csv_header();
    assign_out << "user_id,arm\n";
    truth_out << "user_id,archetype,status\n";

    std::vector<std::string> archetype_names;
    for (const auto& a : scenario.archetypes) archetype_names.push_back(a.name);

    generate_cohort_stream(scenario, seed, [&](const TruthRow& row,
                                               std::vector<EventRecord>&& def_events,
                                               std::vector<EventRecord>&& exp_events) {
        const Arm arm = arm_for_user(seed, row.user_id, scenario.test_split);

        for (const auto& ev : def_events) def_out << event_csv_line(ev);

        std::map<std::string, int> archetype{{row.user_id, row.archetype}};
        std::map<std::string, Arm> arms{{row.user_id, arm}};
        std::vector<EventRecord> injected = inject_effects(
            std::move(exp_events), archetype, archetype_names, scenario.injections, arms, seed);
        for (const auto& ev : injected) exp_out << event_csv_line(ev);

        assign_out << row.user_id << ',' << arm_name(arm) << '\n';
        truth_out << row.user_id << ',' << archetype_names[static_cast<std::size_t>(row.archetype)]
                  << ',' << row.status << '\n';
    });

    for (std::ofstream* out : {&def_out, &exp_out, &assign_out, &truth_out})
        if (!*out) throw DataError("failed writing synth outputs under " + base);
    return paths;
}

} // namespace segex
