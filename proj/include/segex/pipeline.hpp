#ifndef SEGEX_PIPELINE_HPP
#define SEGEX_PIPELINE_HPP

#include <span>
#include <string>
#include <vector>

#include "segex/model_io.hpp"
#include "segex/reports.hpp"
#include "segex/synth.hpp"

namespace segex {

// Steps 1-6, K selection (or fixed K), profiling and naming, all from
// aggregated per-user features. input_digest is provenance metadata only.
SegmentModel fit_pipeline(std::span<const RawUserFeatures> features, const RunConfig& config,
                          const std::string& input_digest = "");

// joins experiment metrics with the frozen labels and builds every table
AnalysisReport analyze_pipeline(const SegmentModel& model,
                                std::span<const ExperimentMetrics> experiment_users,
                                const std::map<std::string, Arm>* assignment_log,
                                const RunConfig& config);

// file-level drivers behind the CLI subcommands
SegmentModel run_fit(const RunConfig& config, const std::string& events_path,
                     const std::string& model_path, const std::string& kcurve_path);

AnalysisReport run_analyze(const RunConfig& config, const std::string& model_path,
                           const std::string& events_path, const std::string& assignment_path);

struct SynthPaths {
    std::string definition_events;
    std::string experiment_events;
    std::string assignments;
    std::string truth;
};

// writes definition/experiment event CSVs, the arm assignment log and the
// ground-truth labels; injections from the scenario are applied to the
// experiment stream only
SynthPaths run_synth(const Scenario& scenario, std::uint64_t seed, const std::string& out_dir);

std::vector<ExperimentMetrics> load_experiment_metrics(const RunConfig& config,
                                                       const std::string& events_path);

std::vector<RawUserFeatures> load_raw_features(const RunConfig& config,
                                               const std::string& events_path);

std::string event_csv_header();
std::string event_csv_line(const EventRecord& ev);

} // namespace segex

#endif
