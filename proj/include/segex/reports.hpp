#ifndef SEGEX_REPORTS_HPP
#define SEGEX_REPORTS_HPP

#include <map>
#include <string>
#include <vector>

#include "segex/experiment.hpp"
#include "segex/model_io.hpp"

namespace segex {

// Full analysis bundle in the report ordering the text summary follows:
// overall effect, importance, segment effects, contributions, drilldown.
struct AnalysisReport {
    AssignResult assignment;
    EffectTable effects; // includes the TOTAL row
    ImportanceTable importance;
    std::vector<std::string> contribution_metrics;
    std::map<std::string, std::vector<ContributionRow>> contributions;
    std::map<std::string, std::string> contribution_skipped; // metric -> reason
    std::vector<DrilldownCell> drilldown;
    double alpha = 0.05;
};

// suppressed / absent values render as "n/a" in CSV, null in JSON
std::string overall_csv(const AnalysisReport& report);
std::string overall_json(const AnalysisReport& report);
std::string effects_csv(const AnalysisReport& report);
std::string effects_json(const AnalysisReport& report);
std::string importance_csv(const AnalysisReport& report);
std::string importance_json(const AnalysisReport& report);
std::string contribution_csv(const AnalysisReport& report);
std::string contribution_json(const AnalysisReport& report);
std::string drilldown_csv(const AnalysisReport& report);
std::string drilldown_json(const AnalysisReport& report);
std::string text_summary(const AnalysisReport& report);

// fit-side human summary: chosen K, diagnostics, named segments
std::string fit_summary(const SegmentModel& model);

// writes the CSV/JSON pairs plus summary.txt into out_dir; returns the paths
std::vector<std::string> write_report_files(const AnalysisReport& report, const std::string& out_dir);

} // namespace segex

#endif
