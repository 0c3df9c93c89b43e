#ifndef SEGEX_EXPERIMENT_HPP
#define SEGEX_EXPERIMENT_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segex/ingest.hpp"

namespace segex {

// pseudo-segment for users first seen in the experiment period
inline constexpr int kUnseenSegment = -1;

// status taxonomy: 1 = both periods, 2 = definition only (metrics zero-filled),
// 3 = experiment only (segment "unseen")
struct SegmentedUser {
    std::string user_id;
    int segment = kUnseenSegment;
    int status = 1;
    Arm arm = Arm::none;
    ExperimentMetrics metrics;
};

struct AssignResult {
    std::vector<SegmentedUser> users; // sorted by user_id
    std::size_t status1 = 0;
    std::size_t status2 = 0;
    std::size_t status3 = 0;
    std::size_t excluded_no_arm = 0; // definition-only users without a logged arm
};

// Union of definition-period and experiment-period users. Status-2 users take
// their arm from the assignment log; without a log they are dropped with a
// warning (zero-fill needs a known arm).
AssignResult assign_segments(const std::map<std::string, int>& definition_labels,
                             std::span<const ExperimentMetrics> experiment_users,
                             const std::map<std::string, Arm>* assignment_log);

// metric accessor; names: days_visited, sessions, cpv, apv, clicks,
// "page:<page_type>:cpv", "page:<page_type>:apv"
double metric_value(const ExperimentMetrics& m, const std::string& metric);

struct MetricEffect {
    double control_mean = 0;
    double test_mean = 0;
    double abs_diff = 0;                 // test - control
    std::optional<double> rel_diff;      // absent when the control mean is 0
    std::optional<double> p_value;
    bool degenerate = false;             // variance-free comparison
    bool worse_than_total = false;       // decline deeper than the TOTAL row's
    std::size_t n_control = 0;
    std::size_t n_test = 0;
};

// Per-user means by arm over every user in the subset (zero-filled included),
// Welch p-value. Throws OneArmOnly if either arm is absent.
MetricEffect treatment_effect(std::span<const SegmentedUser* const> subset, const std::string& metric);
MetricEffect treatment_effect(std::span<const SegmentedUser> users, const std::string& metric);

struct EffectRow {
    int segment = 0;                  // kUnseenSegment for unseen
    std::string segment_name;         // "TOTAL" for the total row
    bool is_total = false;
    std::size_t users = 0;
    double user_share = 0;
    bool suppressed = false;          // small segment: numbers withheld in reports
    std::vector<MetricEffect> metrics; // aligned with the table's metric list
};

struct EffectTable {
    std::vector<std::string> metrics;
    std::vector<EffectRow> rows; // labeled segments by name, then unseen, then TOTAL
    std::size_t segments_tested = 0; // rows carrying p-values (for external corrections)
    bool bonferroni = false;
};

// Table II analogue. Suppression hides numbers below the user-share threshold
// at render time; internal accounting keeps them.
EffectTable segment_effect_table(std::span<const SegmentedUser> users,
                                 const std::vector<std::string>& metrics,
                                 const std::map<int, std::string>& segment_names,
                                 double suppression_threshold = 0.01,
                                 bool bonferroni = false);

struct ImportanceRow {
    int segment = 0;
    std::string segment_name;
    std::vector<double> shares; // aligned with table metrics; user_count first
};

struct ImportanceTable {
    std::vector<std::string> metrics; // "user_count" + requested metrics
    std::vector<ImportanceRow> rows;
};

// share of each total metric held by each segment; shares sum to 1
ImportanceTable preliminary_importance(std::span<const SegmentedUser> users,
                                       const std::vector<std::string>& metrics,
                                       const std::map<int, std::string>& segment_names);

struct ContributionRow {
    int segment = 0;
    std::string segment_name;
    double within_total_diff = 0; // (test mean - control mean) * segment users
    double share = 0;             // of the summed within-segment diffs
};

// Within-segment total metric difference, arm-balanced, as a share of the
// overall difference; shares sum to 1. NoOverallEffect when the total is 0.
std::vector<ContributionRow> contribution_decomposition(std::span<const SegmentedUser> users,
                                                        const std::string& metric,
                                                        const std::map<int, std::string>& segment_names);

struct DrilldownCell {
    int segment = 0;
    std::string segment_name;
    std::string page_type;
    std::size_t active_users = 0; // users with any activity on the page
    bool suppressed = false;
    MetricEffect cpv;
    MetricEffect apv;
};

// (segment x page_type) treatment effects on per-page cpv/apv; cells with
// fewer than min_cell_users active users are suppressed, empty cells absent
std::vector<DrilldownCell> pagetype_drilldown(std::span<const SegmentedUser> users,
                                              const std::map<int, std::string>& segment_names,
                                              std::size_t min_cell_users = 100);

} // namespace segex

#endif
