#ifndef SEGEX_INGEST_HPP
#define SEGEX_INGEST_HPP

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace segex {

enum class Arm { control, test, none };
enum class EventKind { cpv, apv, click, session_start };

const char* arm_name(Arm a);
const char* event_name(EventKind e);
std::optional<Arm> parse_arm(std::string_view s);            // case-insensitive
std::optional<EventKind> parse_event_kind(std::string_view s);

struct EventRecord {
    std::string user_id;
    double timestamp = 0; // UTC seconds
    Arm arm = Arm::none;
    std::string page_type;
    EventKind event = EventKind::cpv;
};

struct PeriodSpec {
    double start = 0;
    double end = 0;

    PeriodSpec() = default;
    PeriodSpec(double start_s, double end_s); // requires start < end

    double weeks() const { return (end - start) / 604800.0; }
    bool contains(double t) const { return t >= start && t < end; }
};

// segment-definition window must close before the experiment window opens
void validate_period_pair(const PeriodSpec& definition, const PeriodSpec& experiment);

enum class LogFormat { csv, jsonl };

struct ParseIssue {
    std::size_t line = 0;
    std::string reason;
};

struct ParseResult {
    std::vector<EventRecord> events;
    std::vector<ParseIssue> issues;
    std::size_t lines_seen = 0;
};

// Malformed lines are collected, not fatal, until their share of data lines
// exceeds max_error_rate (then TooManyMalformed).
ParseResult parse_events(std::istream& in, LogFormat format, double max_error_rate = 0.01);

// streaming variant: calls fn per parsed record, never materialises the log
void for_each_event(std::istream& in, LogFormat format, double max_error_rate,
                    const std::function<void(const EventRecord&)>& fn,
                    std::vector<ParseIssue>* issues_out = nullptr);

LogFormat format_from_path(const std::string& path);

struct RawUserFeatures {
    std::string user_id;
    std::int64_t days_visited = 0;
    std::int64_t sessions = 0;
    std::map<std::string, std::int64_t> counters; // "quotes_cpv" -> count
};

struct AggregateOptions {
    double session_gap_seconds = 1800; // inactivity gap when session_start is absent
    double tz_offset_seconds = 0;      // day boundary shift from UTC
    bool warn_on_armed_events = true;  // definition-period logs should be arm "none"
};

// Incremental per-user fold over in-period events; feed in any order, the
// result only depends on the event multiset.
class RawFeatureAggregator {
public:
    RawFeatureAggregator(const PeriodSpec& period, AggregateOptions opts = {});
    void add(const EventRecord& ev);
    std::vector<RawUserFeatures> finish(); // sorted by user_id; EmptyPeriod if none

    std::size_t armed_events_seen() const { return armed_events_; }

private:
    struct UserAcc {
        std::set<std::int64_t> days;
        std::vector<double> timestamps;
        std::int64_t session_starts = 0;
        std::map<std::string, std::int64_t> counters;
    };
    PeriodSpec period_;
    AggregateOptions opts_;
    std::map<std::string, UserAcc> users_;
    std::size_t armed_events_ = 0;
};

std::vector<RawUserFeatures> aggregate_raw_features(std::span<const EventRecord> events,
                                                    const PeriodSpec& period,
                                                    const AggregateOptions& opts = {});

struct ExperimentMetrics {
    std::string user_id;
    Arm arm = Arm::none;
    std::int64_t days_visited = 0;
    std::int64_t sessions = 0;
    std::int64_t cpv = 0;
    std::int64_t apv = 0;
    std::int64_t clicks = 0;
    std::map<std::string, std::int64_t> page_cpv;
    std::map<std::string, std::int64_t> page_apv;
};

class ExperimentAggregator {
public:
    ExperimentAggregator(const PeriodSpec& period, AggregateOptions opts = {});
    void add(const EventRecord& ev); // MissingArm / ArmConflict
    std::vector<ExperimentMetrics> finish();

private:
    struct UserAcc {
        Arm arm = Arm::none;
        std::set<std::int64_t> days;
        std::vector<double> timestamps;
        std::int64_t session_starts = 0;
        ExperimentMetrics totals;
    };
    PeriodSpec period_;
    AggregateOptions opts_;
    std::map<std::string, UserAcc> users_;
};

std::vector<ExperimentMetrics> aggregate_experiment_metrics(std::span<const EventRecord> events,
                                                            const PeriodSpec& period,
                                                            const AggregateOptions& opts = {});

// users with per-page apv but no cpv on the same page (bad logging or an
// artificial intervention); returns the number of violating (user, page) pairs
std::size_t count_apv_without_cpv(std::span<const ExperimentMetrics> users);

// session count from raw timestamps: a new session opens when the gap from
// the previous event exceeds gap_seconds
std::int64_t sessions_by_gap(std::vector<double> timestamps, double gap_seconds);

} // namespace segex

#endif
