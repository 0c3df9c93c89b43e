#include "segex/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>

#include <json.hpp>

#include "segex/errors.hpp"
#include "segex/util.hpp"

namespace segex {

const char* arm_name(Arm a) {
    switch (a) {
    case Arm::control: return "control";
    case Arm::test: return "test";
    default: return "none";
    }
}

const char* event_name(EventKind e) {
    switch (e) {
    case EventKind::cpv: return "cpv";
    case EventKind::apv: return "apv";
    case EventKind::click: return "click";
    default: return "session_start";
    }
}

std::optional<Arm> parse_arm(std::string_view s) {
    std::string v = to_lower(s);
    if (v == "control") return Arm::control;
    if (v == "test") return Arm::test;
    if (v == "none") return Arm::none;
    return std::nullopt;
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
    std::string v = to_lower(s);
    if (v == "cpv") return EventKind::cpv;
    if (v == "apv") return EventKind::apv;
    if (v == "click") return EventKind::click;
    if (v == "session_start") return EventKind::session_start;
    return std::nullopt;
}

PeriodSpec::PeriodSpec(double start_s, double end_s) : start(start_s), end(end_s) {
    if (!(start < end)) throw ConfigError("period start must precede end");
    if (!std::isfinite(start) || !std::isfinite(end) || start < 0)
        throw ConfigError("period bounds must be finite and non-negative");
}

void validate_period_pair(const PeriodSpec& definition, const PeriodSpec& experiment) {
    if (definition.end > experiment.start)
        throw ConfigError("segment definition period must end at or before the experiment starts");
}

namespace {

bool parse_timestamp(std::string_view s, double& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto res = std::from_chars(b, e, out);
    if (res.ec != std::errc() || res.ptr != e) return false;
    return std::isfinite(out) && out >= 0;
}

struct CsvHeader {
    int user_id = -1, timestamp = -1, arm = -1, page_type = -1, event = -1;
    std::size_t n_cols = 0;
};

CsvHeader parse_header(std::string_view line) {
    CsvHeader h;
    auto cols = split_csv_line(line);
    h.n_cols = cols.size();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        std::string name = to_lower(cols[i]);
        if (name == "user_id") h.user_id = static_cast<int>(i);
        else if (name == "timestamp") h.timestamp = static_cast<int>(i);
        else if (name == "arm") h.arm = static_cast<int>(i);
        else if (name == "page_type") h.page_type = static_cast<int>(i);
        else if (name == "event") h.event = static_cast<int>(i);
    }
    if (h.user_id < 0 || h.timestamp < 0 || h.arm < 0 || h.page_type < 0 || h.event < 0)
        throw DataError("event log header must name user_id,timestamp,arm,page_type,event");
    return h;
}

bool parse_csv_record(std::string_view line, const CsvHeader& h, EventRecord& rec, std::string& why) {
    auto f = split_csv_line(line);
    if (f.size() != h.n_cols) {
        why = "expected " + std::to_string(h.n_cols) + " fields, got " + std::to_string(f.size());
        return false;
    }
    auto user = f[static_cast<std::size_t>(h.user_id)];
    if (user.empty()) {
        why = "empty user_id";
        return false;
    }
    if (!parse_timestamp(f[static_cast<std::size_t>(h.timestamp)], rec.timestamp)) {
        why = "bad timestamp";
        return false;
    }
    auto arm = parse_arm(f[static_cast<std::size_t>(h.arm)]);
    if (!arm) {
        why = "bad arm value";
        return false;
    }
    auto kind = parse_event_kind(f[static_cast<std::size_t>(h.event)]);
    if (!kind) {
        why = "unknown event kind";
        return false;
    }
    rec.user_id.assign(user);
    rec.arm = *arm;
    rec.page_type.assign(f[static_cast<std::size_t>(h.page_type)]);
    rec.event = *kind;
    return true;
}

bool parse_jsonl_record(std::string_view line, EventRecord& rec, std::string& why) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        why = "invalid JSON object";
        return false;
    }
    if (!j.contains("user_id") || !j["user_id"].is_string() || j["user_id"].get<std::string>().empty()) {
        why = "missing user_id";
        return false;
    }
    if (!j.contains("timestamp") || !j["timestamp"].is_number()) {
        why = "missing timestamp";
        return false;
    }
    double ts = j["timestamp"].get<double>();
    if (!std::isfinite(ts) || ts < 0) {
        why = "bad timestamp";
        return false;
    }
    if (!j.contains("arm") || !j["arm"].is_string()) {
        why = "missing arm";
        return false;
    }
    auto arm = parse_arm(j["arm"].get<std::string>());
    if (!arm) {
        why = "bad arm value";
        return false;
    }
    if (!j.contains("event") || !j["event"].is_string()) {
        why = "missing event";
        return false;
    }
    auto kind = parse_event_kind(j["event"].get<std::string>());
    if (!kind) {
        why = "unknown event kind";
        return false;
    }
    rec.user_id = j["user_id"].get<std::string>();
    rec.timestamp = ts;
    rec.arm = *arm;
    rec.page_type = j.value("page_type", std::string());
    rec.event = *kind;
    return true;
}

} // namespace

void for_each_event(std::istream& in, LogFormat format, double max_error_rate,
                    const std::function<void(const EventRecord&)>& fn,
                    std::vector<ParseIssue>* issues_out) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t data_lines = 0;
    std::size_t bad_lines = 0;
    std::vector<ParseIssue> issues;
    CsvHeader header;
    bool have_header = false;

    EventRecord rec;
    std::string why;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (format == LogFormat::csv && !have_header) {
            header = parse_header(line);
            have_header = true;
            continue;
        }
        ++data_lines;
        bool ok = format == LogFormat::csv ? parse_csv_record(line, header, rec, why)
                                           : parse_jsonl_record(line, rec, why);
        if (!ok) {
            ++bad_lines;
            if (issues.size() < 100) issues.push_back({line_no, why});
            continue;
        }
        fn(rec);
    }
    if (data_lines > 0 &&
        static_cast<double>(bad_lines) / static_cast<double>(data_lines) > max_error_rate) {
        std::string msg = "too many malformed lines: " + std::to_string(bad_lines) + "/" +
                          std::to_string(data_lines);
        if (!issues.empty()) msg += " (first: line " + std::to_string(issues[0].line) + ", " + issues[0].reason + ")";
        throw TooManyMalformed(msg);
    }
    if (issues_out) *issues_out = std::move(issues);
}

ParseResult parse_events(std::istream& in, LogFormat format, double max_error_rate) {
    ParseResult result;
    std::size_t data_lines = 0;
    for_each_event(
        in, format, max_error_rate,
        [&](const EventRecord& rec) {
            result.events.push_back(rec);
            ++data_lines;
        },
        &result.issues);
    result.lines_seen = data_lines + result.issues.size();
    return result;
}

LogFormat format_from_path(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : to_lower(path.substr(dot + 1));
    if (ext == "jsonl" || ext == "ndjson" || ext == "json") return LogFormat::jsonl;
    return LogFormat::csv;
}

std::int64_t sessions_by_gap(std::vector<double> timestamps, double gap_seconds) {
    if (timestamps.empty()) return 0;
    std::sort(timestamps.begin(), timestamps.end());
    std::int64_t sessions = 1;
    for (std::size_t i = 1; i < timestamps.size(); ++i)
        if (timestamps[i] - timestamps[i - 1] > gap_seconds) ++sessions;
    return sessions;
}

namespace {
std::int64_t day_index(double ts, double tz_offset) {
    return static_cast<std::int64_t>(std::floor((ts + tz_offset) / 86400.0));
}
} // namespace

RawFeatureAggregator::RawFeatureAggregator(const PeriodSpec& period, AggregateOptions opts)
    : period_(period), opts_(opts) {}

void RawFeatureAggregator::add(const EventRecord& ev) {
    if (!period_.contains(ev.timestamp)) return;
    if (ev.arm != Arm::none) ++armed_events_;
    UserAcc& acc = users_[ev.user_id];
    acc.days.insert(day_index(ev.timestamp, opts_.tz_offset_seconds));
    acc.timestamps.push_back(ev.timestamp);
    switch (ev.event) {
    case EventKind::session_start:
        ++acc.session_starts;
        break;
    case EventKind::cpv:
    case EventKind::apv:
    case EventKind::click:
        acc.counters[ev.page_type + "_" + event_name(ev.event)] += 1;
        break;
    }
}

std::vector<RawUserFeatures> RawFeatureAggregator::finish() {
    if (users_.empty()) throw EmptyPeriod("EmptyPeriod: no events in the segment definition period");
    if (armed_events_ > 0 && opts_.warn_on_armed_events)
        std::cerr << "warning: " << armed_events_
                  << " definition-period events carry an arm label; arm ignored for segmentation\n";
    std::vector<RawUserFeatures> out;
    out.reserve(users_.size());
    for (auto& [user, acc] : users_) {
        RawUserFeatures f;
        f.user_id = user;
        f.days_visited = static_cast<std::int64_t>(acc.days.size());
        f.sessions = acc.session_starts > 0
                         ? acc.session_starts
                         : sessions_by_gap(std::move(acc.timestamps), opts_.session_gap_seconds);
        f.counters = std::move(acc.counters);
        out.push_back(std::move(f));
    }
    users_.clear();
    return out;
}

std::vector<RawUserFeatures> aggregate_raw_features(std::span<const EventRecord> events,
                                                    const PeriodSpec& period,
                                                    const AggregateOptions& opts) {
    RawFeatureAggregator agg(period, opts);
    for (const EventRecord& ev : events) agg.add(ev);
    return agg.finish();
}

ExperimentAggregator::ExperimentAggregator(const PeriodSpec& period, AggregateOptions opts)
    : period_(period), opts_(opts) {}

void ExperimentAggregator::add(const EventRecord& ev) {
    if (!period_.contains(ev.timestamp)) return;
    if (ev.arm == Arm::none)
        throw MissingArm("MissingArm: experiment-period event without an arm for user " + ev.user_id);
    UserAcc& acc = users_[ev.user_id];
    if (acc.arm == Arm::none) {
        acc.arm = ev.arm;
    } else if (acc.arm != ev.arm) {
        throw ArmConflict("ArmConflict: user " + ev.user_id + " appears in both arms");
    }
    acc.days.insert(day_index(ev.timestamp, opts_.tz_offset_seconds));
    acc.timestamps.push_back(ev.timestamp);
    switch (ev.event) {
    case EventKind::session_start:
        ++acc.session_starts;
        break;
    case EventKind::cpv:
        acc.totals.cpv += 1;
        acc.totals.page_cpv[ev.page_type] += 1;
        break;
    case EventKind::apv:
        acc.totals.apv += 1;
        acc.totals.page_apv[ev.page_type] += 1;
        break;
    case EventKind::click:
        acc.totals.clicks += 1;
        break;
    }
}

std::vector<ExperimentMetrics> ExperimentAggregator::finish() {
    if (users_.empty()) throw EmptyPeriod("EmptyPeriod: no events in the experiment period");
    std::vector<ExperimentMetrics> out;
    out.reserve(users_.size());
    for (auto& [user, acc] : users_) {
        ExperimentMetrics m = std::move(acc.totals);
        m.user_id = user;
        m.arm = acc.arm;
        m.days_visited = static_cast<std::int64_t>(acc.days.size());
        m.sessions = acc.session_starts > 0
                         ? acc.session_starts
                         : sessions_by_gap(std::move(acc.timestamps), opts_.session_gap_seconds);
        out.push_back(std::move(m));
    }
    users_.clear();
    return out;
}

std::vector<ExperimentMetrics> aggregate_experiment_metrics(std::span<const EventRecord> events,
                                                            const PeriodSpec& period,
                                                            const AggregateOptions& opts) {
    ExperimentAggregator agg(period, opts);
    for (const EventRecord& ev : events) agg.add(ev);
    return agg.finish();
}

std::size_t count_apv_without_cpv(std::span<const ExperimentMetrics> users) {
    std::size_t bad = 0;
    for (const auto& u : users)
        for (const auto& [page, apv] : u.page_apv) {
            if (apv <= 0) continue;
            auto it = u.page_cpv.find(page);
            if (it == u.page_cpv.end() || it->second <= 0) ++bad;
        }
    return bad;
}

} // namespace segex
