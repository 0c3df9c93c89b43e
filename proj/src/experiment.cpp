#include "segex/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "segex/errors.hpp"
#include "segex/stats.hpp"

namespace segex {

AssignResult assign_segments(const std::map<std::string, int>& definition_labels,
                             std::span<const ExperimentMetrics> experiment_users,
                             const std::map<std::string, Arm>* assignment_log) {
    AssignResult res;
    std::set<std::string> seen;
    for (const auto& m : experiment_users) {
        SegmentedUser u;
        u.user_id = m.user_id;
        u.arm = m.arm;
        u.metrics = m;
        auto it = definition_labels.find(m.user_id);
        if (it != definition_labels.end()) {
            u.segment = it->second;
            u.status = 1;
            ++res.status1;
        } else {
            u.segment = kUnseenSegment;
            u.status = 3;
            ++res.status3;
        }
        seen.insert(m.user_id);
        res.users.push_back(std::move(u));
    }
    for (const auto& [user, segment] : definition_labels) {
        if (seen.count(user)) continue;
        Arm arm = Arm::none;
        if (assignment_log) {
            auto it = assignment_log->find(user);
            if (it != assignment_log->end()) arm = it->second;
        }
        if (arm == Arm::none) {
            ++res.excluded_no_arm;
            continue;
        }
        SegmentedUser u;
        u.user_id = user;
        u.segment = segment;
        u.status = 2;
        u.arm = arm;
        u.metrics.user_id = user;
        u.metrics.arm = arm; // all counters stay zero: no engagement
        ++res.status2;
        res.users.push_back(std::move(u));
    }
    if (res.excluded_no_arm > 0)
        std::cerr << "warning: excluded " << res.excluded_no_arm
                  << " definition-only users with no logged arm assignment\n";
    std::sort(res.users.begin(), res.users.end(),
              [](const SegmentedUser& a, const SegmentedUser& b) { return a.user_id < b.user_id; });
    return res;
}

double metric_value(const ExperimentMetrics& m, const std::string& metric) {
    if (metric == "days_visited") return static_cast<double>(m.days_visited);
    if (metric == "sessions") return static_cast<double>(m.sessions);
    if (metric == "cpv") return static_cast<double>(m.cpv);
    if (metric == "apv") return static_cast<double>(m.apv);
    if (metric == "clicks") return static_cast<double>(m.clicks);
    if (metric.rfind("page:", 0) == 0) {
        const auto second = metric.rfind(':');
        const std::string page = metric.substr(5, second - 5);
        const std::string kind = metric.substr(second + 1);
        const auto& map = kind == "apv" ? m.page_apv : m.page_cpv;
        auto it = map.find(page);
        return it == map.end() ? 0.0 : static_cast<double>(it->second);
    }
    throw ConfigError("unknown metric: " + metric);
}

MetricEffect treatment_effect(std::span<const SegmentedUser* const> subset, const std::string& metric) {
    std::vector<double> control, test;
    for (const SegmentedUser* u : subset) {
        (u->arm == Arm::control ? control : test).push_back(metric_value(u->metrics, metric));
    }
    if (control.empty() || test.empty())
        throw OneArmOnly("treatment_effect: subset does not contain both arms");

    WelchResult w = welch_t_test(test, control);
    MetricEffect eff;
    eff.n_control = control.size();
    eff.n_test = test.size();
    eff.control_mean = mean_and_variance(control).mean;
    eff.test_mean = mean_and_variance(test).mean;
    eff.abs_diff = eff.test_mean - eff.control_mean;
    if (eff.control_mean != 0.0) eff.rel_diff = eff.abs_diff / eff.control_mean;
    eff.p_value = w.p;
    eff.degenerate = w.degenerate;
    return eff;
}

MetricEffect treatment_effect(std::span<const SegmentedUser> users, const std::string& metric) {
    std::vector<const SegmentedUser*> ptrs;
    ptrs.reserve(users.size());
    for (const auto& u : users) ptrs.push_back(&u);
    return treatment_effect(std::span<const SegmentedUser* const>(ptrs), metric);
}

namespace {

struct SegmentBuckets {
    // ordered: labeled segments sorted by display name, then unseen
    std::vector<int> order;
    std::map<int, std::vector<const SegmentedUser*>> members;
};

std::string display_name(int segment, const std::map<int, std::string>& names) {
    if (segment == kUnseenSegment) return "Unseen";
    auto it = names.find(segment);
    return it != names.end() ? it->second : "Segment " + std::to_string(segment);
}

SegmentBuckets bucket_by_segment(std::span<const SegmentedUser> users,
                                 const std::map<int, std::string>& names) {
    SegmentBuckets b;
    for (const auto& u : users) b.members[u.segment].push_back(&u);
    for (const auto& [seg, mem] : b.members)
        if (seg != kUnseenSegment) b.order.push_back(seg);
    std::sort(b.order.begin(), b.order.end(), [&](int a, int c) {
        return display_name(a, names) < display_name(c, names);
    });
    if (b.members.count(kUnseenSegment)) b.order.push_back(kUnseenSegment);
    return b;
}

} // namespace

EffectTable segment_effect_table(std::span<const SegmentedUser> users,
                                 const std::vector<std::string>& metrics,
                                 const std::map<int, std::string>& segment_names,
                                 double suppression_threshold, bool bonferroni) {
    EffectTable table;
    table.metrics = metrics;
    table.bonferroni = bonferroni;

    SegmentBuckets buckets = bucket_by_segment(users, segment_names);
    const double total_users = static_cast<double>(users.size());

    EffectRow total_row;
    total_row.segment_name = "TOTAL";
    total_row.is_total = true;
    total_row.users = users.size();
    total_row.user_share = 1.0;
    for (const auto& metric : metrics) total_row.metrics.push_back(treatment_effect(users, metric));

    for (int seg : buckets.order) {
        const auto& members = buckets.members[seg];
        EffectRow row;
        row.segment = seg;
        row.segment_name = display_name(seg, segment_names);
        row.users = members.size();
        row.user_share = static_cast<double>(members.size()) / total_users;
        row.suppressed = row.user_share < suppression_threshold;
        for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
            MetricEffect eff;
            try {
                eff = treatment_effect(std::span<const SegmentedUser* const>(members), metrics[mi]);
            } catch (const OneArmOnly&) {
                eff.degenerate = true; // one-arm segment: no comparison possible
                row.suppressed = true;
            }
            const auto& total_eff = total_row.metrics[mi];
            if (eff.rel_diff && total_eff.rel_diff)
                eff.worse_than_total = *eff.rel_diff < 0 && *eff.rel_diff < *total_eff.rel_diff;
            row.metrics.push_back(eff);
        }
        if (!row.suppressed) ++table.segments_tested;
        table.rows.push_back(std::move(row));
    }

    if (bonferroni && table.segments_tested > 0) {
        const double m = static_cast<double>(table.segments_tested);
        for (auto& row : table.rows)
            if (!row.suppressed)
                for (auto& eff : row.metrics)
                    if (eff.p_value) eff.p_value = std::min(1.0, *eff.p_value * m);
    }

    table.rows.push_back(std::move(total_row));
    return table;
}

ImportanceTable preliminary_importance(std::span<const SegmentedUser> users,
                                       const std::vector<std::string>& metrics,
                                       const std::map<int, std::string>& segment_names) {
    ImportanceTable table;
    table.metrics.push_back("user_count");
    table.metrics.insert(table.metrics.end(), metrics.begin(), metrics.end());

    SegmentBuckets buckets = bucket_by_segment(users, segment_names);

    std::vector<double> grand(table.metrics.size(), 0.0);
    grand[0] = static_cast<double>(users.size());
    for (const auto& u : users)
        for (std::size_t mi = 0; mi < metrics.size(); ++mi)
            grand[mi + 1] += metric_value(u.metrics, metrics[mi]);
    for (std::size_t mi = 0; mi < table.metrics.size(); ++mi)
        if (grand[mi] == 0.0)
            throw ZeroGrandTotal("preliminary_importance: metric " + table.metrics[mi] +
                                 " is absent everywhere");

    for (int seg : buckets.order) {
        const auto& members = buckets.members[seg];
        ImportanceRow row;
        row.segment = seg;
        row.segment_name = display_name(seg, segment_names);
        row.shares.assign(table.metrics.size(), 0.0);
        row.shares[0] = static_cast<double>(members.size()) / grand[0];
        for (const SegmentedUser* u : members)
            for (std::size_t mi = 0; mi < metrics.size(); ++mi)
                row.shares[mi + 1] += metric_value(u->metrics, metrics[mi]);
        for (std::size_t mi = 0; mi < metrics.size(); ++mi) row.shares[mi + 1] /= grand[mi + 1];
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::vector<ContributionRow> contribution_decomposition(std::span<const SegmentedUser> users,
                                                        const std::string& metric,
                                                        const std::map<int, std::string>& segment_names) {
    SegmentBuckets buckets = bucket_by_segment(users, segment_names);

    std::vector<ContributionRow> rows;
    double overall = 0;
    for (int seg : buckets.order) {
        const auto& members = buckets.members[seg];
        MetricEffect eff = treatment_effect(std::span<const SegmentedUser* const>(members), metric);
        ContributionRow row;
        row.segment = seg;
        row.segment_name = display_name(seg, segment_names);
        // arm-balanced within-segment total: per-user mean diff scaled by the
        // full segment population, immune to unequal arm splits
        row.within_total_diff = eff.abs_diff * static_cast<double>(members.size());
        overall += row.within_total_diff;
        rows.push_back(std::move(row));
    }
    if (overall == 0.0)
        throw NoOverallEffect("contribution_decomposition: overall difference for " + metric + " is zero");
    for (auto& row : rows) row.share = row.within_total_diff / overall;
    return rows;
}

std::vector<DrilldownCell> pagetype_drilldown(std::span<const SegmentedUser> users,
                                              const std::map<int, std::string>& segment_names,
                                              std::size_t min_cell_users) {
    SegmentBuckets buckets = bucket_by_segment(users, segment_names);

    std::set<std::string> pages;
    for (const auto& u : users) {
        for (const auto& [page, v] : u.metrics.page_cpv) pages.insert(page);
        for (const auto& [page, v] : u.metrics.page_apv) pages.insert(page);
    }

    std::vector<DrilldownCell> cells;
    for (int seg : buckets.order) {
        const auto& members = buckets.members[seg];
        for (const auto& page : pages) {
            std::size_t active = 0;
            for (const SegmentedUser* u : members) {
                const auto itc = u->metrics.page_cpv.find(page);
                const auto ita = u->metrics.page_apv.find(page);
                if ((itc != u->metrics.page_cpv.end() && itc->second > 0) ||
                    (ita != u->metrics.page_apv.end() && ita->second > 0))
                    ++active;
            }
            if (active == 0) continue; // page untouched by this segment in both arms
            DrilldownCell cell;
            cell.segment = seg;
            cell.segment_name = display_name(seg, segment_names);
            cell.page_type = page;
            cell.active_users = active;
            cell.suppressed = active < min_cell_users;
            cell.cpv = treatment_effect(std::span<const SegmentedUser* const>(members), "page:" + page + ":cpv");
            cell.apv = treatment_effect(std::span<const SegmentedUser* const>(members), "page:" + page + ":apv");
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

} // namespace segex
