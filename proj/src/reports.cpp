#include "segex/reports.hpp"

#include <cstdio>

#include <json.hpp>

#include "segex/util.hpp"

namespace segex {

using nlohmann::json;

namespace {

std::string opt(const std::optional<double>& v) { return v ? fmt_double(*v) : "n/a"; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

const EffectRow& total_row(const EffectTable& table) { return table.rows.back(); }

json effect_to_json(const MetricEffect& e) {
    return json{{"control_mean", e.control_mean},
                {"test_mean", e.test_mean},
                {"abs_diff", e.abs_diff},
                {"rel_diff", opt_json(e.rel_diff)},
                {"p_value", opt_json(e.p_value)},
                {"degenerate", e.degenerate},
                {"worse_than_total", e.worse_than_total},
                {"n_control", e.n_control},
                {"n_test", e.n_test}};
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.1f%%", v * 100.0);
    return buf;
}

std::string pct_share(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", v * 100.0);
    return buf;
}

} // namespace

std::string overall_csv(const AnalysisReport& report) {
    std::string out = "metric,control_mean,test_mean,abs_diff,rel_diff,p_value,significant\n";
    const EffectRow& total = total_row(report.effects);
    for (std::size_t mi = 0; mi < report.effects.metrics.size(); ++mi) {
        const MetricEffect& e = total.metrics[mi];
        out += report.effects.metrics[mi] + ',' + fmt_double(e.control_mean) + ',' +
               fmt_double(e.test_mean) + ',' + fmt_double(e.abs_diff) + ',' + opt(e.rel_diff) +
               ',' + opt(e.p_value) + ',';
        out += e.p_value && *e.p_value < report.alpha ? "yes" : "no";
        out += '\n';
    }
    return out;
}

std::string overall_json(const AnalysisReport& report) {
    json rows = json::array();
    const EffectRow& total = total_row(report.effects);
    for (std::size_t mi = 0; mi < report.effects.metrics.size(); ++mi) {
        json r = effect_to_json(total.metrics[mi]);
        r["metric"] = report.effects.metrics[mi];
        r["significant"] = total.metrics[mi].p_value && *total.metrics[mi].p_value < report.alpha;
        rows.push_back(r);
    }
    return json{{"alpha", report.alpha}, {"rows", rows}}.dump(2) + "\n";
}

std::string effects_csv(const AnalysisReport& report) {
    std::string out = "segment,users,user_share";
    for (const auto& m : report.effects.metrics)
        out += "," + m + "_control_mean," + m + "_test_mean," + m + "_abs_diff," + m +
               "_rel_diff," + m + "_p_value," + m + "_worse_than_total";
    out += '\n';
    for (const auto& row : report.effects.rows) {
        out += row.segment_name + ',' + std::to_string(row.users) + ',' + fmt_double(row.user_share);
        for (const auto& e : row.metrics) {
            if (row.suppressed) {
                out += ",n/a,n/a,n/a,n/a,n/a,n/a";
                continue;
            }
            out += ',' + fmt_double(e.control_mean) + ',' + fmt_double(e.test_mean) + ',' +
                   fmt_double(e.abs_diff) + ',' + opt(e.rel_diff) + ',' + opt(e.p_value) + ',';
            out += e.worse_than_total ? "yes" : "no";
        }
        out += '\n';
    }
    return out;
}

std::string effects_json(const AnalysisReport& report) {
    json rows = json::array();
    for (const auto& row : report.effects.rows) {
        json r{{"segment", row.is_total ? json(nullptr) : json(row.segment)},
               {"name", row.segment_name},
               {"users", row.users},
               {"user_share", row.user_share},
               {"suppressed", row.suppressed}};
        if (row.suppressed) {
            r["effects"] = json(nullptr);
        } else {
            json effects;
            for (std::size_t mi = 0; mi < report.effects.metrics.size(); ++mi)
                effects[report.effects.metrics[mi]] = effect_to_json(row.metrics[mi]);
            r["effects"] = effects;
        }
        rows.push_back(r);
    }
    return json{{"metrics", report.effects.metrics},
                {"segments_tested", report.effects.segments_tested},
                {"bonferroni", report.effects.bonferroni},
                {"statuses",
                 {{"both_periods", report.assignment.status1},
                  {"definition_only", report.assignment.status2},
                  {"experiment_only", report.assignment.status3},
                  {"excluded_no_arm", report.assignment.excluded_no_arm}}},
                {"rows", rows}}
               .dump(2) +
           "\n";
}

std::string importance_csv(const AnalysisReport& report) {
    std::string out = "segment";
    for (const auto& m : report.importance.metrics) out += "," + m + "_share";
    out += '\n';
    for (const auto& row : report.importance.rows) {
        out += row.segment_name;
        for (double share : row.shares) out += ',' + fmt_double(share);
        out += '\n';
    }
    return out;
}

std::string importance_json(const AnalysisReport& report) {
    json rows = json::array();
    for (const auto& row : report.importance.rows) {
        json shares;
        for (std::size_t mi = 0; mi < report.importance.metrics.size(); ++mi)
            shares[report.importance.metrics[mi]] = row.shares[mi];
        rows.push_back(json{{"segment", row.segment}, {"name", row.segment_name}, {"shares", shares}});
    }
    return json{{"metrics", report.importance.metrics}, {"rows", rows}}.dump(2) + "\n";
}

std::string contribution_csv(const AnalysisReport& report) {
    std::string out = "metric,segment,within_total_diff,share\n";
    for (const auto& metric : report.contribution_metrics) {
        auto it = report.contributions.find(metric);
        if (it == report.contributions.end()) continue;
        for (const auto& row : it->second)
            out += metric + ',' + row.segment_name + ',' + fmt_double(row.within_total_diff) + ',' +
                   fmt_double(row.share) + '\n';
    }
    return out;
}

std::string contribution_json(const AnalysisReport& report) {
    json by_metric;
    for (const auto& metric : report.contribution_metrics) {
        auto it = report.contributions.find(metric);
        if (it == report.contributions.end()) {
            by_metric[metric] = json(nullptr);
            continue;
        }
        json rows = json::array();
        for (const auto& row : it->second)
            rows.push_back(json{{"segment", row.segment},
                                {"name", row.segment_name},
                                {"within_total_diff", row.within_total_diff},
                                {"share", row.share}});
        by_metric[metric] = rows;
    }
    json skipped;
    for (const auto& [metric, reason] : report.contribution_skipped) skipped[metric] = reason;
    return json{{"contributions", by_metric}, {"skipped", skipped}}.dump(2) + "\n";
}

std::string drilldown_csv(const AnalysisReport& report) {
    std::string out = "segment,page_type,active_users,cpv_rel_diff,cpv_p_value,apv_rel_diff,apv_p_value\n";
    for (const auto& cell : report.drilldown) {
        out += cell.segment_name + ',' + cell.page_type + ',' + std::to_string(cell.active_users);
        if (cell.suppressed) {
            out += ",n/a,n/a,n/a,n/a\n";
            continue;
        }
        out += ',' + opt(cell.cpv.rel_diff) + ',' + opt(cell.cpv.p_value) + ',' +
               opt(cell.apv.rel_diff) + ',' + opt(cell.apv.p_value) + '\n';
    }
    return out;
}

std::string drilldown_json(const AnalysisReport& report) {
    json rows = json::array();
    for (const auto& cell : report.drilldown) {
        json r{{"segment", cell.segment},
               {"name", cell.segment_name},
               {"page_type", cell.page_type},
               {"active_users", cell.active_users},
               {"suppressed", cell.suppressed}};
        if (!cell.suppressed) {
            r["cpv"] = effect_to_json(cell.cpv);
            r["apv"] = effect_to_json(cell.apv);
        }
        rows.push_back(r);
    }
    return json{{"rows", rows}}.dump(2) + "\n";
}

std::string text_summary(const AnalysisReport& report) {
    std::string out;
    char buf[256];

    out += "== Overall treatment effect ==\n";
    const EffectRow& total = total_row(report.effects);
    std::snprintf(buf, sizeof(buf), "%-14s %12s %12s %9s %9s  %s\n", "metric", "control", "test",
                  "diff", "p", "significant");
    out += buf;
    for (std::size_t mi = 0; mi < report.effects.metrics.size(); ++mi) {
        const MetricEffect& e = total.metrics[mi];
        std::snprintf(buf, sizeof(buf), "%-14s %12.4f %12.4f %9s %9s  %s\n",
                      report.effects.metrics[mi].c_str(), e.control_mean, e.test_mean,
                      e.rel_diff ? pct(*e.rel_diff).c_str() : "n/a",
                      e.p_value ? fmt_double(*e.p_value).substr(0, 8).c_str() : "n/a",
                      e.p_value && *e.p_value < report.alpha ? "yes" : "no");
        out += buf;
    }

    out += "\n== Segment importance (share of period totals) ==\n";
    std::snprintf(buf, sizeof(buf), "%-28s", "segment");
    out += buf;
    for (const auto& m : report.importance.metrics) {
        std::snprintf(buf, sizeof(buf), " %14s", m.c_str());
        out += buf;
    }
    out += '\n';
    for (const auto& row : report.importance.rows) {
        std::snprintf(buf, sizeof(buf), "%-28s", row.segment_name.c_str());
        out += buf;
        for (double share : row.shares) {
            std::snprintf(buf, sizeof(buf), " %14s", pct_share(share).c_str());
            out += buf;
        }
        out += '\n';
    }

    out += "\n== Segment treatment effects (relative diff; * p<alpha, ! worse than total) ==\n";
    std::snprintf(buf, sizeof(buf), "%-28s %7s", "segment", "users");
    out += buf;
    for (const auto& m : report.effects.metrics) {
        std::snprintf(buf, sizeof(buf), " %14s", m.c_str());
        out += buf;
    }
    out += '\n';
    for (const auto& row : report.effects.rows) {
        std::snprintf(buf, sizeof(buf), "%-28s %7s", row.segment_name.c_str(),
                      row.is_total ? "100%" : pct_share(row.user_share).c_str());
        out += buf;
        for (const auto& e : row.metrics) {
            std::string cell = "n/a";
            if (!row.suppressed && e.rel_diff) {
                cell = pct(*e.rel_diff);
                if (e.p_value && *e.p_value < report.alpha) cell += '*';
                if (e.worse_than_total) cell += '!';
            }
            std::snprintf(buf, sizeof(buf), " %14s", cell.c_str());
            out += buf;
        }
        out += '\n';
    }
    std::snprintf(buf, sizeof(buf),
                  "statuses: %zu both periods, %zu definition-only (zero-filled), %zu unseen\n",
                  report.assignment.status1, report.assignment.status2, report.assignment.status3);
    out += buf;

    for (const auto& metric : report.contribution_metrics) {
        auto it = report.contributions.find(metric);
        out += "\n== Contribution to the overall " + metric + " difference ==\n";
        if (it == report.contributions.end()) {
            auto why = report.contribution_skipped.find(metric);
            out += "(" + (why == report.contribution_skipped.end() ? std::string("skipped")
                                                                   : why->second) + ")\n";
            continue;
        }
        for (const auto& row : it->second) {
            std::snprintf(buf, sizeof(buf), "%-28s %9s\n", row.segment_name.c_str(),
                          pct(row.share).c_str());
            out += buf;
        }
    }

    out += "\n== CPV difference by page type and segment ==\n";
    std::string last_segment;
    for (const auto& cell : report.drilldown) {
        if (cell.segment_name != last_segment) {
            out += cell.segment_name + ":\n";
            last_segment = cell.segment_name;
        }
        std::snprintf(buf, sizeof(buf), "  %-20s %9s\n", cell.page_type.c_str(),
                      cell.suppressed || !cell.cpv.rel_diff ? "n/a" : pct(*cell.cpv.rel_diff).c_str());
        out += buf;
    }
    return out;
}

std::string fit_summary(const SegmentModel& model) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "fitted K=%d on %zu users (%zu outliers excluded from training), wcss=%s\n",
                  model.kmeans.k, model.n_definition_users, model.outliers_removed,
                  fmt_double(model.kmeans.wcss).c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf), "pca: %zu of %zu components (threshold %.2f)\n",
                  model.pca.n_components(), model.pca.input_columns.size(),
                  model.pca.variance_threshold);
    out += buf;
    if (!model.selection.rows.empty()) {
        std::snprintf(buf, sizeof(buf), "selection: BIC argmin K=%d%s\n", model.selection.recommended_k,
                      model.selection.criteria_disagree ? " (criteria disagree)" : "");
        out += buf;
        if (model.selection.db_recommended_k) {
            std::snprintf(buf, sizeof(buf), "selection: Davies-Bouldin argmin K=%d\n",
                          *model.selection.db_recommended_k);
            out += buf;
        }
    }
    out += "segments:\n";
    for (const auto& pr : model.profiles) {
        std::snprintf(buf, sizeof(buf), "  %2d %-28s %8zu users\n", pr.id, pr.name.c_str(), pr.size);
        out += buf;
    }
    return out;
}

std::vector<std::string> write_report_files(const AnalysisReport& report, const std::string& out_dir) {
    const std::string base = out_dir.empty() ? "." : out_dir;
    std::vector<std::string> paths;
    auto emit = [&](const std::string& name, const std::string& content) {
        const std::string path = base + "/" + name;
        write_text_file(path, content);
        paths.push_back(path);
    };
    emit("report_overall.csv", overall_csv(report));
    emit("report_overall.json", overall_json(report));
    emit("report_importance.csv", importance_csv(report));
    emit("report_importance.json", importance_json(report));
    emit("report_effects.csv", effects_csv(report));
    emit("report_effects.json", effects_json(report));
    emit("report_contribution.csv", contribution_csv(report));
    emit("report_contribution.json", contribution_json(report));
    emit("report_drilldown.csv", drilldown_csv(report));
    emit("report_drilldown.json", drilldown_json(report));
    emit("summary.txt", text_summary(report));
    return paths;
}

} // namespace segex
