#include "segex/segments.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "segex/errors.hpp"
#include "segex/util.hpp"

namespace segex {

std::vector<SegmentProfile> profile_segments(const KMeansModel& model,
                                             const FeatureMatrix& stage2,
                                             std::span<const int> labels) {
    stage2.require_stage(Stage::orthogonal, "profile_segments");
    if (labels.size() != stage2.rows())
        throw DimensionMismatch("profile_segments: labels do not match matrix rows");

    const std::size_t p = stage2.cols();
    const std::size_t n = stage2.rows();
    const int k = model.k;

    std::vector<double> pop_mean(p, 0.0), pop_sd(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        double sum = 0;
        for (std::size_t i = 0; i < n; ++i) sum += stage2.at(i, j);
        pop_mean[j] = sum / static_cast<double>(n);
        double ss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = stage2.at(i, j) - pop_mean[j];
            ss += d * d;
        }
        pop_sd[j] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    }

    std::vector<SegmentProfile> profiles(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        auto& pr = profiles[static_cast<std::size_t>(c)];
        pr.id = c;
        pr.metrics = stage2.columns;
        pr.means.assign(p, 0.0);
        pr.z.assign(p, 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const int c = labels[i];
        if (c < 0 || c >= k) throw DimensionMismatch("profile_segments: label out of range");
        auto& pr = profiles[static_cast<std::size_t>(c)];
        pr.size += 1;
        for (std::size_t j = 0; j < p; ++j) pr.means[j] += stage2.at(i, j);
    }
    for (auto& pr : profiles) {
        if (pr.size == 0) {
            pr.empty = true;
            std::cerr << "warning: segment " << pr.id << " has no members\n";
            continue;
        }
        for (std::size_t j = 0; j < p; ++j) {
            pr.means[j] /= static_cast<double>(pr.size);
            if (pop_sd[j] > 0) {
                pr.z[j] = (pr.means[j] - pop_mean[j]) / pop_sd[j];
            } else {
                pr.z[j] = 0.0;
                pr.degenerate_z = true;
            }
        }
        if (pr.degenerate_z)
            std::cerr << "warning: zero population spread for some metric; z reported as 0\n";
    }
    return profiles;
}

std::string metric_family(const std::string& column) {
    if (column == "vdays_per_week" || column == "sessions_per_vday") return "Frequency";
    std::string base = column;
    const std::string per_session = "_per_session";
    if (base.size() > per_session.size() &&
        base.compare(base.size() - per_session.size(), per_session.size(), per_session) == 0)
        base.resize(base.size() - per_session.size());
    for (const char* suffix : {"_cpv", "_apv", "_clicks", "_click"}) {
        const std::size_t len = std::string(suffix).size();
        if (base.size() > len && base.compare(base.size() - len, len, suffix) == 0) {
            base.resize(base.size() - len);
            break;
        }
    }
    return title_case(base);
}

namespace {

std::string auto_name(const SegmentProfile& pr, double z_threshold) {
    // family z = max over member metrics
    std::map<std::string, double> family_z;
    for (std::size_t j = 0; j < pr.metrics.size(); ++j) {
        const std::string fam = metric_family(pr.metrics[j]);
        auto it = family_z.find(fam);
        if (it == family_z.end())
            family_z.emplace(fam, pr.z[j]);
        else
            it->second = std::max(it->second, pr.z[j]);
    }

    std::vector<std::pair<std::string, double>> ranked(family_z.begin(), family_z.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    std::vector<std::string> qualifying;
    for (const auto& [fam, z] : ranked)
        if (z >= z_threshold) qualifying.push_back(fam);

    if (qualifying.empty()) return "Tourists";
    if (qualifying.size() == 1) {
        bool rest_negative = true;
        for (const auto& [fam, z] : ranked)
            if (fam != qualifying[0] && z >= 0) rest_negative = false;
        return rest_negative ? qualifying[0] + " Only" : qualifying[0];
    }
    return qualifying[0] + " & " + qualifying[1];
}

} // namespace

void name_segments(std::vector<SegmentProfile>& profiles, double z_threshold,
                   const std::map<int, std::string>& overrides) {
    std::set<std::string> used;
    for (auto& pr : profiles) {
        auto ov = overrides.find(pr.id);
        std::string name = ov != overrides.end() ? ov->second : auto_name(pr, z_threshold);
        if (used.count(name)) {
            int suffix = 2;
            while (used.count(name + " " + std::to_string(suffix))) ++suffix;
            name += " " + std::to_string(suffix);
        }
        used.insert(name);
        pr.name = std::move(name);
    }
}

} // namespace segex
