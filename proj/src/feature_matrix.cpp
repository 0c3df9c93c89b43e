#include "segex/feature_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "segex/errors.hpp"

namespace segex {

const char* stage_name(Stage s) {
    switch (s) {
    case Stage::raw: return "raw";
    case Stage::orthogonal: return "orthogonal";
    case Stage::cleaned: return "cleaned";
    case Stage::logged: return "logged";
    case Stage::normalized: return "normalized";
    case Stage::pca: return "pca";
    }
    return "?";
}

int FeatureMatrix::column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

void FeatureMatrix::require_stage(Stage expected, const char* op) const {
    if (stage != expected)
        throw StageError(std::string(op) + " expects a stage-" + stage_name(expected) +
                         " matrix, got " + stage_name(stage));
}

void FeatureMatrix::check_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) throw DataError("feature matrix contains a non-finite value");
}

FeatureMatrix build_raw_matrix(std::span<const RawUserFeatures> users,
                               const std::vector<std::string>& columns) {
    if (columns.size() < 2 || columns[0] != "days_visited" || columns[1] != "sessions")
        throw MissingColumn("raw feature columns must start with days_visited, sessions");

    std::vector<const RawUserFeatures*> sorted;
    sorted.reserve(users.size());
    for (const auto& u : users) sorted.push_back(&u);
    std::sort(sorted.begin(), sorted.end(),
              [](const RawUserFeatures* a, const RawUserFeatures* b) { return a->user_id < b->user_id; });

    FeatureMatrix m;
    m.stage = Stage::raw;
    m.columns = columns;
    m.user_ids.reserve(users.size());
    m.values.assign(users.size() * columns.size(), 0.0);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const RawUserFeatures& u = *sorted[i];
        m.user_ids.push_back(u.user_id);
        m.at(i, 0) = static_cast<double>(u.days_visited);
        m.at(i, 1) = static_cast<double>(u.sessions);
        for (std::size_t j = 2; j < columns.size(); ++j) {
            auto it = u.counters.find(columns[j]);
            m.at(i, j) = it == u.counters.end() ? 0.0 : static_cast<double>(it->second);
        }
    }
    return m;
}

std::vector<std::string> default_feature_columns(std::span<const RawUserFeatures> users) {
    std::set<std::string> counters;
    for (const auto& u : users)
        for (const auto& [name, count] : u.counters) counters.insert(name);
    std::vector<std::string> cols{"days_visited", "sessions"};
    cols.insert(cols.end(), counters.begin(), counters.end());
    return cols;
}

} // namespace segex
