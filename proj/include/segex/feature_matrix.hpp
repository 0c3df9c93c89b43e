#ifndef SEGEX_FEATURE_MATRIX_HPP
#define SEGEX_FEATURE_MATRIX_HPP

#include <span>
#include <string>
#include <vector>

#include "segex/ingest.hpp"

namespace segex {

// Engineering stage of a feature matrix; transitions only ever advance by one.
enum class Stage { raw = 1, orthogonal = 2, cleaned = 3, logged = 4, normalized = 5, pca = 6 };

const char* stage_name(Stage s);

struct FeatureMatrix {
    std::vector<std::string> user_ids; // n
    std::vector<std::string> columns;  // p
    std::vector<double> values;        // row-major n*p
    Stage stage = Stage::raw;

    std::size_t rows() const { return user_ids.size(); }
    std::size_t cols() const { return columns.size(); }

    double& at(std::size_t i, std::size_t j) { return values[i * columns.size() + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * columns.size() + j]; }
    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * columns.size(), columns.size()};
    }

    int column_index(const std::string& name) const; // -1 if absent
    void require_stage(Stage expected, const char* op) const;
    void check_finite() const; // throws on NaN / infinity
};

// Stage-1 matrix from aggregated per-user counts. Column order: days_visited,
// sessions, then the requested engagement counters; users sorted by id.
FeatureMatrix build_raw_matrix(std::span<const RawUserFeatures> users,
                               const std::vector<std::string>& columns);

// days_visited, sessions, then every counter observed in the data (sorted)
std::vector<std::string> default_feature_columns(std::span<const RawUserFeatures> users);

} // namespace segex

#endif
