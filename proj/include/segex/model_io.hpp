#ifndef SEGEX_MODEL_IO_HPP
#define SEGEX_MODEL_IO_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "segex/features.hpp"
#include "segex/ingest.hpp"
#include "segex/kmeans.hpp"
#include "segex/model_selection.hpp"
#include "segex/segments.hpp"

namespace segex {

inline constexpr int kModelFormatVersion = 1;

// Frozen segmentation artifact: everything analysis needs, including the
// per-user labels (definition-period users never re-enter the transform at
// analysis time).
struct SegmentModel {
    int format_version = kModelFormatVersion;
    std::uint64_t seed = 0;
    PeriodSpec definition_period;
    std::string input_digest;
    std::vector<std::string> stage1_columns;
    EngineeringStats stats;
    PcaModel pca;
    KMeansModel kmeans;
    std::vector<SegmentProfile> profiles;
    std::map<std::string, int> labels; // every definition-period user -> segment
    std::size_t n_definition_users = 0;
    std::size_t outliers_removed = 0; // excluded from training, assigned post hoc
    KSelectionCurve selection;        // empty rows when K was fixed
};

std::string model_to_json(const SegmentModel& model); // pretty, key-sorted, stable
SegmentModel model_from_json(const std::string& text);

void save_model_file(const SegmentModel& model, const std::string& path);
SegmentModel load_model_file(const std::string& path); // VersionMismatch on drift

std::map<int, std::string> segment_names(const SegmentModel& model);

struct RunConfig {
    PeriodSpec definition_period;  // start==end means unset
    PeriodSpec experiment_period;
    std::vector<std::string> feature_columns; // empty = discover from the data
    double outlier_quantile = 0.999;
    double variance_threshold = 0.85;
    int k = 0; // 0 = choose via k range
    int k_min = 2;
    int k_max = 10;
    std::uint64_t seed = 42;
    int restarts = 10;
    int max_iter = 300;
    double tol = 1e-6;
    double suppression_threshold = 0.01;
    double alpha = 0.05;
    double z_threshold = 1.0;
    double session_gap_minutes = 30;
    double tz_offset_seconds = 0;
    bool drop_constant = false;
    bool bonferroni = false;
    std::size_t min_cell_users = 100;
    double max_parse_error_rate = 0.01;
    std::map<int, std::string> segment_name_overrides;
    std::string output_dir = ".";
};

RunConfig parse_config_json(const std::string& text);
RunConfig load_config_file(const std::string& path);
void validate_config(const RunConfig& config);

// arm assignment log: CSV with header user_id,arm
std::map<std::string, Arm> load_assignment_log(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

} // namespace segex

#endif
