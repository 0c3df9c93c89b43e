#include "segex/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "segex/errors.hpp"

namespace segex {

using nlohmann::json;

namespace {

json period_to_json(const PeriodSpec& p) {
    return json{{"start", p.start}, {"end", p.end}};
}

PeriodSpec period_from_json_checked(const json& j) {
    return PeriodSpec(j.at("start").get<double>(), j.at("end").get<double>());
}

json profile_to_json(const SegmentProfile& pr) {
    json j;
    j["id"] = pr.id;
    j["name"] = pr.name;
    j["size"] = pr.size;
    j["metrics"] = pr.metrics;
    j["means"] = pr.means;
    j["z"] = pr.z;
    j["empty"] = pr.empty;
    return j;
}

SegmentProfile profile_from_json(const json& j) {
    SegmentProfile pr;
    pr.id = j.at("id").get<int>();
    pr.name = j.at("name").get<std::string>();
    pr.size = j.at("size").get<std::size_t>();
    pr.metrics = j.at("metrics").get<std::vector<std::string>>();
    pr.means = j.at("means").get<std::vector<double>>();
    pr.z = j.at("z").get<std::vector<double>>();
    pr.empty = j.value("empty", false);
    return pr;
}

} // namespace

std::string model_to_json(const SegmentModel& model) {
    json j;
    j["format_version"] = model.format_version;
    j["created"] = {{"seed", model.seed},
                    {"definition_period", period_to_json(model.definition_period)},
                    {"input_digest", model.input_digest}};
    j["features"] = {{"stage1_columns", model.stage1_columns}};
    j["engineering"] = {{"weeks", model.stats.weeks},
                        {"outlier_quantile", model.stats.outlier_quantile},
                        {"columns", model.stats.columns},
                        {"outlier_thresholds", model.stats.outlier_thresholds},
                        {"normalized_columns", model.stats.normalized_columns},
                        {"means", model.stats.means},
                        {"sds", model.stats.sds},
                        {"log", "ln1p"}};
    j["pca"] = {{"input_columns", model.pca.input_columns},
                {"loadings", model.pca.loadings},
                {"explained_variance_ratio", model.pca.explained_variance_ratio},
                {"variance_threshold", model.pca.variance_threshold}};
    j["kmeans"] = {{"k", model.kmeans.k},
                   {"dim", model.kmeans.dim},
                   {"centroids", model.kmeans.centroids},
                   {"wcss", model.kmeans.wcss},
                   {"seed", model.kmeans.seed},
                   {"iterations_run", model.kmeans.iterations_run},
                   {"restarts", model.kmeans.restarts}};
    json profiles = json::array();
    for (const auto& pr : model.profiles) profiles.push_back(profile_to_json(pr));
    j["segments"] = profiles;
    j["labels"] = model.labels;
    j["diagnostics"] = {{"n_definition_users", model.n_definition_users},
                        {"outliers_removed", model.outliers_removed}};
    if (!model.selection.rows.empty()) {
        json rows = json::array();
        for (const auto& row : model.selection.rows) {
            json r{{"k", row.k}, {"wcss", row.wcss}, {"bic", row.bic}};
            if (row.davies_bouldin) r["davies_bouldin"] = *row.davies_bouldin;
            rows.push_back(r);
        }
        j["selection"] = {{"rows", rows},
                          {"recommended_k", model.selection.recommended_k},
                          {"criteria_disagree", model.selection.criteria_disagree}};
        if (model.selection.db_recommended_k)
            j["selection"]["db_recommended_k"] = *model.selection.db_recommended_k;
    }
    return j.dump(2) + "\n";
}

SegmentModel model_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ModelFormatError("model file is not a JSON object");
    if (!j.contains("format_version") || !j["format_version"].is_number_integer())
        throw VersionMismatch("model file lacks a format_version");
    if (j["format_version"].get<int>() != kModelFormatVersion)
        throw VersionMismatch("unsupported model format_version " +
                              std::to_string(j["format_version"].get<int>()));

    try {
        SegmentModel m;
        m.format_version = j["format_version"].get<int>();
        const auto& created = j.at("created");
        m.seed = created.at("seed").get<std::uint64_t>();
        m.definition_period = period_from_json_checked(created.at("definition_period"));
        m.input_digest = created.value("input_digest", std::string());
        m.stage1_columns = j.at("features").at("stage1_columns").get<std::vector<std::string>>();

        const auto& eng = j.at("engineering");
        m.stats.weeks = eng.at("weeks").get<double>();
        m.stats.outlier_quantile = eng.at("outlier_quantile").get<double>();
        m.stats.columns = eng.at("columns").get<std::vector<std::string>>();
        m.stats.outlier_thresholds = eng.at("outlier_thresholds").get<std::vector<double>>();
        m.stats.normalized_columns = eng.at("normalized_columns").get<std::vector<std::string>>();
        m.stats.means = eng.at("means").get<std::vector<double>>();
        m.stats.sds = eng.at("sds").get<std::vector<double>>();

        const auto& pca = j.at("pca");
        m.pca.input_columns = pca.at("input_columns").get<std::vector<std::string>>();
        m.pca.loadings = pca.at("loadings").get<std::vector<std::vector<double>>>();
        m.pca.explained_variance_ratio = pca.at("explained_variance_ratio").get<std::vector<double>>();
        m.pca.variance_threshold = pca.at("variance_threshold").get<double>();

        const auto& km = j.at("kmeans");
        m.kmeans.k = km.at("k").get<int>();
        m.kmeans.dim = km.at("dim").get<std::size_t>();
        m.kmeans.centroids = km.at("centroids").get<std::vector<std::vector<double>>>();
        m.kmeans.wcss = km.at("wcss").get<double>();
        m.kmeans.seed = km.at("seed").get<std::uint64_t>();
        m.kmeans.iterations_run = km.at("iterations_run").get<int>();
        m.kmeans.restarts = km.at("restarts").get<int>();

        for (const auto& pr : j.at("segments")) m.profiles.push_back(profile_from_json(pr));
        m.labels = j.at("labels").get<std::map<std::string, int>>();
        m.n_definition_users = j.at("diagnostics").at("n_definition_users").get<std::size_t>();
        m.outliers_removed = j.at("diagnostics").at("outliers_removed").get<std::size_t>();

        if (j.contains("selection")) {
            const auto& sel = j["selection"];
            for (const auto& r : sel.at("rows")) {
                KSelectionRow row;
                row.k = r.at("k").get<int>();
                row.wcss = r.at("wcss").get<double>();
                row.bic = r.at("bic").get<double>();
                if (r.contains("davies_bouldin")) row.davies_bouldin = r["davies_bouldin"].get<double>();
                m.selection.rows.push_back(row);
            }
            m.selection.recommended_k = sel.at("recommended_k").get<int>();
            if (sel.contains("db_recommended_k"))
                m.selection.db_recommended_k = sel["db_recommended_k"].get<int>();
            m.selection.criteria_disagree = sel.value("criteria_disagree", false);
        }
        return m;
    } catch (const json::exception& e) {
        throw ModelFormatError(std::string("malformed model file: ") + e.what());
    }
}

void save_model_file(const SegmentModel& model, const std::string& path) {
    write_text_file(path, model_to_json(model));
}

SegmentModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

std::map<int, std::string> segment_names(const SegmentModel& model) {
    std::map<int, std::string> names;
    for (const auto& pr : model.profiles) names[pr.id] = pr.name;
    return names;
}

RunConfig parse_config_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("config is not a JSON object");

    RunConfig c;
    try {
        if (j.contains("definition_period"))
            c.definition_period = period_from_json_checked(j["definition_period"]);
        if (j.contains("experiment_period"))
            c.experiment_period = period_from_json_checked(j["experiment_period"]);
        if (j.contains("feature_columns"))
            c.feature_columns = j["feature_columns"].get<std::vector<std::string>>();
        c.outlier_quantile = j.value("outlier_quantile", c.outlier_quantile);
        c.variance_threshold = j.value("variance_threshold", c.variance_threshold);
        c.k = j.value("k", c.k);
        if (j.contains("k_range")) {
            const auto& kr = j["k_range"];
            if (!kr.is_array() || kr.size() != 2) throw ConfigError("k_range must be [min,max]");
            c.k_min = kr[0].get<int>();
            c.k_max = kr[1].get<int>();
        }
        c.seed = j.value("seed", c.seed);
        c.restarts = j.value("restarts", c.restarts);
        c.max_iter = j.value("max_iter", c.max_iter);
        c.tol = j.value("tol", c.tol);
        c.suppression_threshold = j.value("suppression_threshold", c.suppression_threshold);
        c.alpha = j.value("alpha", c.alpha);
        c.z_threshold = j.value("z_threshold", c.z_threshold);
        c.session_gap_minutes = j.value("session_gap_minutes", c.session_gap_minutes);
        c.tz_offset_seconds = j.value("tz_offset_seconds", c.tz_offset_seconds);
        c.drop_constant = j.value("drop_constant", c.drop_constant);
        c.bonferroni = j.value("bonferroni", c.bonferroni);
        if (j.contains("min_cell_users")) {
            if (!j["min_cell_users"].is_number_integer() || j["min_cell_users"].get<std::int64_t>() < 0)
                throw ConfigError("min_cell_users must be a non-negative integer");
            c.min_cell_users = j["min_cell_users"].get<std::size_t>();
        }
        c.max_parse_error_rate = j.value("max_parse_error_rate", c.max_parse_error_rate);
        c.output_dir = j.value("output_dir", c.output_dir);
        if (j.contains("segment_name_overrides"))
            for (const auto& [key, value] : j["segment_name_overrides"].items())
                c.segment_name_overrides[std::stoi(key)] = value.get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    validate_config(c);
    return c;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_json(ss.str());
}

void validate_config(const RunConfig& c) {
    if (!(c.outlier_quantile > 0 && c.outlier_quantile < 1))
        throw ConfigError("outlier_quantile must lie in (0,1)");
    if (!(c.variance_threshold > 0 && c.variance_threshold <= 1))
        throw ConfigError("variance_threshold must lie in (0,1]");
    if (c.k < 0) throw ConfigError("k must be >= 1 (or 0 to select)");
    if (c.k_min < 1 || c.k_max < c.k_min) throw ConfigError("k_range must satisfy 1 <= min <= max");
    if (c.restarts < 1) throw ConfigError("restarts must be >= 1");
    if (c.max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (!(c.tol >= 0)) throw ConfigError("tol must be >= 0");
    if (!(c.suppression_threshold >= 0 && c.suppression_threshold < 1))
        throw ConfigError("suppression_threshold must lie in [0,1)");
    if (!(c.alpha > 0 && c.alpha < 1)) throw ConfigError("alpha must lie in (0,1)");
    if (c.session_gap_minutes <= 0) throw ConfigError("session_gap_minutes must be > 0");
    if (!(c.max_parse_error_rate >= 0 && c.max_parse_error_rate <= 1))
        throw ConfigError("max_parse_error_rate must lie in [0,1]");
}

std::map<std::string, Arm> load_assignment_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open assignment log: " + path);
    std::map<std::string, Arm> arms;
    std::string line;
    bool header = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        auto pos = line.find(',');
        if (pos == std::string::npos)
            throw DataError("assignment log line " + std::to_string(line_no) + " is not user_id,arm");
        auto arm = parse_arm(std::string_view(line).substr(pos + 1));
        if (!arm || *arm == Arm::none)
            throw DataError("assignment log line " + std::to_string(line_no) + " has a bad arm");
        arms[line.substr(0, pos)] = *arm;
    }
    return arms;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << content;
    if (!out) throw DataError("failed writing file: " + path);
}

} // namespace segex
