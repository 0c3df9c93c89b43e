#include "segex/features.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include <Eigen/Dense>

#include "segex/errors.hpp"

namespace segex {

FeatureMatrix orthogonalize(const FeatureMatrix& raw, double weeks) {
    raw.require_stage(Stage::raw, "orthogonalize");
    if (!(weeks > 0)) throw ConfigError("orthogonalize: weeks must be positive");
    if (raw.cols() < 2 || raw.columns[0] != "days_visited" || raw.columns[1] != "sessions")
        throw MissingColumn("orthogonalize: days_visited and sessions columns required");

    FeatureMatrix out;
    out.stage = Stage::orthogonal;
    out.user_ids = raw.user_ids;
    out.columns.reserve(raw.cols());
    out.columns.push_back("vdays_per_week");
    out.columns.push_back("sessions_per_vday");
    for (std::size_t j = 2; j < raw.cols(); ++j) out.columns.push_back(raw.columns[j] + "_per_session");

    out.values.assign(raw.values.size(), 0.0);
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        const double days = raw.at(i, 0);
        const double sessions = raw.at(i, 1);
        out.at(i, 0) = days / weeks;
        out.at(i, 1) = days > 0 ? sessions / days : 0.0;
        for (std::size_t j = 2; j < raw.cols(); ++j)
            out.at(i, j) = sessions > 0 ? raw.at(i, j) / sessions : 0.0;
    }
    out.check_finite();
    return out;
}

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DataError("quantile of empty sample");
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("quantile must lie in (0,1)");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    // 1-based rank ceil(q*n); the epsilon guards against 0.999*1000 = 999.0000…04
    auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

OutlierResult remove_outliers(const FeatureMatrix& m, double quantile) {
    m.require_stage(Stage::orthogonal, "remove_outliers");

    OutlierResult result;
    result.thresholds.resize(m.cols());
    std::vector<double> column(m.rows());
    for (std::size_t j = 0; j < m.cols(); ++j) {
        for (std::size_t i = 0; i < m.rows(); ++i) column[i] = m.at(i, j);
        result.thresholds[j] = empirical_quantile(column, quantile);
    }

    std::vector<bool> keep(m.rows(), true);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (m.at(i, j) > result.thresholds[j]) {
                keep[i] = false;
                break;
            }

    FeatureMatrix& out = result.cleaned;
    out.stage = Stage::cleaned;
    out.columns = m.columns;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (!keep[i]) {
            result.removed.push_back(m.user_ids[i]);
            continue;
        }
        out.user_ids.push_back(m.user_ids[i]);
        auto row = m.row(i);
        out.values.insert(out.values.end(), row.begin(), row.end());
    }
    if (out.rows() == 0) throw AllRemoved("outlier removal dropped every user; quantile too aggressive");
    return result;
}

FeatureMatrix log_transform(const FeatureMatrix& m) {
    m.require_stage(Stage::cleaned, "log_transform");
    FeatureMatrix out = m;
    out.stage = Stage::logged;
    for (double& v : out.values) {
        if (v < 0) throw NegativeValue("log_transform: negative feature value");
        v = std::log1p(v);
    }
    return out;
}

NormalizeResult normalize(const FeatureMatrix& m, bool drop_constant) {
    m.require_stage(Stage::logged, "normalize");
    const std::size_t n = m.rows();
    if (n < 2) throw DataError("normalize: need at least 2 rows");

    std::vector<double> means(m.cols()), sds(m.cols());
    std::vector<bool> keep_col(m.cols(), true);
    NormalizeResult result;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double sum = 0;
        for (std::size_t i = 0; i < n; ++i) sum += m.at(i, j);
        const double mean = sum / static_cast<double>(n);
        double ss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = m.at(i, j) - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        means[j] = mean;
        sds[j] = sd;
        if (sd < 1e-12) {
            if (!drop_constant)
                throw ConstantColumn("constant column '" + m.columns[j] +
                                     "'; drop it or enable drop_constant");
            keep_col[j] = false;
            result.dropped.push_back(m.columns[j]);
            std::cerr << "warning: dropping constant column " << m.columns[j] << "\n";
        }
    }

    FeatureMatrix& out = result.normalized;
    out.stage = Stage::normalized;
    out.user_ids = m.user_ids;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (!keep_col[j]) continue;
        out.columns.push_back(m.columns[j]);
        result.means.push_back(means[j]);
        result.sds.push_back(sds[j]);
    }
    out.values.resize(n * out.cols());
    std::size_t jj = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (!keep_col[j]) continue;
        for (std::size_t i = 0; i < n; ++i)
            out.values[i * out.cols() + jj] = (m.at(i, j) - means[j]) / sds[j];
        ++jj;
    }
    out.check_finite();
    return result;
}

PcaModel fit_pca(const FeatureMatrix& m, double variance_threshold) {
    m.require_stage(Stage::normalized, "fit_pca");
    if (!(variance_threshold > 0.0 && variance_threshold <= 1.0))
        throw ConfigError("variance threshold must lie in (0,1]");
    const std::size_t n = m.rows();
    const std::size_t p = m.cols();
    if (n <= p) throw DataError("fit_pca: need more rows than columns");

    Eigen::MatrixXd x(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m.at(i, j);

    Eigen::MatrixXd cross = x.transpose() * x;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cross);
    if (solver.info() != Eigen::Success) throw DataError("fit_pca: eigendecomposition failed");

    // eigh returns ascending order; we want descending
    Eigen::VectorXd evals = solver.eigenvalues().reverse();
    Eigen::MatrixXd evecs = solver.eigenvectors().rowwise().reverse();

    const double total = evals.sum();
    if (!(total > 0)) throw DataError("fit_pca: zero total variance");

    std::size_t positive = 0;
    const double eigen_floor = 1e-12 * std::max(evals(0), 0.0);
    for (Eigen::Index j = 0; j < evals.size(); ++j)
        if (evals(j) > eigen_floor) ++positive;

    std::size_t retained = p;
    double cumulative = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        cumulative += evals(static_cast<Eigen::Index>(j)) / total;
        if (cumulative >= variance_threshold - 1e-12) {
            retained = j + 1;
            break;
        }
    }
    if (retained > positive) {
        std::cerr << "warning: rank-deficient feature matrix; retaining " << positive
                  << " of the " << retained << " components needed for the variance threshold\n";
        retained = positive;
    }
    if (retained == 0) throw DataError("fit_pca: no positive-variance components");

    PcaModel model;
    model.input_columns = m.columns;
    model.variance_threshold = variance_threshold;
    model.loadings.resize(retained);
    model.explained_variance_ratio.resize(retained);
    for (std::size_t c = 0; c < retained; ++c) {
        Eigen::VectorXd v = evecs.col(static_cast<Eigen::Index>(c));
        // deterministic sign: largest-magnitude entry positive
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        model.loadings[c].assign(v.data(), v.data() + v.size());
        model.explained_variance_ratio[c] = evals(static_cast<Eigen::Index>(c)) / total;
    }
    return model;
}

FeatureMatrix project_pca(const FeatureMatrix& m, const PcaModel& model) {
    m.require_stage(Stage::normalized, "project_pca");
    if (m.columns != model.input_columns)
        throw ColumnMismatch("project_pca: column names do not match the fitted model");

    const std::size_t n = m.rows();
    const std::size_t p = m.cols();
    const std::size_t pc = model.n_components();

    FeatureMatrix out;
    out.stage = Stage::pca;
    out.user_ids = m.user_ids;
    for (std::size_t c = 0; c < pc; ++c) out.columns.push_back("pc" + std::to_string(c + 1));
    out.values.assign(n * pc, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = m.row(i);
        for (std::size_t c = 0; c < pc; ++c) {
            const std::vector<double>& w = model.loadings[c];
            double dot = 0.0;
            for (std::size_t j = 0; j < p; ++j) dot += row[j] * w[j];
            out.values[i * pc + c] = dot;
        }
    }
    out.check_finite();
    return out;
}

FeatureMatrix apply_frozen_transform(const FeatureMatrix& stage2, const EngineeringStats& stats,
                                     const PcaModel& model) {
    stage2.require_stage(Stage::orthogonal, "apply_frozen_transform");
    if (stage2.columns != stats.columns)
        throw ColumnMismatch("apply_frozen_transform: stage-2 columns do not match stats");

    // log + frozen normalize, restricted to the columns the model was fit on
    FeatureMatrix normalized;
    normalized.stage = Stage::normalized;
    normalized.user_ids = stage2.user_ids;
    normalized.columns = stats.normalized_columns;
    const std::size_t n = stage2.rows();
    normalized.values.assign(n * normalized.cols(), 0.0);
    for (std::size_t jj = 0; jj < stats.normalized_columns.size(); ++jj) {
        int j = stage2.column_index(stats.normalized_columns[jj]);
        if (j < 0) throw ColumnMismatch("apply_frozen_transform: missing column " + stats.normalized_columns[jj]);
        for (std::size_t i = 0; i < n; ++i) {
            double v = stage2.at(i, static_cast<std::size_t>(j));
            if (v < 0) throw NegativeValue("apply_frozen_transform: negative feature value");
            normalized.values[i * normalized.cols() + jj] = (std::log1p(v) - stats.means[jj]) / stats.sds[jj];
        }
    }
    return project_pca(normalized, model);
}

} // namespace segex
