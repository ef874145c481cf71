#include "stratport/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stratport/error.hpp"
#include "stratport/text.hpp"

namespace stratport::models {

namespace {

fit::FitConfig make_config(const FitOptions& o) {
    fit::FitConfig c;
    c.rho = o.rho;
    c.adaptive_rho = o.adaptive_rho;
    c.max_iterations = o.max_iterations;
    c.tol_abs = o.tol_abs;
    c.tol_rel = o.tol_rel;
    c.empty_mode = o.empty_mode;
    c.weighting = o.weighting;
    c.threads = o.threads;
    return c;
}

void check_assets(const std::vector<std::string>& assets, std::size_t dim) {
    if (assets.size() != dim) {
        throw InputError("expected " + std::to_string(dim) + " asset names, got " + std::to_string(assets.size()));
    }
}

std::size_t model_stratum(std::size_t model_strata, std::size_t k) {
    if (model_strata == 1) return 0;
    return k;
}

}  // namespace

void MeanModel::validate() const {
    if (static_cast<std::size_t>(mu.cols()) != assets.size()) throw InputError("mean model: asset count mismatch");
    if (!mu.allFinite()) throw NumericalError("mean model has non-finite entries");
}

Eigen::MatrixXd PrecisionModel::covariance(std::size_t k) const {
    const auto& t = theta.at(k);
    Eigen::LLT<Eigen::MatrixXd> llt(t);
    if (llt.info() != Eigen::Success) throw DomainError("precision matrix is not positive definite");
    Eigen::MatrixXd s = llt.solve(Eigen::MatrixXd::Identity(t.rows(), t.cols()));
    return 0.5 * (s + s.transpose());
}

void PrecisionModel::validate() const {
    for (const auto& t : theta) {
        if (static_cast<std::size_t>(t.rows()) != assets.size() || t.rows() != t.cols()) {
            throw InputError("precision model: matrix shape mismatch");
        }
        if (!t.allFinite()) throw NumericalError("precision model has non-finite entries");
        Eigen::LLT<Eigen::MatrixXd> llt(t);
        if (llt.info() != Eigen::Success) throw DomainError("precision matrix is not positive definite");
    }
}

MeanModel fit_return_model(const fit::StratumDataset& train, const graph::RegularizationGraph& graph,
                           double local_weight, const std::vector<double>& laplacian_weights,
                           const std::vector<std::string>& assets, double huber_m, const FitOptions& options) {
    check_assets(assets, train.dim());
    if (!(options.unit_scale > 0.0)) throw InputError("unit scale must be > 0");
    auto config = make_config(options);
    config.local_weight = local_weight;
    config.laplacian_weights = laplacian_weights;
    // Every term is quadratic in (theta, y, M) jointly, so scaling all three
    // leaves the minimizer unchanged up to the same factor.
    config.huber_m = huber_m * options.unit_scale;
    const auto scaled = train.scaled(options.unit_scale);
    const auto res = fit::fit(scaled, graph, config, fit::LossKind::huber_mean);

    MeanModel m;
    m.assets = assets;
    m.mu = res.theta / options.unit_scale;
    m.info.dims = graph.shape.dims();
    m.info.group_names = graph.groups;
    m.info.local_weight = local_weight;
    m.info.laplacian_weights = laplacian_weights;
    m.info.huber_m = huber_m;
    m.info.unit_scale = options.unit_scale;
    m.info.converged = res.converged;
    m.info.iterations = res.iterations;
    m.info.objective = res.objective;
    m.validate();
    return m;
}

PrecisionModel fit_risk_model(const fit::StratumDataset& train, const graph::RegularizationGraph& graph,
                              const std::vector<double>& laplacian_weights, const std::vector<std::string>& assets,
                              const FitOptions& options) {
    check_assets(assets, train.dim());
    if (!(options.unit_scale > 0.0)) throw InputError("unit scale must be > 0");
    auto config = make_config(options);
    config.laplacian_weights = laplacian_weights;
    const auto scaled = train.scaled(options.unit_scale);
    const auto res = fit::fit(scaled, graph, config, fit::LossKind::logdet_precision);

    PrecisionModel m;
    m.assets = assets;
    const double s2 = options.unit_scale * options.unit_scale;
    m.theta.reserve(res.strata());
    for (std::size_t k = 0; k < res.strata(); ++k) m.theta.push_back(res.precision(k) * s2);
    m.info.dims = graph.shape.dims();
    m.info.group_names = graph.groups;
    m.info.laplacian_weights = laplacian_weights;
    m.info.unit_scale = options.unit_scale;
    m.info.converged = res.converged;
    m.info.iterations = res.iterations;
    m.info.objective = res.objective;
    m.validate();
    return m;
}

MeanModel common_return_model(const fit::StratumDataset& train, const std::vector<std::string>& assets,
                              std::size_t strata) {
    check_assets(assets, train.dim());
    if (train.total() == 0) throw InputError("common model needs at least one record");
    const Eigen::MatrixXd y = train.pooled();
    const Eigen::RowVectorXd mean = y.colwise().mean();
    MeanModel m;
    m.assets = assets;
    m.mu = mean.replicate(static_cast<Eigen::Index>(strata), 1);
    m.info.dims = {static_cast<int>(strata)};
    m.info.common = true;
    m.info.unit_scale = 1.0;
    return m;
}

PrecisionModel common_risk_model(const fit::StratumDataset& train, const std::vector<std::string>& assets,
                                 std::size_t strata, double unit_scale) {
    check_assets(assets, train.dim());
    if (train.total() == 0) throw InputError("common model needs at least one record");
    const Eigen::MatrixXd y = train.pooled() * unit_scale;
    const Eigen::MatrixXd s = (y.transpose() * y) / static_cast<double>(y.rows());
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) throw DomainError("pooled second moment is singular");
    Eigen::MatrixXd theta = llt.solve(Eigen::MatrixXd::Identity(s.rows(), s.cols()));
    theta = 0.5 * (theta + theta.transpose().eval()) * (unit_scale * unit_scale);
    PrecisionModel m;
    m.assets = assets;
    m.theta.assign(strata, theta);
    m.info.dims = {static_cast<int>(strata)};
    m.info.common = true;
    m.info.unit_scale = unit_scale;
    return m;
}

double validation_correlation(const MeanModel& model, const fit::StratumDataset& data) {
    if (model.strata() != 1 && model.strata() != data.strata()) throw InputError("model/data stratum mismatch");
    if (static_cast<std::size_t>(model.mu.cols()) != data.dim()) throw InputError("model/data dimension mismatch");
    const auto total = data.total();
    if (total < 2) throw InputError("correlation needs at least two records");
    const double count = static_cast<double>(total) * static_cast<double>(data.dim());

    double sum_p = 0.0, sum_y = 0.0;
    double p_lo = INFINITY, p_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
    for (std::size_t k = 0; k < data.strata(); ++k) {
        const auto& y = data.outcomes(k);
        if (y.rows() == 0) continue;
        const auto p = model.mu.row(static_cast<Eigen::Index>(model_stratum(model.strata(), k)));
        sum_p += static_cast<double>(y.rows()) * p.sum();
        sum_y += y.sum();
        p_lo = std::min(p_lo, p.minCoeff());
        p_hi = std::max(p_hi, p.maxCoeff());
        y_lo = std::min(y_lo, y.minCoeff());
        y_hi = std::max(y_hi, y.maxCoeff());
    }
    if (p_lo == p_hi || y_lo == y_hi) {
        throw UndefinedCorrelationError("predictions or realizations have zero variance");
    }
    const double mp = sum_p / count, my = sum_y / count;
    double spy = 0.0, spp = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < data.strata(); ++k) {
        const auto& y = data.outcomes(k);
        const Eigen::RowVectorXd p =
            model.mu.row(static_cast<Eigen::Index>(model_stratum(model.strata(), k))).array() - mp;
        for (Eigen::Index t = 0; t < y.rows(); ++t) {
            const Eigen::RowVectorXd dy = y.row(t).array() - my;
            spy += p.dot(dy);
            spp += p.squaredNorm();
            syy += dy.squaredNorm();
        }
    }
    if (!(spp > 0.0) || !(syy > 0.0)) throw UndefinedCorrelationError("predictions or realizations have zero variance");
    return spy / std::sqrt(spp * syy);
}

double validation_nll(const PrecisionModel& model, const fit::StratumDataset& data, double unit_scale) {
    if (model.strata() != 1 && model.strata() != data.strata()) throw InputError("model/data stratum mismatch");
    if (data.total() == 0) throw InputError("log-likelihood needs at least one record");
    const double s2 = unit_scale * unit_scale;
    double total = 0.0;
    for (std::size_t k = 0; k < data.strata(); ++k) {
        const auto& y = data.outcomes(k);
        if (y.rows() == 0) continue;
        const Eigen::MatrixXd theta = model.theta[model_stratum(model.strata(), k)] / s2;
        const double logdet = fit::logdet_spd(theta);
        const Eigen::MatrixXd ys = y * unit_scale;
        // sum_t y^T theta y = sum of (Y theta) .* Y
        total += ((ys * theta).cwiseProduct(ys)).sum() - static_cast<double>(y.rows()) * logdet;
    }
    return total / static_cast<double>(data.total());
}

double median(std::vector<double> values) {
    if (values.empty()) throw InputError("median of an empty set");
    const auto mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
    return 0.5 * (lower + upper);
}

namespace {

SummaryTable stats_table(std::string title, const std::vector<std::string>& assets,
                         const Eigen::MatrixXd& per_stratum, const Eigen::VectorXd& common) {
    SummaryTable t;
    t.title = std::move(title);
    t.columns = {"common", "median", "min", "max"};
    t.rows = assets;
    t.values.resize(static_cast<Eigen::Index>(assets.size()), 4);
    for (Eigen::Index i = 0; i < per_stratum.cols(); ++i) {
        std::vector<double> col(per_stratum.col(i).data(), per_stratum.col(i).data() + per_stratum.rows());
        t.values(i, 0) = common(i);
        t.values(i, 1) = median(col);
        t.values(i, 2) = per_stratum.col(i).minCoeff();
        t.values(i, 3) = per_stratum.col(i).maxCoeff();
    }
    return t;
}

Eigen::MatrixXd volatilities(const PrecisionModel& m) {
    Eigen::MatrixXd v(static_cast<Eigen::Index>(m.strata()), static_cast<Eigen::Index>(m.assets.size()));
    for (std::size_t k = 0; k < m.strata(); ++k) {
        v.row(static_cast<Eigen::Index>(k)) = m.covariance(k).diagonal().cwiseSqrt().transpose() * 100.0;
    }
    return v;
}

Eigen::MatrixXd correlations(const PrecisionModel& m, Eigen::Index ref) {
    Eigen::MatrixXd c(static_cast<Eigen::Index>(m.strata()), static_cast<Eigen::Index>(m.assets.size()));
    for (std::size_t k = 0; k < m.strata(); ++k) {
        const Eigen::MatrixXd s = m.covariance(k);
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            c(static_cast<Eigen::Index>(k), i) = i == ref ? 1.0 : s(i, ref) / std::sqrt(s(i, i) * s(ref, ref));
        }
    }
    return c;
}

}  // namespace

SummaryTable return_summary(const MeanModel& model, const MeanModel& common) {
    return stats_table("return predictions, percent daily", model.assets, model.mu * 100.0,
                       common.mu.row(0).transpose() * 100.0);
}

SummaryTable volatility_summary(const PrecisionModel& model, const PrecisionModel& common) {
    return stats_table("volatility, percent daily", model.assets, volatilities(model),
                       volatilities(common).row(0).transpose());
}

SummaryTable correlation_summary(const PrecisionModel& model, const PrecisionModel& common,
                                 const std::string& reference) {
    const auto it = std::find(model.assets.begin(), model.assets.end(), reference);
    if (it == model.assets.end()) throw InputError("reference asset '" + reference + "' not in model");
    const auto ref = static_cast<Eigen::Index>(it - model.assets.begin());
    return stats_table("correlation with " + reference, model.assets, correlations(model, ref),
                       correlations(common, ref).row(0).transpose());
}

std::string to_tsv(const SummaryTable& table) {
    std::ostringstream os;
    os << "asset";
    for (const auto& c : table.columns) os << '\t' << c;
    os << '\n';
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        os << table.rows[r];
        for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
            os << '\t' << text::format_fixed(table.values(static_cast<Eigen::Index>(r), c), 6);
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace stratport::models
