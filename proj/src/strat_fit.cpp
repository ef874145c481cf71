#include "stratport/strat_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "stratport/error.hpp"
#include "stratport/parallel.hpp"

namespace stratport::fit {

std::string to_string(LossKind kind) {
    return kind == LossKind::huber_mean ? "huber-mean" : "logdet-precision";
}
std::string to_string(EmptyStratumMode mode) { return mode == EmptyStratumMode::drop ? "drop" : "literal"; }
std::string to_string(LossWeighting w) { return w == LossWeighting::equal ? "equal" : "by-count"; }

LossKind parse_loss_kind(const std::string& s) {
    if (s == "huber-mean") return LossKind::huber_mean;
    if (s == "logdet-precision") return LossKind::logdet_precision;
    throw InputError("unknown loss kind '" + s + "'");
}
EmptyStratumMode parse_empty_mode(const std::string& s) {
    if (s == "drop") return EmptyStratumMode::drop;
    if (s == "literal") return EmptyStratumMode::literal;
    throw InputError("unknown empty-stratum mode '" + s + "'");
}
LossWeighting parse_weighting(const std::string& s) {
    if (s == "equal") return LossWeighting::equal;
    if (s == "by-count") return LossWeighting::by_count;
    throw InputError("unknown loss weighting '" + s + "'");
}

// ---------------------------------------------------------------------------

StratumDataset::StratumDataset(std::size_t strata, std::size_t dim)
    : dim_(dim), outcomes_(strata, Eigen::MatrixXd(0, static_cast<Eigen::Index>(dim))) {}

StratumDataset StratumDataset::from_records(std::size_t strata, std::span<const std::size_t> labels,
                                            const Eigen::MatrixXd& outcomes) {
    if (labels.size() != static_cast<std::size_t>(outcomes.rows())) {
        throw InputError("labels and outcome rows differ in length");
    }
    StratumDataset ds(strata, static_cast<std::size_t>(outcomes.cols()));
    std::vector<std::vector<Eigen::Index>> rows(strata);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= strata) throw InputError("stratum label out of range");
        rows[labels[i]].push_back(static_cast<Eigen::Index>(i));
    }
    for (std::size_t k = 0; k < strata; ++k) {
        ds.outcomes_[k] = outcomes(rows[k], Eigen::all);
    }
    return ds;
}

std::size_t StratumDataset::total() const {
    std::size_t n = 0;
    for (const auto& m : outcomes_) n += static_cast<std::size_t>(m.rows());
    return n;
}

void StratumDataset::add(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (static_cast<std::size_t>(y.size()) != dim_) throw InputError("outcome dimension mismatch");
    auto& m = outcomes_.at(k);
    m.conservativeResize(m.rows() + 1, Eigen::NoChange);
    m.row(m.rows() - 1) = y.transpose();
}

StratumDataset StratumDataset::scaled(double factor) const {
    StratumDataset out = *this;
    for (auto& m : out.outcomes_) m *= factor;
    return out;
}

StratumDataset StratumDataset::merged(const StratumDataset& other) const {
    if (other.strata() != strata() || other.dim() != dim()) throw InputError("datasets have different shapes");
    StratumDataset out = *this;
    for (std::size_t k = 0; k < strata(); ++k) {
        Eigen::MatrixXd joined(outcomes_[k].rows() + other.outcomes_[k].rows(), static_cast<Eigen::Index>(dim_));
        joined << outcomes_[k], other.outcomes_[k];
        out.outcomes_[k] = std::move(joined);
    }
    return out;
}

Eigen::MatrixXd StratumDataset::pooled() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(total()), static_cast<Eigen::Index>(dim_));
    Eigen::Index r = 0;
    for (const auto& m : outcomes_) {
        out.middleRows(r, m.rows()) = m;
        r += m.rows();
    }
    return out;
}

Eigen::MatrixXd StratumDataset::second_moment(std::size_t k) const {
    const auto& m = outcomes_[k];
    const auto n = static_cast<Eigen::Index>(dim_);
    if (m.rows() == 0) return Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd s = (m.transpose() * m) / static_cast<double>(m.rows());
    return 0.5 * (s + s.transpose());
}

void FitConfig::validate() const {
    if (!(local_weight >= 0.0)) throw InputError("local regularization weight must be >= 0");
    for (double w : laplacian_weights) {
        if (!(w >= 0.0)) throw InputError("Laplacian weights must be >= 0");
    }
    if (!(huber_m > 0.0)) throw InputError("Huber half-width must be > 0");
    if (!(rho > 0.0)) throw InputError("ADMM penalty rho must be > 0");
    if (!(tol_abs > 0.0) || !(tol_rel > 0.0)) throw InputError("tolerances must be > 0");
    if (max_iterations < 1) throw InputError("max_iterations must be >= 1");
}

Eigen::VectorXd FitResult::mean(std::size_t k) const {
    return theta.row(static_cast<Eigen::Index>(k)).transpose();
}

Eigen::MatrixXd FitResult::precision(std::size_t k) const {
    const auto n = static_cast<Eigen::Index>(dim);
    Eigen::VectorXd row = theta.row(static_cast<Eigen::Index>(k)).transpose();
    return Eigen::Map<const Eigen::MatrixXd>(row.data(), n, n);
}

// ---------------------------------------------------------------------------
// Huber

double huber(double z, double m) {
    const double a = std::abs(z);
    return a <= m ? z * z : 2.0 * m * a - m * m;
}

double huber_loss(const Eigen::Ref<const Eigen::VectorXd>& mu, const Eigen::MatrixXd& data, double m) {
    if (data.rows() > 0 && data.cols() != mu.size()) throw InputError("Huber loss: dimension mismatch");
    double total = 0.0;
    for (Eigen::Index t = 0; t < data.rows(); ++t) {
        for (Eigen::Index i = 0; i < mu.size(); ++i) total += huber(mu(i) - data(t, i), m);
    }
    return total;
}

namespace {

// Safeguarded Newton on the piecewise-linear, increasing derivative of the
// prox objective. `gradient(x, slope)` returns the derivative at x and sets
// the slope of the current piece.
template <typename Gradient>
double newton_prox(double v, double ymin, double ymax, double m, const Gradient& gradient) {
    double lo = std::min(v, ymin) - m;
    double hi = std::max(v, ymax) + m;
    double x = std::clamp(v, lo, hi);
    for (int it = 0; it < 200; ++it) {
        double slope = 0.0;
        const double g = gradient(x, slope);
        if (g == 0.0) return x;
        const double step = g / slope;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(x))) return x - step;
        if (g > 0.0) hi = x; else lo = x;
        double next = x - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-12 * (1.0 + std::abs(x)) || hi - lo <= 1e-15 * (1.0 + std::abs(x))) {
            return next;
        }
        x = next;
    }
    return x;
}

}  // namespace

double prox_huber_scalar(double v, std::span<const double> ys, double m, double rho) {
    if (ys.empty()) return v;
    auto gradient = [&](double x, double& slope) {
        double g = rho * (x - v);
        slope = rho;
        for (double y : ys) {
            const double r = x - y;
            if (std::abs(r) <= m) {
                g += 2.0 * r;
                slope += 2.0;
            } else {
                g += r > 0 ? 2.0 * m : -2.0 * m;
            }
        }
        return g;
    };
    const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
    return newton_prox(v, *ymin, *ymax, m, gradient);
}

SortedSample::SortedSample(std::vector<double> ys) : sorted_(std::move(ys)) {
    std::sort(sorted_.begin(), sorted_.end());
    prefix_.resize(sorted_.size() + 1, 0.0);
    for (std::size_t i = 0; i < sorted_.size(); ++i) prefix_[i + 1] = prefix_[i] + sorted_[i];
}

double SortedSample::prox(double v, double m, double rho) const {
    if (sorted_.empty()) return v;
    const auto n = static_cast<double>(sorted_.size());
    auto gradient = [&](double x, double& slope) {
        // points with |x - y| <= m are [a, b)
        const auto a = static_cast<std::size_t>(std::lower_bound(sorted_.begin(), sorted_.end(), x - m) - sorted_.begin());
        const auto b = static_cast<std::size_t>(std::upper_bound(sorted_.begin(), sorted_.end(), x + m) - sorted_.begin());
        const auto inside = static_cast<double>(b - a);
        slope = rho + 2.0 * inside;
        return rho * (x - v) + 2.0 * (inside * x - (prefix_[b] - prefix_[a])) +
               2.0 * m * (static_cast<double>(a) - (n - static_cast<double>(b)));
    };
    return newton_prox(v, sorted_.front(), sorted_.back(), m, gradient);
}

Eigen::VectorXd prox_huber_mean(const Eigen::Ref<const Eigen::VectorXd>& v, const Eigen::MatrixXd& data,
                                double m, double rho) {
    if (!(rho > 0.0)) throw InputError("prox weight must be > 0");
    Eigen::VectorXd out(v.size());
    if (data.rows() == 0) return v;
    if (data.cols() != v.size()) throw InputError("Huber prox: dimension mismatch");
    std::vector<double> column(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        for (Eigen::Index t = 0; t < data.rows(); ++t) column[static_cast<std::size_t>(t)] = data(t, i);
        out(i) = prox_huber_scalar(v(i), column, m, rho);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Log-det

double logdet_spd(const Eigen::MatrixXd& theta) {
    Eigen::LLT<Eigen::MatrixXd> llt(theta);
    if (llt.info() != Eigen::Success) throw DomainError("matrix is not positive definite");
    const auto d = llt.matrixLLT().diagonal();
    if ((d.array() <= 0.0).any()) throw DomainError("matrix is not positive definite");
    return 2.0 * d.array().log().sum();
}

double logdet_loss(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& s, bool participates) {
    if (!participates) return 0.0;
    return (s.cwiseProduct(theta)).sum() - logdet_spd(theta);
}

Eigen::MatrixXd prox_logdet_precision(const Eigen::MatrixXd& v, const Eigen::MatrixXd& s, double rho,
                                      bool include_loss, double c) {
    if (!(rho > 0.0)) throw InputError("prox weight must be > 0");
    Eigen::MatrixXd vs = 0.5 * (v + v.transpose());
    if (!include_loss) return vs;
    if (!(c > 0.0)) throw InputError("loss weight must be > 0");
    Eigen::MatrixXd a = rho * vs - c * s;
    a = 0.5 * (a + a.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed in log-det prox");
    Eigen::VectorXd lambda = eig.eigenvalues();
    Eigen::VectorXd t(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        // Root of rho t - c/t = lambda; the second form avoids cancellation.
        const double l = lambda(i);
        const double r = std::sqrt(l * l + 4.0 * rho * c);
        t(i) = l >= 0.0 ? (l + r) / (2.0 * rho) : (2.0 * c) / (r - l);
    }
    Eigen::MatrixXd out = eig.eigenvectors() * t.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

// ---------------------------------------------------------------------------

LaplacianSolver::LaplacianSolver(const Eigen::SparseMatrix<double>& laplacian, double rho) {
    if (!(rho > 0.0)) throw InputError("regularized Laplacian solve needs rho > 0");
    Eigen::SparseMatrix<double> identity(laplacian.rows(), laplacian.cols());
    identity.setIdentity();
    Eigen::SparseMatrix<double> a = laplacian + rho * identity;
    factor_.compute(a);
    if (factor_.info() != Eigen::Success) throw NumericalError("factorization of L + rho I failed");
}

Eigen::MatrixXd LaplacianSolver::solve(const Eigen::MatrixXd& rhs) const {
    Eigen::MatrixXd x = factor_.solve(rhs);
    if (factor_.info() != Eigen::Success) throw NumericalError("regularized Laplacian solve failed");
    return x;
}

Eigen::MatrixXd solve_regularized_laplacian(const Eigen::SparseMatrix<double>& laplacian, double rho,
                                            const Eigen::MatrixXd& rhs) {
    return LaplacianSolver(laplacian, rho).solve(rhs);
}

// ---------------------------------------------------------------------------

HuberMeanObjective::HuberMeanObjective(const StratumDataset& data, double m, double local_weight)
    : data_(&data), m_(m), local_weight_(local_weight) {
    if (!(m > 0.0)) throw InputError("Huber half-width must be > 0");
    if (!(local_weight >= 0.0)) throw InputError("local weight must be >= 0");
    columns_.resize(data.strata());
    for (std::size_t k = 0; k < data.strata(); ++k) {
        const Eigen::MatrixXd& y = data.outcomes(k);
        for (Eigen::Index i = 0; i < y.cols(); ++i) {
            columns_[k].emplace_back(std::vector<double>(y.col(i).data(), y.col(i).data() + y.rows()));
        }
    }
}

Eigen::VectorXd HuberMeanObjective::initial() const {
    return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data_->dim()));
}

double HuberMeanObjective::value(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& theta) const {
    return huber_loss(theta, data_->outcomes(k), m_) + local_weight_ * theta.squaredNorm();
}

Eigen::VectorXd HuberMeanObjective::prox(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& v,
                                         double rho) const {
    // The ridge folds into the proximal quadratic.
    const double rho_eff = rho + 2.0 * local_weight_;
    const double shrink = rho / rho_eff;
    if (data_->count(k) == 0) return shrink * v;
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out(i) = columns_[k][static_cast<std::size_t>(i)].prox(shrink * v(i), m_, rho_eff);
    }
    return out;
}

LogDetPrecisionObjective::LogDetPrecisionObjective(const StratumDataset& data, EmptyStratumMode mode,
                                                   LossWeighting weighting)
    : n_(data.dim()), mode_(mode), weighting_(weighting) {
    second_moments_.reserve(data.strata());
    counts_.reserve(data.strata());
    for (std::size_t k = 0; k < data.strata(); ++k) {
        second_moments_.push_back(data.second_moment(k));
        counts_.push_back(data.count(k));
    }
}

Eigen::VectorXd LogDetPrecisionObjective::initial() const {
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    return Eigen::Map<const Eigen::VectorXd>(eye.data(), n * n);
}

double LogDetPrecisionObjective::weight(std::size_t k) const {
    if (counts_[k] == 0 && mode_ == EmptyStratumMode::drop) return 0.0;
    if (weighting_ == LossWeighting::by_count) return static_cast<double>(counts_[k]);
    return 1.0;
}

double LogDetPrecisionObjective::value(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& theta) const {
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXd t = Eigen::Map<const Eigen::MatrixXd>(theta.data(), n, n);
    const double c = weight(k);
    if (c == 0.0) {
        logdet_spd(t);  // domain check only
        return 0.0;
    }
    return c * logdet_loss(t, second_moments_[k]);
}

Eigen::VectorXd LogDetPrecisionObjective::prox(std::size_t k, const Eigen::Ref<const Eigen::VectorXd>& v,
                                               double rho) const {
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXd vm = Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n);
    const double c = weight(k);
    Eigen::MatrixXd t = prox_logdet_precision(vm, second_moments_[k], rho, c > 0.0, c > 0.0 ? c : 1.0);
    return Eigen::Map<const Eigen::VectorXd>(t.data(), n * n);
}

std::optional<double> LogDetPrecisionObjective::empty_stratum_ridge() const {
    if (mode_ == EmptyStratumMode::drop || weighting_ == LossWeighting::by_count) return 0.0;
    return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

double laplacian_quadratic(const Eigen::SparseMatrix<double>& laplacian, const Eigen::MatrixXd& theta) {
    // Edge form sum_{i<j} -L_ij ||theta_i - theta_j||^2, exact for equal rows.
    double total = 0.0;
    for (int col = 0; col < laplacian.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(laplacian, col); it; ++it) {
            if (it.row() < it.col() && it.value() != 0.0) {
                total -= it.value() * (theta.row(it.row()) - theta.row(it.col())).squaredNorm();
            }
        }
    }
    return total;
}

std::unique_ptr<StratumObjective> make_objective(const StratumDataset& data, const FitConfig& config,
                                                 LossKind kind) {
    if (kind == LossKind::huber_mean) {
        return std::make_unique<HuberMeanObjective>(data, config.huber_m, config.local_weight);
    }
    return std::make_unique<LogDetPrecisionObjective>(data, config.empty_mode, config.weighting);
}

// Exact minimization over the data-free strata with the data-bearing ones
// held fixed: (L_EE + c I) X_E = -L_ED X_D. Components with no data and
// c = 0 keep their initial value.
void solve_empty_strata(const StratumObjective& objective, const graph::RegularizationGraph& graph,
                        std::span<const double> weights, const Eigen::SparseMatrix<double>& laplacian,
                        double ridge, Eigen::MatrixXd& theta) {
    const std::size_t k_total = objective.strata();
    const auto comp = graph::connected_components(graph, weights);
    std::vector<bool> comp_has_data(k_total, false);
    for (std::size_t k = 0; k < k_total; ++k) {
        if (objective.has_data(k)) comp_has_data[comp[k]] = true;
    }
    std::vector<Eigen::Index> local(k_total, -1);
    std::vector<std::size_t> free_strata;
    for (std::size_t k = 0; k < k_total; ++k) {
        if (objective.has_data(k)) continue;
        if (ridge == 0.0 && !comp_has_data[comp[k]]) {
            theta.row(static_cast<Eigen::Index>(k)) = objective.initial().transpose();
            continue;
        }
        local[k] = static_cast<Eigen::Index>(free_strata.size());
        free_strata.push_back(k);
    }
    if (free_strata.empty()) return;
    const auto m = static_cast<Eigen::Index>(free_strata.size());
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, theta.cols());
    for (Eigen::Index col = 0; col < laplacian.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(laplacian, col); it; ++it) {
            const auto r = static_cast<std::size_t>(it.row());
            const auto c = static_cast<std::size_t>(it.col());
            if (local[r] < 0) continue;
            if (local[c] >= 0) {
                trip.emplace_back(local[r], local[c], it.value());
            } else if (objective.has_data(c)) {
                rhs.row(local[r]) -= it.value() * theta.row(static_cast<Eigen::Index>(c));
            }
        }
    }
    for (Eigen::Index i = 0; i < m; ++i) trip.emplace_back(i, i, ridge);
    Eigen::SparseMatrix<double> a(m, m);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw NumericalError("data-free stratum system is singular");
    const Eigen::MatrixXd x = ldlt.solve(rhs);
    for (Eigen::Index i = 0; i < m; ++i) {
        theta.row(static_cast<Eigen::Index>(free_strata[static_cast<std::size_t>(i)])) = x.row(i);
    }
}

}  // namespace

double eval_objective(const StratumObjective& objective, const Eigen::SparseMatrix<double>& laplacian,
                      const Eigen::MatrixXd& theta) {
    if (static_cast<std::size_t>(theta.rows()) != objective.strata() ||
        static_cast<std::size_t>(theta.cols()) != objective.param_size()) {
        throw InputError("parameter table has the wrong shape");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < objective.strata(); ++k) {
        total += objective.value(k, theta.row(static_cast<Eigen::Index>(k)).transpose());
    }
    return total + laplacian_quadratic(laplacian, theta);
}

double eval_objective(const Eigen::MatrixXd& theta, const StratumDataset& data, const FitConfig& config,
                      const graph::RegularizationGraph& graph, LossKind kind) {
    const auto objective = make_objective(data, config, kind);
    return eval_objective(*objective, graph::weighted_laplacian(graph, config.laplacian_weights), theta);
}

FitResult solve(const StratumObjective& objective, const graph::RegularizationGraph& graph,
                const FitConfig& config, LossKind kind) {
    config.validate();
    const std::size_t k_total = objective.strata();
    if (graph.nodes != k_total) {
        throw InputError("graph has " + std::to_string(graph.nodes) + " nodes but the dataset has " +
                         std::to_string(k_total) + " strata");
    }
    const auto& weights = config.laplacian_weights;
    const Eigen::SparseMatrix<double> laplacian = graph::weighted_laplacian(graph, weights);
    const auto ridge = objective.empty_stratum_ridge();

    if (objective.requires_identifiability() && ridge && *ridge == 0.0) {
        const auto comp = graph::connected_components(graph, weights);
        std::vector<bool> seen(k_total, false);
        for (std::size_t k = 0; k < k_total; ++k) {
            if (objective.has_data(k)) seen[comp[k]] = true;
        }
        for (std::size_t k = 0; k < k_total; ++k) {
            if (!seen[comp[k]]) {
                throw IdentifiabilityError(
                    "stratum " + std::to_string(k + 1) +
                    " lies in a connected component without data and there is no local regularization");
            }
        }
    }

    const auto kk = static_cast<Eigen::Index>(k_total);
    const auto d = static_cast<Eigen::Index>(objective.param_size());
    double rho = config.rho;

    Eigen::MatrixXd theta(kk, d);
    const Eigen::RowVectorXd init = objective.initial().transpose();
    for (Eigen::Index k = 0; k < kk; ++k) theta.row(k) = init;
    Eigen::MatrixXd z = theta;
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(kk, d);

    // z-update: argmin tr(Z^T L Z) + (rho/2)||Z - (Theta + U)||^2
    //        => (L + rho/2 I) Z = (rho/2)(Theta + U).
    auto lap = std::make_unique<LaplacianSolver>(laplacian, 0.5 * rho);
    const double sqrt_kd = std::sqrt(static_cast<double>(kk * d));

    FitResult result;
    result.kind = kind;
    result.dim = kind == LossKind::logdet_precision
                     ? static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))))
                     : static_cast<std::size_t>(d);

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        parallel_for(k_total, config.threads, [&](std::size_t k) {
            const auto r = static_cast<Eigen::Index>(k);
            const Eigen::VectorXd v = (z.row(r) - u.row(r)).transpose();
            theta.row(r) = objective.prox(k, v, rho).transpose();
        });
        const Eigen::MatrixXd z_old = z;
        z = lap->solve(0.5 * rho * (theta + u));
        u += theta - z;

        const double primal = (theta - z).norm();
        const double dual = rho * (z - z_old).norm();
        result.history.push_back({primal, dual});
        result.iterations = iter;

        const double eps_pri = config.tol_abs * sqrt_kd + config.tol_rel * std::max(theta.norm(), z.norm());
        const double eps_dual = config.tol_abs * sqrt_kd + config.tol_rel * rho * u.norm();
        if (primal <= eps_pri && dual <= eps_dual) {
            result.converged = true;
            break;
        }
        // Residual balancing; frozen later on so the iteration settles.
        if (config.adaptive_rho && iter % 10 == 0 && iter <= config.max_iterations / 2) {
            double factor = 1.0;
            if (primal > 10.0 * dual) factor = 2.0;
            if (dual > 10.0 * primal) factor = 0.5;
            if (factor != 1.0) {
                rho *= factor;
                u /= factor;  // scaled dual
                lap = std::make_unique<LaplacianSolver>(laplacian, 0.5 * rho);
            }
        }
    }

    if (ridge) solve_empty_strata(objective, graph, weights, laplacian, *ridge, theta);

    result.theta = std::move(theta);
    result.objective = eval_objective(objective, laplacian, result.theta);
    return result;
}

FitResult fit(const StratumDataset& data, const graph::RegularizationGraph& graph, const FitConfig& config,
              LossKind kind) {
    if (config.laplacian_weights.size() != graph.groups.size()) {
        throw InputError("expected " + std::to_string(graph.groups.size()) + " Laplacian weights");
    }
    const auto objective = make_objective(data, config, kind);
    return solve(*objective, graph, config, kind);
}

}  // namespace stratport::fit
