#include "stratport/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "stratport/error.hpp"
#include "stratport/text.hpp"

namespace stratport::backtest {

void MarketData::validate() const {
    const auto t = static_cast<Eigen::Index>(dates.size());
    const auto n = static_cast<Eigen::Index>(assets.size());
    if (returns.rows() != t || spreads.rows() != t || strata.size() != dates.size()) {
        throw InputError("backtest panels are not aligned: different numbers of days");
    }
    if (returns.cols() != n || spreads.cols() != n) throw InputError("backtest panels have different asset columns");
    if (benchmark >= assets.size()) throw InputError("benchmark column out of range");
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (!(dates[i - 1] < dates[i])) throw InputError("backtest dates are not strictly increasing");
    }
    if ((spreads.array() < 0.0).any()) throw InputError("negative bid-ask spread");
}

Eigen::VectorXd trailing_half_spread(const Eigen::MatrixXd& spreads, std::size_t t, std::size_t window) {
    if (t == 0) throw InputError("no prior spread history for the first day");
    if (t > static_cast<std::size_t>(spreads.rows())) throw InputError("day beyond the spread panel");
    if (window == 0) throw InputError("spread window must be positive");
    const std::size_t count = std::min(window, t);
    const auto first = static_cast<Eigen::Index>(t - count);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(spreads.cols());
    for (Eigen::Index d = first; d < static_cast<Eigen::Index>(t); ++d) sum += spreads.row(d).transpose();
    return sum / (2.0 * static_cast<double>(count));
}

std::size_t BacktestResult::held_days() const {
    return static_cast<std::size_t>(std::count(held.begin(), held.end(), true));
}

double BacktestResult::turnover(const Eigen::VectorXd& start) const {
    double total = 0.0;
    Eigen::VectorXd prev = start;
    for (Eigen::Index t = 0; t < weights.rows(); ++t) {
        total += (weights.row(t).transpose() - prev).lpNorm<1>();
        prev = weights.row(t).transpose();
    }
    return total;
}

double net_return(const Eigen::VectorXd& r, const Eigen::VectorXd& w, const Eigen::VectorXd& w_prev,
                  const Eigen::VectorXd& kappa, const Eigen::VectorXd& tau_sim) {
    const double gross = r.dot(w);
    const double shorting = kappa.dot((-w).cwiseMax(0.0));
    const double trading = tau_sim.dot((w - w_prev).cwiseAbs());
    return gross - shorting - trading;
}

BacktestResult simulate(const MarketData& data, std::size_t first, std::size_t last, const Decision& decide,
                        const Eigen::VectorXd& kappa, std::size_t window) {
    data.validate();
    if (first > last || last > data.days()) throw InputError("backtest day range out of bounds");
    const auto n = static_cast<Eigen::Index>(data.assets.size());
    if (kappa.size() != n) throw InputError("shorting cost vector does not match the assets");
    first = std::max<std::size_t>(first, 1);
    if (last < first) last = first;

    BacktestResult res;
    res.assets = data.assets;
    const std::size_t days = last - first;
    res.weights.resize(static_cast<Eigen::Index>(days), n);
    res.gross.reserve(days);
    res.shorting.reserve(days);
    res.trading.reserve(days);
    res.net.reserve(days);
    res.value.reserve(days);

    Eigen::VectorXd w_prev = Eigen::VectorXd::Unit(n, static_cast<Eigen::Index>(data.benchmark));
    double v = 1.0;
    for (std::size_t t = first; t < last; ++t) {
        const auto row = static_cast<Eigen::Index>(t);
        const Eigen::VectorXd tau = trailing_half_spread(data.spreads, t, window);
        Eigen::VectorXd w;
        bool held = false;
        std::string note;
        try {
            w = decide(t, w_prev, tau);
            if (w.size() != n || !w.allFinite()) throw SolverError("policy returned an invalid weight vector");
        } catch (const NumericalError& e) {
            w = w_prev;
            held = true;
            note = e.what();
        }
        const Eigen::VectorXd r = data.returns.row(row).transpose();
        const Eigen::VectorXd tau_sim = 0.5 * data.spreads.row(row).transpose();
        const double gross = r.dot(w);
        const double shorting = kappa.dot((-w).cwiseMax(0.0));
        const double trading = tau_sim.dot((w - w_prev).cwiseAbs());
        const double net = gross - shorting - trading;
        v *= 1.0 + net;

        res.dates.push_back(data.dates[t]);
        res.strata.push_back(data.strata[t]);
        res.weights.row(static_cast<Eigen::Index>(t - first)) = w.transpose();
        res.gross.push_back(gross);
        res.shorting.push_back(shorting);
        res.trading.push_back(trading);
        res.net.push_back(net);
        res.value.push_back(v);
        res.held.push_back(held);
        res.notes.push_back(note);
        w_prev = w;
    }
    return res;
}

BacktestResult run_backtest(const MarketData& data, std::size_t first, std::size_t last,
                            const models::MeanModel& mean, const models::PrecisionModel& risk,
                            const policy::PolicyParams& params, const std::string& label,
                            const policy::SolverOptions& options, std::size_t window) {
    data.validate();
    const std::size_t n = data.assets.size();
    if (mean.assets.size() + 1 != n || risk.assets.size() + 1 != n) {
        throw InputError("models must cover every non-benchmark asset");
    }
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == data.benchmark) continue;
        if (mean.assets[j] != data.assets[i] || risk.assets[j] != data.assets[i]) {
            throw InputError("model asset order differs from the data columns at " + data.assets[i]);
        }
        ++j;
    }
    if (mean.strata() != risk.strata() && mean.strata() != 1 && risk.strata() != 1) {
        throw InputError("return and risk models have different numbers of strata");
    }
    params.validate(n);

    // augmented forecasts are computed once per stratum
    struct Cached {
        Eigen::VectorXd mu;
        Eigen::MatrixXd sigma;
    };
    const std::size_t strata = std::max(mean.strata(), risk.strata());
    std::vector<std::optional<Cached>> cache(strata);
    auto forecast = [&](std::size_t z) -> const Cached& {
        if (z >= strata) throw InputError("condition index outside the model grid");
        if (!cache[z]) {
            const Eigen::VectorXd mu = mean.forecast(mean.strata() == 1 ? 0 : z);
            const Eigen::MatrixXd cov = risk.covariance(risk.strata() == 1 ? 0 : z);
            auto [m, s] = policy::augment_with_benchmark(mu, cov, data.benchmark);
            s = 0.5 * (s + s.transpose().eval());
            cache[z] = Cached{std::move(m), std::move(s)};
        }
        return *cache[z];
    };

    policy::PolicyInput input;
    input.benchmark = data.benchmark;
    auto decide = [&](std::size_t t, const Eigen::VectorXd& w_prev, const Eigen::VectorXd& tau) {
        const std::size_t z = strata == 1 ? 0 : data.strata[t];
        const Cached& f = forecast(z);
        input.mu = f.mu;
        input.sigma = f.sigma;
        input.w_prev = w_prev;
        input.tau = tau;
        return policy::solve_policy(input, params, options).w;
    };
    BacktestResult res = simulate(data, first, last, decide, params.kappa, window);
    res.label = label;
    res.gamma_sc = params.gamma_sc;
    res.gamma_tc = params.gamma_tc;
    return res;
}

double annualized_return(std::span<const double> net) {
    if (net.empty()) throw InputError("no returns to annualize");
    double log_growth = 0.0;
    for (double r : net) {
        if (!(r > -1.0)) return -1.0;
        log_growth += std::log1p(r);
    }
    return std::expm1(log_growth * 250.0 / static_cast<double>(net.size()));
}

double max_drawdown(std::span<const double> net) {
    double v = 1.0;
    double peak = 1.0;
    double worst = 0.0;
    for (double r : net) {
        v *= 1.0 + r;
        peak = std::max(peak, v);
        worst = std::max(worst, 1.0 - v / peak);
    }
    return std::clamp(worst, 0.0, 1.0);
}

double PerformanceReport::sharpe_ratio() const {
    if (!sharpe) throw DomainError("Sharpe ratio undefined: zero risk");
    return *sharpe;
}

PerformanceReport performance_metrics(std::span<const double> net) {
    if (net.size() < 2) throw InputError("performance metrics need at least 2 days");
    PerformanceReport rep;
    rep.days = net.size();
    rep.annual_return = annualized_return(net);
    const double mean = std::accumulate(net.begin(), net.end(), 0.0) / static_cast<double>(net.size());
    double ss = 0.0;
    for (double r : net) ss += (r - mean) * (r - mean);
    rep.annual_risk = std::sqrt(250.0 * ss / static_cast<double>(net.size() - 1));
    if (rep.annual_risk > 0.0) rep.sharpe = rep.annual_return / rep.annual_risk;
    rep.max_drawdown = max_drawdown(net);
    return rep;
}

PerformanceReport performance_metrics(const BacktestResult& result) { return performance_metrics(result.net); }

FactorRegression factor_regression(std::span<const double> y, const Eigen::MatrixXd& factors,
                                   std::vector<std::string> names) {
    const auto t = static_cast<Eigen::Index>(y.size());
    if (factors.rows() != t) throw InputError("factor panel is not aligned with the returns");
    if (static_cast<Eigen::Index>(names.size()) != factors.cols()) {
        throw InputError("factor names do not match the factor columns");
    }
    if (t < 6) throw InputError("factor regression needs at least 6 observations");
    Eigen::MatrixXd x(t, factors.cols() + 1);
    x.col(0).setOnes();
    x.rightCols(factors.cols()) = factors;
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), t);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < x.cols()) throw RegressionError("factor regression design is rank deficient");
    const Eigen::VectorXd beta = qr.solve(yv);

    FactorRegression out;
    out.factors = std::move(names);
    out.alpha = beta(0);
    out.annual_alpha = 250.0 * beta(0);
    out.coefficients = beta.tail(factors.cols());
    out.observations = static_cast<std::size_t>(t);
    const double ybar = yv.mean();
    const double tss = (yv.array() - ybar).square().sum();
    const double rss = (yv - x * beta).squaredNorm();
    out.r_squared = tss > 0.0 ? 1.0 - rss / tss : 1.0;
    return out;
}

std::string ledger_tsv(const BacktestResult& result) {
    std::ostringstream out;
    out << "date\tcondition";
    for (const auto& a : result.assets) out << "\tw_" << a;
    out << "\tgross\tshorting\ttrading\tnet\tvalue\theld\n";
    for (std::size_t t = 0; t < result.days(); ++t) {
        out << result.dates[t].str() << '\t' << result.strata[t] + 1;
        for (Eigen::Index i = 0; i < result.weights.cols(); ++i) {
            out << '\t' << text::format_double(result.weights(static_cast<Eigen::Index>(t), i));
        }
        out << '\t' << text::format_double(result.gross[t]) << '\t' << text::format_double(result.shorting[t])
            << '\t' << text::format_double(result.trading[t]) << '\t' << text::format_double(result.net[t])
            << '\t' << text::format_double(result.value[t]) << '\t' << (result.held[t] ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string report_text(const PerformanceReport& report) {
    std::ostringstream out;
    out << "days\t" << report.days << '\n';
    out << "annual_return\t" << text::format_double(report.annual_return) << '\n';
    out << "annual_risk\t" << text::format_double(report.annual_risk) << '\n';
    out << "sharpe\t" << (report.sharpe ? text::format_double(*report.sharpe) : std::string("undefined")) << '\n';
    out << "max_drawdown\t" << text::format_double(report.max_drawdown) << '\n';
    return out.str();
}

}  // namespace stratport::backtest
