#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "stratport/backtest.hpp"
#include "stratport/error.hpp"

using namespace stratport;
using namespace stratport::backtest;

namespace {

// n assets with the benchmark last, K strata, random active returns/spreads.
MarketData random_market(Rng& rng, std::size_t days, Eigen::Index n, std::size_t strata) {
    MarketData d;
    for (Eigen::Index i = 0; i + 1 < n; ++i) d.assets.push_back("A" + std::to_string(i));
    d.assets.push_back("BM");
    d.benchmark = static_cast<std::size_t>(n - 1);
    const auto t = static_cast<Eigen::Index>(days);
    d.returns = Eigen::MatrixXd::Zero(t, n);
    d.spreads = Eigen::MatrixXd::Zero(t, n);
    for (std::size_t k = 0; k < days; ++k) {
        d.dates.push_back(Date(10000 + static_cast<int>(k)));
        d.strata.push_back(rng.below(strata));
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i + 1 < n) d.returns(static_cast<Eigen::Index>(k), i) = 0.005 * rng.normal();
            d.spreads(static_cast<Eigen::Index>(k), i) = rng.uniform(0.0, 0.002);
        }
    }
    return d;
}

struct Models {
    models::MeanModel mean;
    models::PrecisionModel risk;
};

Models random_models(Rng& rng, const MarketData& d, std::size_t strata) {
    Models m;
    const auto n = static_cast<int>(d.assets.size()) - 1;
    m.mean.assets.assign(d.assets.begin(), d.assets.end() - 1);
    m.risk.assets = m.mean.assets;
    m.mean.mu = Eigen::MatrixXd(static_cast<Eigen::Index>(strata), n);
    for (Eigen::Index i = 0; i < m.mean.mu.size(); ++i) m.mean.mu.data()[i] = 0.0005 * rng.normal();
    for (std::size_t k = 0; k < strata; ++k) {
        const Eigen::MatrixXd cov = oracle::random_spd(rng, n) * 2e-6;
        m.risk.theta.push_back(cov.inverse());
    }
    return m;
}

double drawdown_oracle(const std::vector<double>& net) {
    std::vector<double> v{1.0};
    for (double r : net) v.push_back(v.back() * (1.0 + r));
    double worst = 0.0;
    for (std::size_t t = 0; t < v.size(); ++t) {
        double peak = 0.0;
        for (std::size_t s = 0; s <= t; ++s) peak = std::max(peak, v[s]);
        worst = std::max(worst, 1.0 - v[t] / peak);
    }
    return worst;
}

}  // namespace

TEST_CASE("trailing half spread") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Constant(30, 3, 0.004);
    CHECK((trailing_half_spread(s, 20) - Eigen::VectorXd::Constant(3, 0.002)).cwiseAbs().maxCoeff() <= 1e-18);
    const Eigen::VectorXd before = trailing_half_spread(s, 20);
    s(20, 1) = 0.5;
    CHECK(trailing_half_spread(s, 20) == before);

    Rng rng(1);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform(0.0, 0.01);
    const Eigen::VectorXd seven = trailing_half_spread(s, 7);
    CHECK((seven - 0.5 * s.topRows(7).colwise().mean().transpose()).cwiseAbs().maxCoeff() <= 1e-15);
    const Eigen::VectorXd full = trailing_half_spread(s, 25);
    CHECK((full - 0.5 * s.middleRows(10, 15).colwise().mean().transpose()).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK_THROWS_AS(trailing_half_spread(s, 0), InputError);
}

TEST_CASE("hand-computed one-step example") {
    MarketData d;
    d.assets = {"X", "BM"};
    d.benchmark = 1;
    d.dates = {Date(1), Date(2)};
    d.strata = {0, 0};
    d.returns = Eigen::MatrixXd::Zero(2, 2);
    d.returns(1, 0) = 0.01;
    d.spreads = Eigen::MatrixXd::Constant(2, 2, 0.002);
    auto decide = [](std::size_t, const Eigen::VectorXd& w_prev, const Eigen::VectorXd&) {
        CHECK(w_prev == Eigen::Vector2d(0.0, 1.0));
        return Eigen::VectorXd(Eigen::Vector2d(0.5, 0.5));
    };
    const auto res = simulate(d, 0, 2, decide, Eigen::Vector2d::Zero());
    REQUIRE(res.days() == 1);
    CHECK(std::abs(res.gross[0] - 0.005) <= 1e-12);
    CHECK(std::abs(res.trading[0] - 0.001) <= 1e-12);
    CHECK(std::abs(res.net[0] - 0.004) <= 1e-12);
    CHECK(std::abs(res.value[0] - 1.004) <= 1e-12);
    CHECK(std::abs(net_return(Eigen::Vector2d(0.01, 0), Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0, 1),
                              Eigen::Vector2d::Zero(), Eigen::Vector2d(0.001, 0.001)) -
                   0.004) <= 1e-12);
}

TEST_CASE("holding the benchmark keeps the active value at 1") {
    Rng rng(2);
    const auto d = random_market(rng, 200, 4, 3);
    auto decide = [&](std::size_t, const Eigen::VectorXd&, const Eigen::VectorXd&) {
        return Eigen::VectorXd(Eigen::VectorXd::Unit(4, 3));
    };
    const auto res = simulate(d, 0, 200, decide, Eigen::VectorXd::Constant(4, 0.0005));
    CHECK(res.days() == 199);
    for (std::size_t t = 0; t < res.days(); ++t) {
        CHECK(res.net[t] == 0.0);
        CHECK(res.value[t] == 1.0);
    }
}

TEST_CASE("zero-cost constant holdings compound exactly") {
    Rng rng(3);
    auto d = random_market(rng, 60, 3, 1);
    d.spreads.setZero();
    const Eigen::Vector3d w(0.3, -0.2, 0.9);
    auto decide = [&](std::size_t, const Eigen::VectorXd&, const Eigen::VectorXd&) { return Eigen::VectorXd(w); };
    const auto res = simulate(d, 1, 60, decide, Eigen::Vector3d::Zero());
    double v = 1.0;
    for (Eigen::Index t = 1; t < 60; ++t) v *= 1.0 + d.returns.row(t).dot(w);
    CHECK(res.value.back() == v);
}

TEST_CASE("policy backtest: accounting identity and value recursion") {
    Rng rng(4);
    const auto d = random_market(rng, 120, 5, 4);
    const auto m = random_models(rng, d, 4);
    auto params = policy::default_params(5);
    params.gamma_sc = 1.0;
    params.gamma_tc = 1.0;
    const auto res = run_backtest(d, 0, 120, m.mean, m.risk, params);
    REQUIRE(res.days() == 119);
    CHECK(res.held_days() == 0);
    Eigen::VectorXd prev = Eigen::VectorXd::Unit(5, 4);
    double v = 1.0;
    for (std::size_t t = 0; t < res.days(); ++t) {
        const auto row = static_cast<Eigen::Index>(t + 1);
        const Eigen::VectorXd w = res.weights.row(static_cast<Eigen::Index>(t)).transpose();
        const double recomputed = net_return(d.returns.row(row).transpose(), w, prev, params.kappa,
                                             0.5 * d.spreads.row(row).transpose());
        CHECK(std::abs(res.net[t] - recomputed) <= 1e-12);
        CHECK(std::abs(res.net[t] - (res.gross[t] - res.shorting[t] - res.trading[t])) <= 1e-12);
        v *= 1.0 + res.net[t];
        CHECK(res.value[t] == v);
        CHECK(std::abs(w.sum() - 1.0) <= 1e-8);
        prev = w;
    }
}

TEST_CASE("the policy never sees the same day's realized spread") {
    Rng rng(5);
    auto d = random_market(rng, 80, 4, 3);
    const auto m = random_models(rng, d, 3);
    auto params = policy::default_params(4);
    params.gamma_sc = 1.0;
    params.gamma_tc = 2.0;
    const auto base = run_backtest(d, 0, 80, m.mean, m.risk, params);
    const std::size_t day = 40;
    d.spreads.row(day) *= 5.0;
    const auto bumped = run_backtest(d, 0, 80, m.mean, m.risk, params);
    const auto row = static_cast<Eigen::Index>(day - 1);  // result rows start at panel day 1
    CHECK(bumped.weights.topRows(row + 1) == base.weights.topRows(row + 1));
    if (bumped.trading[day - 1] > 0.0) CHECK(bumped.trading[day - 1] != base.trading[day - 1]);
}

TEST_CASE("higher trading aversion never increases realized turnover") {
    Rng rng(6);
    const auto d = random_market(rng, 150, 5, 4);
    const auto m = random_models(rng, d, 4);
    auto params = policy::default_params(5);
    params.gamma_sc = 1.0;
    double last = INFINITY;
    for (double g : {0.1, 0.5, 2.0, 8.0, 30.0}) {
        params.gamma_tc = g;
        const auto res = run_backtest(d, 0, 150, m.mean, m.risk, params);
        const double turnover = res.turnover(Eigen::VectorXd::Unit(5, 4));
        CHECK(turnover <= last + 1e-8);
        last = turnover;
    }
}

TEST_CASE("policy failures hold the previous weights and are flagged") {
    Rng rng(7);
    const auto d = random_market(rng, 30, 3, 1);
    auto decide = [&](std::size_t t, const Eigen::VectorXd& w_prev, const Eigen::VectorXd&) -> Eigen::VectorXd {
        if (t % 3 == 0) throw InfeasibleError("no");
        Eigen::VectorXd w = w_prev;
        w(0) += 0.01;
        w(2) -= 0.01;
        return w;
    };
    const auto res = simulate(d, 1, 30, decide, Eigen::Vector3d::Zero());
    for (std::size_t t = 0; t < res.days(); ++t) {
        const bool fail = (t + 1) % 3 == 0;
        CHECK(res.held[t] == fail);
        if (fail) CHECK(res.trading[t] == 0.0);
    }
}

TEST_CASE("misaligned panels are rejected") {
    Rng rng(8);
    auto d = random_market(rng, 10, 3, 1);
    d.strata.pop_back();
    CHECK_THROWS_AS(d.validate(), InputError);
    auto e = random_market(rng, 10, 3, 1);
    e.spreads.conservativeResize(9, 3);
    CHECK_THROWS_AS(e.validate(), InputError);
}

TEST_CASE("performance metrics") {
    const std::vector<double> zeros(10, 0.0);
    const auto z = performance_metrics(zeros);
    CHECK(z.annual_return == 0.0);
    CHECK(z.max_drawdown == 0.0);
    CHECK_FALSE(z.sharpe.has_value());
    CHECK_THROWS_AS(z.sharpe_ratio(), DomainError);

    const std::vector<double> up{0.01, 0.002, 0.03, 0.0001};
    CHECK(performance_metrics(up).max_drawdown == 0.0);

    const std::vector<double> flat{0.001, 0.001, 0.001};
    const auto f = performance_metrics(flat);
    CHECK(std::abs(f.annual_return - (std::pow(1.001, 250.0) - 1.0)) <= 1e-12);

    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> net(300);
        for (auto& r : net) r = 0.01 * rng.normal();
        const auto rep = performance_metrics(net);
        CHECK(std::abs(rep.max_drawdown - drawdown_oracle(net)) <= 1e-12);
        CHECK(rep.max_drawdown >= 0.0);
        CHECK(rep.max_drawdown <= 1.0);
        CHECK(rep.sharpe_ratio() == rep.annual_return / rep.annual_risk);
        double mean = 0.0;
        for (double r : net) mean += r / 300.0;
        double ss = 0.0;
        for (double r : net) ss += (r - mean) * (r - mean);
        CHECK(std::abs(rep.annual_risk - std::sqrt(250.0 * ss / 299.0)) <= 1e-12);
        double growth = 1.0;
        for (double r : net) growth *= 1.0 + r;
        CHECK(std::abs(rep.annual_return - (std::pow(growth, 250.0 / 300.0) - 1.0)) <= 1e-10);
    }
    CHECK_THROWS_AS(performance_metrics(std::vector<double>{0.1}), InputError);
}

TEST_CASE("factor regression") {
    Rng rng(10);
    const Eigen::Index t = 200;
    Eigen::MatrixXd f(t, 4);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = 0.01 * rng.normal();

    std::vector<double> y(static_cast<std::size_t>(t));
    for (Eigen::Index i = 0; i < t; ++i) y[static_cast<std::size_t>(i)] = f(i, 0);
    const auto exact = factor_regression(y, f);
    CHECK((exact.coefficients - Eigen::Vector4d(1, 0, 0, 0)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(exact.alpha) <= 1e-14);

    for (Eigen::Index i = 0; i < t; ++i) {
        y[static_cast<std::size_t>(i)] = 0.000097 + 0.3 * f(i, 1) - 0.2 * f(i, 3) + 0.001 * rng.normal();
    }
    const auto fit = factor_regression(y, f);
    Eigen::MatrixXd x(t, 5);
    x.col(0).setOnes();
    x.rightCols(4) = f;
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), t);
    const Eigen::VectorXd normal = (x.transpose() * x).ldlt().solve(x.transpose() * yv);
    CHECK(std::abs(fit.alpha - normal(0)) <= 1e-9);
    CHECK((fit.coefficients - normal.tail(4)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(fit.annual_alpha == 250.0 * fit.alpha);
    CHECK(250.0 * 0.000097 == doctest::Approx(0.0243).epsilon(0.01));

    Eigen::MatrixXd bad = f;
    bad.col(2) = 2.0 * bad.col(1);
    CHECK_THROWS_AS(factor_regression(y, bad), RegressionError);
    CHECK_THROWS_AS(factor_regression(std::span<const double>(y.data(), 5), f.topRows(5)), InputError);
}

TEST_CASE("ledger text has one row per day") {
    Rng rng(11);
    const auto d = random_market(rng, 12, 3, 1);
    auto decide = [&](std::size_t, const Eigen::VectorXd& w, const Eigen::VectorXd&) { return w; };
    const auto res = simulate(d, 0, 12, decide, Eigen::Vector3d::Zero());
    const std::string text = ledger_tsv(res);
    CHECK(std::count(text.begin(), text.end(), '\n') == 12);
    CHECK(text.rfind("date\tcondition\tw_A0", 0) == 0);
}
