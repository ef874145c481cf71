#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "stratport/dataio.hpp"
#include "stratport/error.hpp"

using namespace stratport;
using namespace stratport::data;

namespace {

Panel random_panel(Rng& rng, std::size_t rows, std::size_t cols, double scale = 0.01) {
    Panel p;
    for (std::size_t j = 0; j < cols; ++j) p.columns.push_back("C" + std::to_string(j));
    p.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        p.dates.push_back(Date(13000 + 2 * static_cast<int>(i)));
        for (std::size_t j = 0; j < cols; ++j) {
            p.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = scale * rng.normal();
        }
    }
    return p;
}

Panel parse(const std::string& text, IngestLog* log = nullptr) {
    std::istringstream in(text);
    return read_csv(in, "test.csv", log);
}

}  // namespace

TEST_CASE("csv round trip is bit exact") {
    Rng rng(1);
    Panel p = random_panel(rng, 50, 4);
    p.values(3, 2) = 1e-300;
    p.values(4, 1) = -0.0;
    p.values(5, 0) = 0.1 + 0.2;
    const Panel q = parse(to_csv(p));
    CHECK(q.dates == p.dates);
    CHECK(q.columns == p.columns);
    for (Eigen::Index i = 0; i < p.values.size(); ++i) {
        CHECK(std::memcmp(&q.values.data()[i], &p.values.data()[i], sizeof(double)) == 0);
    }
}

TEST_CASE("csv ingestion drops rows with missing cells and rejects malformed input") {
    IngestLog log;
    const Panel p = parse("date,A,B\n2020-01-02,0.1,0.2\n2020-01-03,,0.3\n2020-01-06,NA,1\n2020-01-07,0.5,0.6\n", &log);
    CHECK(p.rows() == 2);
    CHECK(log.rows_read == 4);
    CHECK(log.rows_dropped == 2);
    CHECK(p.values(1, 1) == 0.6);
    CHECK(parse("# cfg 1\ndate,A\n# note\n2020-01-02,1\n").rows() == 1);
    CHECK_THROWS_AS(parse("# only a comment\n"), InputError);
    CHECK_THROWS_AS(parse("day,A\n2020-01-02,1\n"), InputError);
    CHECK_THROWS_AS(parse("date,A\n2020-01-02,abc\n"), InputError);
    CHECK_THROWS_AS(parse("date,A\n2020-01-02,1,2\n"), InputError);
    CHECK_THROWS_AS(parse("date,A\n2020-01-03,1\n2020-01-02,1\n"), InputError);
    CHECK_THROWS_AS(parse("date,A\n2020-13-03,1\n"), InputError);
    CHECK_THROWS_AS(parse("date,A,A\n2020-01-03,1,1\n"), InputError);
}

TEST_CASE("inner join keeps shared dates only") {
    const Panel a = parse("date,X\n2020-01-02,1\n2020-01-03,2\n2020-01-06,3\n");
    const Panel b = parse("date,Y\n2020-01-03,20\n2020-01-06,30\n2020-01-07,40\n");
    const auto j = inner_join({a, b});
    REQUIRE(j[0].rows() == 2);
    CHECK(j[0].dates == j[1].dates);
    CHECK(j[0].values(0, 0) == 2.0);
    CHECK(j[1].values(1, 0) == 30.0);
}

TEST_CASE("active returns") {
    Panel p = parse("date,A,VTI\n2020-01-02,0.02,0.005\n2020-01-03,-0.01,0.01\n");
    const Panel a = compute_active_returns(p, "VTI");
    CHECK(a.values(0, 0) == doctest::Approx(0.015).epsilon(1e-12));
    CHECK(a.values.col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(compute_active_returns(p, "SPY"), InputError);

    Rng rng(2);
    Panel r = random_panel(rng, 30, 3);
    Panel shifted = r;
    shifted.values.array() += 0.125;  // exact in binary, so the difference is exact too
    const Panel x = compute_active_returns(r, "C0");
    const Panel y = compute_active_returns(shifted, "C0");
    CHECK((x.values - y.values).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("winsorization") {
    Rng rng(3);
    Panel p = random_panel(rng, 400, 3);
    const DateRange model{p.dates[0], p.dates[299]};
    const Panel w = winsorize(p, model);
    const auto limits = winsor_limits(p, model);
    for (Eigen::Index j = 0; j < 3; ++j) {
        std::vector<double> col;
        for (Eigen::Index i = 0; i < 300; ++i) col.push_back(p.values(i, j));
        std::sort(col.begin(), col.end());
        CHECK(limits.hi[static_cast<std::size_t>(j)] == col[296]);  // round(0.99 * 299)
        CHECK(limits.lo[static_cast<std::size_t>(j)] == col[3]);    // round(0.01 * 299)
    }
    // values above the upper limit become the limit
    Eigen::Index arg = 0;
    p.values.col(0).head(300).maxCoeff(&arg);
    CHECK(w.values(arg, 0) == limits.hi[0]);
    // test-period rows are untouched
    CHECK(w.values.bottomRows(100) == p.values.bottomRows(100));
    // idempotent: the clipped data have the same limits
    const Panel ww = winsorize(w, model);
    CHECK(ww.values == w.values);
    // data already inside the limits is unchanged
    Panel inside = p;
    inside.values.setConstant(0.001);
    CHECK(winsorize(inside, model).values == inside.values);
}

TEST_CASE("split sizes, determinism and partition") {
    std::vector<Date> dates;
    for (int i = 0; i < 1300; ++i) dates.push_back(Date(14000 + i));
    SplitSpec spec;
    spec.model = {dates[0], dates[999]};
    spec.test = {dates[1000], dates[1299]};
    spec.seed = 7;
    const auto s = split_records(dates, spec);
    CHECK(s.validation.size() == 200);
    CHECK(s.train.size() == 800);
    CHECK(s.test.size() == 300);
    CHECK(s.test.front() == 1000);
    CHECK(std::is_sorted(s.test.begin(), s.test.end()));
    const auto again = split_records(dates, spec);
    CHECK(again.train == s.train);
    CHECK(again.validation == s.validation);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        spec.seed = seed;
        spec.validation_fraction = 0.1 + 0.04 * static_cast<double>(seed);
        const auto p = split_records(dates, spec);
        std::set<std::size_t> all(p.train.begin(), p.train.end());
        for (auto v : p.validation) CHECK(all.insert(v).second);
        CHECK(all.size() == 1000);
        CHECK(*all.rbegin() == 999);
        CHECK(p.validation.size() == static_cast<std::size_t>(std::floor(spec.validation_fraction * 1000.0)));
    }
    spec.seed = 8;
    spec.validation_fraction = 0.2;
    CHECK(split_records(dates, spec).validation != s.validation);
    spec.test = {dates[900], dates[1299]};
    CHECK_THROWS_AS(split_records(dates, spec), InputError);
}

TEST_CASE("split groups records by stratum") {
    Rng rng(4);
    const Panel p = random_panel(rng, 100, 2);
    std::vector<std::size_t> strata;
    for (int i = 0; i < 100; ++i) strata.push_back(static_cast<std::size_t>(i % 3));
    SplitSpec spec;
    spec.model = {p.dates[0], p.dates[79]};
    spec.test = {p.dates[80], p.dates[99]};
    const auto s = split(p, strata, 3, spec);
    CHECK(s.train.total() == 64);
    CHECK(s.validation.total() == 16);
    std::size_t in0 = 0;
    for (auto r : s.rows.train) in0 += strata[r] == 0 ? 1 : 0;
    CHECK(s.train.count(0) == in0);
    strata.pop_back();
    CHECK_THROWS_AS(split(p, strata, 3, spec), InputError);
}

TEST_CASE("indicator diagnostics") {
    Rng rng(5);
    Panel p = random_panel(rng, 10000, 2, 1.0);
    const DateRange all{p.dates.front(), p.dates.back()};
    const Eigen::MatrixXd c = indicator_diagnostics(p, all);
    CHECK(c(0, 0) == 1.0);
    // independent series: |corr| below 5 standard errors (1/sqrt(N))
    CHECK(std::abs(c(0, 1)) < 0.05);
    std::vector<double> a, b;
    for (Eigen::Index i = 0; i < 10000; ++i) {
        a.push_back(p.values(i, 0));
        b.push_back(p.values(i, 1));
    }
    CHECK(std::abs(c(0, 1) - oracle::pearson(a, b)) <= 1e-12);
    p.values.col(1).setConstant(3.0);
    CHECK_THROWS_AS(indicator_diagnostics(p, all), UndefinedCorrelationError);
}

TEST_CASE("lagged moving average") {
    std::vector<double> v{1, 2, 3, 4, 5, 6};
    const auto m = moving_average(v, 3, 1);
    CHECK(std::isnan(m[2]));
    CHECK(m[3] == 2.0);
    CHECK(m[5] == 4.0);
    const auto z = moving_average(v, 2, 0);
    CHECK(z[1] == 1.5);
}

TEST_CASE("records: condition of day t comes from the previous indicator row") {
    const Panel r = parse("date,A,VTI\n2020-01-02,0.01,0.0\n2020-01-03,0.02,0.01\n2020-01-06,0.03,0.01\n");
    const Panel s = parse("date,A,VTI\n2020-01-02,0.001,0.001\n2020-01-03,0.001,0.001\n2020-01-06,0.001,0.001\n");
    const Panel ind = parse("date,v\n2020-01-02,10\n2020-01-03,20\n2020-01-06,30\n");
    const auto rec = align_records(r, s, ind, "VTI");
    REQUIRE(rec.returns.rows() == 2);
    CHECK(rec.returns.dates[0] == Date(2020, 1, 3));
    CHECK(rec.indicators.values(0, 0) == 10.0);
    CHECK(rec.indicators.values(1, 0) == 20.0);
    CHECK(rec.returns.values(1, 0) == doctest::Approx(0.02));
}

TEST_CASE("synthetic market generator") {
    const auto truth = regime_ground_truth({3, 3, 3}, 4, 11);
    CHECK(truth.mu.size() == 27);
    SynthOptions o;
    o.seed = 5;
    o.days = 0;
    const auto empty = synth_generate(truth, o);
    CHECK(empty.returns.rows() == 0);
    CHECK(empty.spreads.rows() == 0);

    o.days = 3000;
    const auto a = synth_generate(truth, o);
    const auto b = synth_generate(truth, o);
    CHECK(a.returns.values == b.returns.values);
    CHECK(a.spreads.values == b.spreads.values);
    CHECK(a.indicators.values == b.indicators.values);
    CHECK(to_csv(a.returns) == to_csv(b.returns));
    CHECK((a.spreads.values.array() >= 0.0).all());
    for (const auto& d : a.returns.dates) CHECK((d.weekday() != 0 && d.weekday() != 6));
    // the indicator row of day t encodes the condition of day t+1
    for (std::size_t t = 0; t + 1 < a.conditions.size(); ++t) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(static_cast<int>(std::floor(a.indicators.values(static_cast<Eigen::Index>(t),
                                                                  static_cast<Eigen::Index>(j)))) +
                      1 ==
                  a.conditions[t + 1].levels[j]);
        }
    }
    const double step = mean_condition_step(a.conditions);
    CHECK(step > 0.05);
    CHECK(step < 0.3);

    // quantile bins of the indicators recover most conditions without jitter
    graph::DecileBins bins;
    bins.names = a.indicators.columns;
    bins.levels = 3;
    bins.fit_range = {a.indicators.dates.front(), a.indicators.dates.back()};
    for (Eigen::Index j = 0; j < 3; ++j) {
        const Eigen::VectorXd col = a.indicators.values.col(j);
        bins.boundaries.push_back(graph::compute_decile_bins(
            a.indicators.dates, std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
            bins.fit_range, 3));
    }
    const auto binned = assign_conditions(a.indicators, bins);
    std::size_t agree = 0;
    for (std::size_t t = 0; t + 1 < a.conditions.size(); ++t) agree += binned[t].index == a.conditions[t + 1].index;
    CHECK(static_cast<double>(agree) / static_cast<double>(a.conditions.size() - 1) > 0.7);
    CHECK(mean_condition_step(binned) < 2.0 * step);

    auto bad = truth;
    bad.sigma[3](0, 0) = -1.0;
    CHECK_THROWS_AS(synth_generate(bad, o), InputError);
}

TEST_CASE("single-stratum synthetic sample mean is within 4 standard errors") {
    data::GroundTruth g;
    g.dims = {1};
    g.assets = {"X", "Y"};
    g.mu = {Eigen::Vector2d(0.001, -0.0005)};
    Eigen::Matrix2d s;
    s << 1e-4, 3e-5, 3e-5, 4e-5;
    g.sigma = {s};
    SynthOptions o;
    o.days = 100000;
    o.seed = 3;
    o.indicator_names = {"v"};
    const auto m = synth_generate(g, o);
    const Panel active = compute_active_returns(m.returns, "BM");
    for (Eigen::Index i = 0; i < 2; ++i) {
        const double mean = active.values.col(i).mean();
        const double se = std::sqrt(s(i, i) / 100000.0);
        CHECK(std::abs(mean - g.mu[0](i)) < 4.0 * se);
    }
}
