#include "stratport/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "stratport/error.hpp"
#include "stratport/random.hpp"
#include "stratport/text.hpp"

namespace stratport::data {

std::size_t Panel::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InputError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

bool Panel::has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

Panel Panel::select_rows(const std::vector<std::size_t>& rows) const {
    Panel out;
    out.columns = columns;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.dates.push_back(dates.at(rows[i]));
        out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

std::vector<std::size_t> Panel::row_indices(const DateRange& range) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (range.contains(dates[i])) rows.push_back(i);
    }
    return rows;
}

Panel Panel::rows_in(const DateRange& range) const { return select_rows(row_indices(range)); }

void Panel::validate() const {
    if (values.rows() != static_cast<Eigen::Index>(dates.size()) ||
        values.cols() != static_cast<Eigen::Index>(columns.size())) {
        throw InputError("panel shape does not match its dates and columns");
    }
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (!(dates[i - 1] < dates[i])) {
            throw InputError("dates are not strictly increasing at " + dates[i].str());
        }
    }
}

namespace {

bool is_missing(std::string_view cell) {
    return cell.empty() || cell == "NA" || cell == "nan" || cell == "NaN";
}

}  // namespace

Panel read_csv(std::istream& in, const std::string& source, IngestLog* log) {
    std::string line;
    std::size_t line_no = 0;
    auto where = [&] { return source + ":" + std::to_string(line_no); };
    // leading '#' lines carry provenance and are skipped, as are later ones
    bool got = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] != '#') {
            got = true;
            break;
        }
    }
    if (!got) throw InputError(source + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = text::split(line, ',');
    for (auto& h : header) h = std::string(text::trim(h));
    if (header.size() < 2 || header[0] != "date") {
        throw InputError(where() + ": header must start with 'date' and name at least one column");
    }
    Panel p;
    p.columns.assign(header.begin() + 1, header.end());
    for (std::size_t i = 0; i < p.columns.size(); ++i) {
        if (p.columns[i].empty()) throw InputError(where() + ": empty column name");
        for (std::size_t j = 0; j < i; ++j) {
            if (p.columns[i] == p.columns[j]) throw InputError(where() + ": duplicate column " + p.columns[i]);
        }
    }
    const std::size_t cols = p.columns.size();
    std::vector<double> cells;
    IngestLog local;
    local.source = source;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty() || line[0] == '#') continue;
        ++local.rows_read;
        const auto fields = text::split(line, ',');
        if (fields.size() != cols + 1) {
            throw InputError(where() + ": expected " + std::to_string(cols + 1) + " fields, found " +
                             std::to_string(fields.size()));
        }
        const Date d = Date::parse(text::trim(fields[0]));
        bool missing = false;
        std::vector<double> row(cols);
        for (std::size_t j = 0; j < cols; ++j) {
            const auto cell = text::trim(fields[j + 1]);
            if (is_missing(cell)) {
                missing = true;
                break;
            }
            try {
                row[j] = text::parse_double(cell);
            } catch (const InputError&) {
                throw InputError(where() + ": bad number '" + std::string(cell) + "'");
            }
            if (!std::isfinite(row[j])) throw InputError(where() + ": non-finite value");
        }
        if (missing) {
            ++local.rows_dropped;
            continue;
        }
        if (!p.dates.empty() && !(p.dates.back() < d)) {
            throw InputError(where() + ": dates must be strictly increasing");
        }
        p.dates.push_back(d);
        cells.insert(cells.end(), row.begin(), row.end());
    }
    p.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        cells.data(), static_cast<Eigen::Index>(p.dates.size()), static_cast<Eigen::Index>(cols));
    if (log) *log = local;
    return p;
}

Panel read_csv_file(const std::string& path, IngestLog* log) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return read_csv(in, path, log);
}

std::string to_csv(const Panel& panel) {
    panel.validate();
    std::string out = "date";
    for (const auto& c : panel.columns) out += "," + c;
    out += '\n';
    for (std::size_t i = 0; i < panel.rows(); ++i) {
        out += panel.dates[i].str();
        for (Eigen::Index j = 0; j < panel.values.cols(); ++j) {
            out += ',';
            out += text::format_double(panel.values(static_cast<Eigen::Index>(i), j));
        }
        out += '\n';
    }
    return out;
}

void write_csv_file(const std::string& path, const Panel& panel) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << to_csv(panel);
}

std::vector<Panel> inner_join(const std::vector<Panel>& panels) {
    if (panels.empty()) return {};
    std::vector<Date> common = panels[0].dates;
    for (std::size_t k = 1; k < panels.size(); ++k) {
        std::vector<Date> next;
        std::set_intersection(common.begin(), common.end(), panels[k].dates.begin(), panels[k].dates.end(),
                              std::back_inserter(next));
        common = std::move(next);
    }
    std::vector<Panel> out;
    for (const auto& p : panels) {
        p.validate();
        std::vector<std::size_t> rows;
        std::size_t j = 0;
        for (std::size_t i = 0; i < p.dates.size() && j < common.size(); ++i) {
            if (p.dates[i] == common[j]) {
                rows.push_back(i);
                ++j;
            }
        }
        out.push_back(p.select_rows(rows));
    }
    return out;
}

Panel compute_active_returns(const Panel& panel, const std::string& benchmark) {
    if (!panel.has_column(benchmark)) throw InputError("benchmark column '" + benchmark + "' not in the returns");
    const auto b = static_cast<Eigen::Index>(panel.column(benchmark));
    Panel out = panel;
    for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
        if (j != b) out.values.col(j) -= panel.values.col(b);
    }
    out.values.col(b).setZero();
    return out;
}

WinsorLimits winsor_limits(const Panel& panel, const DateRange& fit_range, double lo, double hi) {
    if (!(0.0 <= lo && lo < hi && hi <= 1.0)) throw InputError("winsorization percentiles must satisfy 0 <= lo < hi <= 1");
    const auto rows = panel.row_indices(fit_range);
    if (rows.empty()) throw InputError("no rows in the winsorization fit range");
    WinsorLimits limits;
    std::vector<double> col(rows.size());
    for (Eigen::Index j = 0; j < panel.values.cols(); ++j) {
        for (std::size_t i = 0; i < rows.size(); ++i) col[i] = panel.values(static_cast<Eigen::Index>(rows[i]), j);
        std::sort(col.begin(), col.end());
        // nearest-rank order statistics keep the clip idempotent
        const double last = static_cast<double>(col.size() - 1);
        limits.lo.push_back(col[static_cast<std::size_t>(std::lround(lo * last))]);
        limits.hi.push_back(col[static_cast<std::size_t>(std::lround(hi * last))]);
    }
    return limits;
}

Panel winsorize(const Panel& panel, const DateRange& fit_range, double lo, double hi) {
    const auto limits = winsor_limits(panel, fit_range, lo, hi);
    Panel out = panel;
    for (std::size_t i : panel.row_indices(fit_range)) {
        for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
            double& v = out.values(static_cast<Eigen::Index>(i), j);
            const auto c = static_cast<std::size_t>(j);
            v = std::clamp(v, limits.lo[c], limits.hi[c]);
        }
    }
    return out;
}

void SplitSpec::validate() const {
    if (model.last < model.first || test.last < test.first) throw InputError("date ranges must be well ordered");
    if (model.overlaps(test)) throw InputError("model and test periods overlap");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw InputError("validation fraction must be in (0, 1)");
    }
}

RecordSplit split_records(const std::vector<Date>& dates, const SplitSpec& spec) {
    spec.validate();
    RecordSplit out;
    std::vector<std::size_t> model;
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (spec.model.contains(dates[i])) model.push_back(i);
        if (spec.test.contains(dates[i])) out.test.push_back(i);
    }
    Rng rng(spec.seed);
    rng.shuffle(model);
    const auto n_val = static_cast<std::size_t>(std::floor(spec.validation_fraction * static_cast<double>(model.size())));
    out.validation.assign(model.begin(), model.begin() + static_cast<std::ptrdiff_t>(n_val));
    out.train.assign(model.begin() + static_cast<std::ptrdiff_t>(n_val), model.end());
    std::sort(out.validation.begin(), out.validation.end());
    std::sort(out.train.begin(), out.train.end());
    return out;
}

SplitData split(const Panel& outcomes, const std::vector<std::size_t>& strata, std::size_t strata_count,
                const SplitSpec& spec) {
    outcomes.validate();
    if (strata.size() != outcomes.rows()) throw InputError("conditions are not aligned with the returns");
    SplitData out;
    out.rows = split_records(outcomes.dates, spec);
    const auto n = static_cast<std::size_t>(outcomes.values.cols());
    out.train = fit::StratumDataset(strata_count, n);
    out.validation = fit::StratumDataset(strata_count, n);
    auto fill = [&](const std::vector<std::size_t>& rows, fit::StratumDataset& ds) {
        for (std::size_t r : rows) {
            if (strata[r] >= strata_count) throw InputError("condition index outside the grid");
            ds.add(strata[r], outcomes.values.row(static_cast<Eigen::Index>(r)).transpose());
        }
    };
    fill(out.rows.train, out.train);
    fill(out.rows.validation, out.validation);
    return out;
}

Eigen::MatrixXd indicator_diagnostics(const Panel& indicators, const DateRange& fit_range) {
    const Panel p = indicators.rows_in(fit_range);
    if (p.rows() < 2) throw InputError("indicator diagnostics need at least 2 observations");
    const Eigen::MatrixXd centered = p.values.rowwise() - p.values.colwise().mean();
    const Eigen::VectorXd ss = centered.colwise().squaredNorm();
    for (Eigen::Index j = 0; j < ss.size(); ++j) {
        const double lo = p.values.col(j).minCoeff();
        if (lo == p.values.col(j).maxCoeff()) {
            throw UndefinedCorrelationError("indicator '" + p.columns[static_cast<std::size_t>(j)] + "' is constant");
        }
    }
    const Eigen::MatrixXd cov = centered.transpose() * centered;
    const Eigen::VectorXd inv = ss.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd corr = inv.asDiagonal() * cov * inv.asDiagonal();
    corr.diagonal().setOnes();
    return corr;
}

std::vector<double> moving_average(const std::vector<double>& values, std::size_t window, std::size_t lag) {
    if (window == 0) throw InputError("moving-average window must be positive");
    std::vector<double> out(values.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t t = window - 1 + lag; t < values.size(); ++t) {
        double sum = 0.0;
        for (std::size_t s = t - lag + 1 - window; s <= t - lag; ++s) sum += values[s];
        out[t] = sum / static_cast<double>(window);
    }
    return out;
}

Records align_records(const Panel& raw_returns, const Panel& spreads, const Panel& indicators,
                      const std::string& benchmark) {
    if (raw_returns.columns != spreads.columns) {
        throw InputError("returns and spreads files must have the same asset columns in the same order");
    }
    auto joined = inner_join({raw_returns, spreads, indicators});
    const std::size_t t = joined[0].rows();
    if (t < 2) throw InputError("fewer than 2 dates shared by returns, spreads and indicators");
    std::vector<std::size_t> rows(t - 1);
    std::vector<std::size_t> lagged(t - 1);
    for (std::size_t i = 1; i < t; ++i) {
        rows[i - 1] = i;
        lagged[i - 1] = i - 1;
    }
    Records r;
    r.benchmark = benchmark;
    r.returns = compute_active_returns(joined[0].select_rows(rows), benchmark);
    r.spreads = joined[1].select_rows(rows);
    if ((r.spreads.values.array() < 0.0).any()) throw InputError("negative bid-ask spread");
    r.indicators = joined[2].select_rows(lagged);
    r.indicators.dates = r.returns.dates;
    return r;
}

std::vector<graph::MarketCondition> assign_conditions(const Panel& indicators, const graph::DecileBins& bins) {
    if (indicators.columns != bins.names) throw InputError("indicator columns do not match the bins");
    std::vector<graph::MarketCondition> out;
    out.reserve(indicators.rows());
    std::vector<double> row(indicators.columns.size());
    for (std::size_t i = 0; i < indicators.rows(); ++i) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] = indicators.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        out.push_back(graph::assign_condition(row, bins));
    }
    return out;
}

double mean_condition_step(const std::vector<graph::MarketCondition>& z) {
    if (z.size() < 2) return 0.0;
    double total = 0.0;
    for (std::size_t t = 1; t < z.size(); ++t) {
        for (std::size_t j = 0; j < z[t].levels.size(); ++j) total += std::abs(z[t].levels[j] - z[t - 1].levels[j]);
    }
    return total / static_cast<double>(z.size() - 1);
}

void GroundTruth::validate() const {
    const graph::GridShape shape(dims);
    if (mu.size() != shape.size() || sigma.size() != shape.size()) {
        throw InputError("ground truth must have one mean and one covariance per stratum");
    }
    const auto n = static_cast<Eigen::Index>(assets.size());
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (mu[k].size() != n || sigma[k].rows() != n || sigma[k].cols() != n) {
            throw InputError("ground truth stratum " + std::to_string(k + 1) + " has the wrong size");
        }
        const double scale = std::max(1e-300, sigma[k].cwiseAbs().maxCoeff());
        if ((sigma[k] - sigma[k].transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
            throw InputError("ground truth covariance is not symmetric");
        }
        Eigen::LLT<Eigen::MatrixXd> llt(sigma[k]);
        if (llt.info() != Eigen::Success) throw InputError("ground truth covariance is not positive definite");
    }
}

GroundTruth regime_ground_truth(const std::vector<int>& dims, std::size_t assets, std::uint64_t seed, double signal,
                                double volatility) {
    const graph::GridShape shape(dims);
    const auto n = static_cast<Eigen::Index>(assets);
    const auto r = static_cast<Eigen::Index>(dims.size());
    Rng rng(seed);
    GroundTruth g;
    g.dims = dims;
    for (std::size_t i = 0; i < assets; ++i) g.assets.push_back("S" + std::to_string(i + 1));

    Eigen::MatrixXd loading(n, r);
    for (Eigen::Index i = 0; i < loading.size(); ++i) loading.data()[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    loading /= std::sqrt(static_cast<double>(r));
    Eigen::MatrixXd factor(n, 2);
    for (Eigen::Index i = 0; i < factor.size(); ++i) factor.data()[i] = rng.normal();
    Eigen::MatrixXd corr = factor * factor.transpose() / 2.0 + Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd d = corr.diagonal().cwiseSqrt().cwiseInverse();
    corr = d.asDiagonal() * corr * d.asDiagonal();
    Eigen::VectorXd vols(n);
    for (Eigen::Index i = 0; i < n; ++i) vols(i) = volatility * rng.uniform(0.6, 1.4);

    for (std::size_t k = 0; k < shape.size(); ++k) {
        const auto levels = shape.levels(k + 1);
        Eigen::VectorXd x(r);
        for (Eigen::Index j = 0; j < r; ++j) {
            const int dj = dims[static_cast<std::size_t>(j)];
            x(j) = dj == 1 ? 0.0 : 2.0 * (levels[static_cast<std::size_t>(j)] - 1) / (dj - 1) - 1.0;
        }
        g.mu.push_back(signal * (loading * x));
        const double scale = 1.0 + 0.25 * x(0);
        const Eigen::VectorXd v = scale * vols;
        Eigen::MatrixXd s = v.asDiagonal() * corr * v.asDiagonal();
        s = 0.5 * (s + s.transpose().eval());
        g.sigma.push_back(s);
    }
    g.validate();
    return g;
}

SynthMarket synth_generate(const GroundTruth& truth, const SynthOptions& options) {
    truth.validate();
    if (!(options.move_probability >= 0.0 && options.move_probability <= 1.0)) {
        throw InputError("move probability must be in [0, 1]");
    }
    if (!(options.offset_persistence >= 0.0 && options.offset_persistence < 1.0)) {
        throw InputError("offset persistence must be in [0, 1)");
    }
    if (truth.dims.size() != options.indicator_names.size()) {
        throw InputError("one indicator name per grid dimension is required");
    }
    const graph::GridShape shape(truth.dims);
    const auto n = static_cast<Eigen::Index>(truth.assets.size());
    const auto days = static_cast<Eigen::Index>(options.days);
    const std::size_t rank = truth.dims.size();
    Rng rng(options.seed);

    SynthMarket m;
    m.truth = truth;
    std::vector<std::string> cols = truth.assets;
    cols.push_back(options.benchmark);
    m.returns.columns = cols;
    m.spreads.columns = cols;
    m.indicators.columns = options.indicator_names;
    m.returns.values.resize(days, n + 1);
    m.spreads.values.resize(days, n + 1);
    m.indicators.values.resize(days, static_cast<Eigen::Index>(rank));

    std::vector<Eigen::MatrixXd> chol;
    for (const auto& s : truth.sigma) chol.push_back(Eigen::LLT<Eigen::MatrixXd>(s).matrixL());
    Eigen::VectorXd base(n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) base(i) = rng.uniform(options.spread_low, options.spread_high);

    std::vector<int> level(rank);
    for (std::size_t j = 0; j < rank; ++j) level[j] = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(truth.dims[j])));
    auto step = [&] {
        for (std::size_t j = 0; j < rank; ++j) {
            if (rng.uniform() < options.move_probability) {
                const int next = level[j] + (rng.uniform() < 0.5 ? -1 : 1);
                if (next >= 1 && next <= truth.dims[j]) level[j] = next;
            }
        }
    };

    // within-level position of each indicator, a slow AR(1) squashed into (0.05, 0.95)
    std::vector<double> drift(rank, 0.0);
    const double phi = options.offset_persistence;
    const double innovation = std::sqrt(1.0 - phi * phi);

    Date date = options.start;
    Eigen::VectorXd e(n);
    for (Eigen::Index t = 0; t < days; ++t) {
        while (date.weekday() == 0 || date.weekday() == 6) date = Date(date.serial() + 1);
        m.returns.dates.push_back(date);
        const auto z = graph::make_condition(shape, level);
        m.conditions.push_back(z);

        const double bench = options.benchmark_mean + options.benchmark_volatility * rng.normal();
        for (Eigen::Index i = 0; i < n; ++i) e(i) = rng.normal();
        const Eigen::VectorXd active = truth.mu[z.stratum()] + chol[z.stratum()] * e;
        m.returns.values.row(t).head(n) = (active.array() + bench).matrix().transpose();
        m.returns.values(t, n) = bench;
        for (Eigen::Index i = 0; i <= n; ++i) {
            m.spreads.values(t, i) = base(i) * (1.0 + options.spread_noise * rng.uniform(-1.0, 1.0));
        }

        // tomorrow's condition, published at today's close
        step();
        for (std::size_t j = 0; j < rank; ++j) {
            drift[j] = phi * drift[j] + innovation * rng.normal();
            m.indicators.values(t, static_cast<Eigen::Index>(j)) = (level[j] - 1) + 0.5 + 0.45 * std::tanh(drift[j]);
        }
        date = Date(date.serial() + 1);
    }
    m.spreads.dates = m.returns.dates;
    m.indicators.dates = m.returns.dates;
    return m;
}

}  // namespace stratport::data
