#include "stratport/plot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stratport/text.hpp"

namespace stratport::plot {

namespace {

constexpr double kWidth = 900;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 50;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
                                "#8c6d31", "#843c39", "#7b4173", "#3182bd", "#e6550d", "#31a354"};

std::string color(std::size_t i) { return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))]; }

std::string num(double x) { return text::format_fixed(x, 2); }

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string tick_label(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

struct Frame {
    double x0, x1, y0, y1;  // data ranges
    double px(double x) const {
        const double w = kWidth - kLeft - kRight;
        return kLeft + (x1 == x0 ? 0.5 : (x - x0) / (x1 - x0)) * w;
    }
    double py(double y) const {
        const double h = kHeight - kTop - kBottom;
        return kTop + h - (y1 == y0 ? 0.5 : (y - y0) / (y1 - y0)) * h;
    }
};

void header(std::ostringstream& o, const std::string& title, const std::string& note) {
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    if (!note.empty()) o << "<!-- " << escape(note) << " -->\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
}

void axes(std::ostringstream& o, const Frame& f, std::size_t points, const std::vector<std::string>& x_labels) {
    o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight << "\" height=\""
      << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
        o << "<line x1=\"" << kLeft - 4 << "\" x2=\"" << kLeft << "\" y1=\"" << num(f.py(y)) << "\" y2=\""
          << num(f.py(y)) << "\" stroke=\"#444\"/>";
        o << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(f.py(y) + 4) << "\" text-anchor=\"end\">"
          << tick_label(y) << "</text>\n";
    }
    if (!x_labels.empty() && points > 1) {
        for (int i = 0; i <= 4; ++i) {
            const auto idx = static_cast<std::size_t>(std::lround((points - 1) * i / 4.0));
            if (idx >= x_labels.size()) continue;
            o << "<text x=\"" << num(f.px(static_cast<double>(idx))) << "\" y=\"" << kHeight - kBottom + 18
              << "\" text-anchor=\"middle\">" << escape(x_labels[idx]) << "</text>\n";
        }
    }
}

void legend(std::ostringstream& o, const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double y = kTop + 14.0 * static_cast<double>(i);
        o << "<rect x=\"" << kWidth - kRight + 10 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\""
          << color(i) << "\"/>";
        o << "<text x=\"" << kWidth - kRight + 26 << "\" y=\"" << y + 9 << "\">" << escape(names[i]) << "</text>\n";
    }
}

}  // namespace

std::string line_chart(const std::string& title, const std::vector<Series>& series,
                       const std::vector<std::string>& x_labels, const std::string& note) {
    std::size_t points = 0;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : series) {
        points = std::max(points, s.values.size());
        for (double v : s.values) {
            if (!std::isfinite(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(lo <= hi)) lo = hi = 0.0;
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    const Frame f{0.0, static_cast<double>(std::max<std::size_t>(points, 2) - 1), lo - pad, hi + pad};
    std::ostringstream o;
    header(o, title, note);
    axes(o, f, points, x_labels);
    std::vector<std::string> names;
    for (std::size_t k = 0; k < series.size(); ++k) {
        names.push_back(series[k].name);
        o << "<polyline fill=\"none\" stroke=\"" << color(k) << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < series[k].values.size(); ++i) {
            const double v = series[k].values[i];
            if (!std::isfinite(v)) continue;
            o << num(f.px(static_cast<double>(i))) << ',' << num(f.py(v)) << ' ';
        }
        o << "\"/>\n";
    }
    legend(o, names);
    o << "</svg>\n";
    return o.str();
}

std::string stacked_area(const std::string& title, const Eigen::MatrixXd& weights,
                         const std::vector<std::string>& names, const std::vector<std::string>& x_labels,
                         const std::string& note) {
    const Eigen::Index t = weights.rows();
    const Eigen::Index n = weights.cols();
    const Eigen::MatrixXd pos = weights.cwiseMax(0.0);
    const Eigen::MatrixXd neg = weights.cwiseMin(0.0);
    double hi = t > 0 ? pos.rowwise().sum().maxCoeff() : 1.0;
    double lo = t > 0 ? neg.rowwise().sum().minCoeff() : 0.0;
    if (hi == lo) hi = lo + 1.0;
    const Frame f{0.0, static_cast<double>(std::max<Eigen::Index>(t, 2) - 1), lo, hi};
    std::ostringstream o;
    header(o, title, note);
    axes(o, f, static_cast<std::size_t>(t), x_labels);
    for (const Eigen::MatrixXd* part : {&pos, &neg}) {
        Eigen::VectorXd base = Eigen::VectorXd::Zero(t);
        for (Eigen::Index j = 0; j < n; ++j) {
            const Eigen::VectorXd top = base + part->col(j);
            if (part->col(j).cwiseAbs().maxCoeff() == 0.0) {
                base = top;
                continue;
            }
            o << "<polygon fill=\"" << color(static_cast<std::size_t>(j)) << "\" fill-opacity=\"0.85\" points=\"";
            for (Eigen::Index i = 0; i < t; ++i) o << num(f.px(static_cast<double>(i))) << ',' << num(f.py(top(i))) << ' ';
            for (Eigen::Index i = t - 1; i >= 0; --i) {
                o << num(f.px(static_cast<double>(i))) << ',' << num(f.py(base(i))) << ' ';
            }
            o << "\"/>\n";
            base = top;
        }
    }
    o << "<line x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << num(f.py(0.0)) << "\" y2=\""
      << num(f.py(0.0)) << "\" stroke=\"black\"/>\n";
    legend(o, names);
    o << "</svg>\n";
    return o.str();
}

std::string heatmap(const std::string& title, const std::string& x_name, const std::vector<double>& x,
                    const std::string& y_name, const std::vector<double>& y, const Eigen::MatrixXd& values,
                    int mark_x, int mark_y, const std::string& note) {
    double lo = INFINITY, hi = -INFINITY;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const double v = values.data()[i];
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(lo < hi)) hi = lo + 1.0;
    const double w = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(x.size(), 1));
    const double h = (kHeight - kTop - kBottom) / static_cast<double>(std::max<std::size_t>(y.size(), 1));
    std::ostringstream o;
    header(o, title, note);
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double v = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            std::string fill = "#cccccc";
            if (std::isfinite(v)) {
                // dark purple (low) to yellow (high)
                const double s = (v - lo) / (hi - lo);
                const int r = static_cast<int>(std::lround(68 + s * (253 - 68)));
                const int g = static_cast<int>(std::lround(1 + s * (231 - 1)));
                const int b = static_cast<int>(std::lround(84 + s * (37 - 84)));
                char buf[8];
                std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
                fill = buf;
            }
            const double px = kLeft + w * static_cast<double>(i);
            const double py = kHeight - kBottom - h * static_cast<double>(j + 1);
            o << "<rect x=\"" << num(px) << "\" y=\"" << num(py) << "\" width=\"" << num(w) << "\" height=\""
              << num(h) << "\" fill=\"" << fill << "\"/>\n";
        }
    }
    auto ticks = [&](const std::vector<double>& vals, bool horizontal) {
        const std::size_t step = std::max<std::size_t>(1, vals.size() / 6);
        for (std::size_t i = 0; i < vals.size(); i += step) {
            if (horizontal) {
                o << "<text x=\"" << num(kLeft + w * (static_cast<double>(i) + 0.5)) << "\" y=\""
                  << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">" << tick_label(vals[i]) << "</text>\n";
            } else {
                o << "<text x=\"" << kLeft - 6 << "\" y=\""
                  << num(kHeight - kBottom - h * (static_cast<double>(i) + 0.5) + 4) << "\" text-anchor=\"end\">"
                  << tick_label(vals[i]) << "</text>\n";
            }
        }
    };
    ticks(x, true);
    ticks(y, false);
    o << "<text x=\"" << (kWidth - kRight + kLeft) / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">"
      << escape(x_name) << "</text>\n";
    o << "<text x=\"16\" y=\"" << (kHeight) / 2 << "\" transform=\"rotate(-90 16 " << kHeight / 2
      << ")\" text-anchor=\"middle\">" << escape(y_name) << "</text>\n";
    if (mark_x >= 0 && mark_y >= 0) {
        const double cx = kLeft + w * (mark_x + 0.5);
        const double cy = kHeight - kBottom - h * (mark_y + 0.5);
        o << "<text x=\"" << num(cx) << "\" y=\"" << num(cy + 6) << "\" text-anchor=\"middle\" font-size=\"18\" "
          << "fill=\"red\">&#9733;</text>\n";
    }
    o << "<text x=\"" << kWidth - kRight + 10 << "\" y=\"" << kTop + 10 << "\">max " << tick_label(hi) << "</text>\n";
    o << "<text x=\"" << kWidth - kRight + 10 << "\" y=\"" << kTop + 26 << "\">min " << tick_label(lo) << "</text>\n";
    o << "</svg>\n";
    return o.str();
}

}  // namespace stratport::plot
