#include "snecl/plot.hpp"

#include "snecl/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace snecl {

std::string to_string(PlotKind k) {
    switch (k) {
    case PlotKind::scatter2d: return "scatter2d";
    case PlotKind::line: return "line";
    case PlotKind::heatmap: return "heatmap";
    }
    return "scatter2d";
}

PlotKind parse_plot_kind(const std::string& name) {
    if (name == "scatter2d" || name == "scatter") return PlotKind::scatter2d;
    if (name == "line") return PlotKind::line;
    if (name == "heatmap") return PlotKind::heatmap;
    throw ValidationError("unknown plot kind '" + name + "' (expected scatter2d, line or heatmap)");
}

namespace {

constexpr double canvas = 480.0;
constexpr double margin = 48.0;

constexpr std::array<const char*, 10> palette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                                 "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

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

struct Range {
    double lo = 0.0;
    double hi = 1.0;

    static Range of(const std::vector<double>& v) {
        Range r{*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
        if (r.hi - r.lo < 1e-12) {
            r.lo -= 1.0;
            r.hi += 1.0;
        }
        const double pad = 0.05 * (r.hi - r.lo);
        return {r.lo - pad, r.hi + pad};
    }
};

struct Mapping {
    Range x;
    Range y;
    double px(double v) const { return margin + (v - x.lo) / (x.hi - x.lo) * (canvas - 2 * margin); }
    double py(double v) const { return canvas - margin - (v - y.lo) / (y.hi - y.lo) * (canvas - 2 * margin); }
};

void open_svg(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << canvas << "\" height=\"" << canvas
       << "\" viewBox=\"0 0 " << canvas << ' ' << canvas << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << canvas << "\" height=\"" << canvas << "\" fill=\"white\"/>\n";
    if (!title.empty()) {
        os << "<text x=\"" << canvas / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
           << escape(title) << "</text>\n";
    }
}

void axes(std::ostringstream& os, const Mapping& m, const std::string& xlabel, const std::string& ylabel) {
    os << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << canvas - 2 * margin
       << "\" height=\"" << canvas - 2 * margin << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << margin << "\" y=\"" << canvas - margin + 16 << "\" font-size=\"10\">"
       << num(m.x.lo) << "</text>\n";
    os << "<text x=\"" << canvas - margin << "\" y=\"" << canvas - margin + 16
       << "\" font-size=\"10\" text-anchor=\"end\">" << num(m.x.hi) << "</text>\n";
    os << "<text x=\"" << margin - 4 << "\" y=\"" << canvas - margin << "\" font-size=\"10\" text-anchor=\"end\">"
       << num(m.y.lo) << "</text>\n";
    os << "<text x=\"" << margin - 4 << "\" y=\"" << margin + 10 << "\" font-size=\"10\" text-anchor=\"end\">"
       << num(m.y.hi) << "</text>\n";
    os << "<text x=\"" << canvas / 2 << "\" y=\"" << canvas - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << escape(xlabel) << "</text>\n";
    os << "<text x=\"14\" y=\"" << canvas / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
       << canvas / 2 << ")\">" << escape(ylabel) << "</text>\n";
}

std::vector<double> column_values(const CsvTable& t, std::size_t j) {
    std::vector<double> v;
    v.reserve(t.rows.size());
    for (const auto& row : t.rows) v.push_back(row[j]);
    return v;
}

std::string scatter(const CsvTable& t, const std::string& title) {
    if (t.header.size() < 2) throw FormatError("scatter2d needs at least two columns");
    const bool labeled = t.has_column("label");
    const std::size_t label_col = labeled ? t.column("label") : 0;
    std::size_t cx = 0;
    while (labeled && cx == label_col) ++cx;
    std::size_t cy = cx + 1;
    while (labeled && cy == label_col) ++cy;
    if (cy >= t.header.size()) throw FormatError("scatter2d needs two coordinate columns");

    const Mapping m{Range::of(column_values(t, cx)), Range::of(column_values(t, cy))};
    std::ostringstream os;
    open_svg(os, title);
    axes(os, m, t.header[cx], t.header[cy]);
    for (const auto& row : t.rows) {
        const int label = labeled ? static_cast<int>(row[label_col]) : 0;
        const char* colour = palette[static_cast<std::size_t>(std::abs(label)) % palette.size()];
        os << "<circle cx=\"" << num(m.px(row[cx])) << "\" cy=\"" << num(m.py(row[cy]))
           << "\" r=\"3\" fill=\"" << colour << "\" fill-opacity=\"0.8\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string lines(const CsvTable& t, const std::string& title) {
    if (t.header.size() < 2) throw FormatError("line plot needs an x column and at least one series");
    std::vector<double> ys;
    for (const auto& row : t.rows) ys.insert(ys.end(), row.begin() + 1, row.end());
    const Mapping m{Range::of(column_values(t, 0)), Range::of(ys)};
    std::ostringstream os;
    open_svg(os, title);
    axes(os, m, t.header[0], t.header.size() == 2 ? t.header[1] : "value");
    for (std::size_t s = 1; s < t.header.size(); ++s) {
        const char* colour = palette[(s - 1) % palette.size()];
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            os << (i ? " " : "") << num(m.px(t.rows[i][0])) << ',' << num(m.py(t.rows[i][s]));
        }
        os << "\"/>\n";
        os << "<text x=\"" << canvas - margin - 4 << "\" y=\"" << margin + 14 * static_cast<double>(s)
           << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << colour << "\">" << escape(t.header[s])
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// Diverging blue-white-red ramp over [-1, 1].
std::string heat_colour(double v) {
    const double c = std::clamp(v, -1.0, 1.0);
    int r = 255;
    int g = 255;
    int b = 255;
    if (c >= 0) {
        g = b = static_cast<int>(std::lround(255.0 * (1.0 - c)));
    } else {
        r = g = static_cast<int>(std::lround(255.0 * (1.0 + c)));
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

std::string heatmap(const CsvTable& t, const std::string& title) {
    const std::size_t m = t.rows.size();
    if (t.header.size() != m + 1) {
        throw FormatError("heatmap CSV must be 'class,c0,...' with one row per class");
    }
    const double cell = (canvas - 2 * margin) / static_cast<double>(m);
    std::ostringstream os;
    open_svg(os, title);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double v = t.rows[i][j + 1];
            const double x = margin + cell * static_cast<double>(j);
            const double y = margin + cell * static_cast<double>(i);
            os << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cell)
               << "\" height=\"" << num(cell) << "\" fill=\"" << heat_colour(v) << "\" stroke=\"white\"/>\n";
            os << "<text x=\"" << num(x + cell / 2) << "\" y=\"" << num(y + cell / 2 + 4)
               << "\" text-anchor=\"middle\" font-size=\"11\">" << num(v) << "</text>\n";
        }
        os << "<text x=\"" << margin - 4 << "\" y=\"" << num(margin + cell * (static_cast<double>(i) + 0.5) + 4)
           << "\" text-anchor=\"end\" font-size=\"11\">" << i << "</text>\n";
        os << "<text x=\"" << num(margin + cell * (static_cast<double>(i) + 0.5)) << "\" y=\""
           << canvas - margin + 16 << "\" text-anchor=\"middle\" font-size=\"11\">" << i << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace

std::string render_svg(const CsvTable& table, PlotKind kind, const std::string& title) {
    if (table.rows.empty()) throw FormatError("cannot plot an empty CSV (no data rows)");
    switch (kind) {
    case PlotKind::scatter2d: return scatter(table, title);
    case PlotKind::line: return lines(table, title);
    case PlotKind::heatmap: return heatmap(table, title);
    }
    throw ValidationError("unsupported plot kind");
}

} // namespace snecl
