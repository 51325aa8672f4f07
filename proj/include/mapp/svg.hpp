#pragma once

// Minimal deterministic SVG charts for experiment reports. Output bytes
// depend only on the input values.

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "mapp/eval.hpp"

namespace mapp::svg {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

namespace detail {

inline constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;
inline const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#7f7f7f"};

inline std::string num(double v) { return format_real(v, 2); }

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Frame {
    double x0, x1, y0 = 0, y1 = 1;
    double px(double x) const { return kLeft + (x1 > x0 ? (x - x0) / (x1 - x0) : 0.5) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

inline void open(std::ostringstream& o, const std::string& title, const std::string& xlabel,
                 const std::string& ylabel) {
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(kWidth / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
    o << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num(kHeight - 10)
      << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n";
    o << "<text x=\"15\" y=\"" << num(kHeight / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
      << num(kHeight / 2) << ")\">" << escape(ylabel) << "</text>\n";
}

inline void axes(std::ostringstream& o, const Frame& f) {
    const double xl = kLeft, xr = kWidth - kRight, yb = kHeight - kBottom, yt = kTop;
    o << "<line x1=\"" << num(xl) << "\" y1=\"" << num(yb) << "\" x2=\"" << num(xr) << "\" y2=\"" << num(yb)
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << num(xl) << "\" y1=\"" << num(yb) << "\" x2=\"" << num(xl) << "\" y2=\"" << num(yt)
      << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
        o << "<text x=\"" << num(xl - 6) << "\" y=\"" << num(f.py(y) + 4) << "\" text-anchor=\"end\">" << num(y)
          << "</text>\n";
    }
}

inline void legend(std::ostringstream& o, const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double y = kTop + 10 + 18.0 * double(i);
        o << "<rect x=\"" << num(kWidth - kRight + 15) << "\" y=\"" << num(y - 9) << "\" width=\"10\" height=\"10\" fill=\""
          << kPalette[i % std::size(kPalette)] << "\"/>\n";
        o << "<text x=\"" << num(kWidth - kRight + 30) << "\" y=\"" << num(y) << "\">" << escape(names[i])
          << "</text>\n";
    }
}

inline void empty_note(std::ostringstream& o) {
    o << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num(kHeight / 2)
      << "\" text-anchor=\"middle\" fill=\"#888\">no data</text>\n";
}

}  // namespace detail

/// Accuracy-style line chart; y runs from 0 to 1.
inline std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<Series>& series) {
    std::ostringstream o;
    detail::open(o, title, xlabel, ylabel);
    double x0 = 0, x1 = 1;
    bool any = false;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            x0 = any ? std::min(x0, x) : x;
            x1 = any ? std::max(x1, x) : x;
            any = true;
        }
    const detail::Frame f{x0, x1};
    detail::axes(o, f);
    if (!any) detail::empty_note(o);
    std::vector<double> ticks;
    for (const auto& s : series)
        for (const auto& p : s.points) ticks.push_back(p.first);
    std::sort(ticks.begin(), ticks.end());
    ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
    for (double x : ticks)
        o << "<text x=\"" << detail::num(f.px(x)) << "\" y=\"" << detail::num(detail::kHeight - detail::kBottom + 16)
          << "\" text-anchor=\"middle\" font-size=\"10\">" << detail::num(x) << "</text>\n";
    std::vector<std::string> names;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        names.push_back(s.name);
        const char* color = detail::kPalette[i % std::size(detail::kPalette)];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t k = 0; k < s.points.size(); ++k)
            o << (k ? " " : "") << detail::num(f.px(s.points[k].first)) << ',' << detail::num(f.py(s.points[k].second));
        o << "\"/>\n";
        for (const auto& [x, y] : s.points)
            o << "<circle cx=\"" << detail::num(f.px(x)) << "\" cy=\"" << detail::num(f.py(y)) << "\" r=\"3\" fill=\""
              << color << "\"/>\n";
    }
    detail::legend(o, names);
    o << "</svg>\n";
    return o.str();
}

/// One bar per label; y runs from 0 to 1.
inline std::string bar_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                             const std::vector<std::pair<std::string, double>>& bars) {
    std::ostringstream o;
    detail::open(o, title, xlabel, ylabel);
    const detail::Frame f{0, 1};
    detail::axes(o, f);
    if (bars.empty()) detail::empty_note(o);
    const double span = detail::kWidth - detail::kLeft - detail::kRight;
    const double slot = bars.empty() ? span : span / double(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const double x = detail::kLeft + slot * double(i) + slot * 0.15;
        const double top = f.py(bars[i].second), base = f.py(0);
        o << "<rect class=\"bar\" x=\"" << detail::num(x) << "\" y=\"" << detail::num(top) << "\" width=\""
          << detail::num(slot * 0.7) << "\" height=\"" << detail::num(base - top) << "\" fill=\"" << detail::kPalette[0]
          << "\"/>\n";
        o << "<text x=\"" << detail::num(x + slot * 0.35) << "\" y=\"" << detail::num(base + 16)
          << "\" text-anchor=\"middle\">" << detail::escape(bars[i].first) << "</text>\n";
        o << "<text x=\"" << detail::num(x + slot * 0.35) << "\" y=\"" << detail::num(top - 4)
          << "\" text-anchor=\"middle\" font-size=\"10\">" << detail::num(bars[i].second) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

/// Stacked proportions (each column sums to at most 1) over an x grid.
inline std::string stacked_chart(const std::string& title, const std::string& xlabel, const std::vector<double>& xs,
                                 const std::vector<Series>& layers) {
    std::ostringstream o;
    detail::open(o, title, xlabel, "proportion");
    const detail::Frame f{xs.empty() ? 0 : xs.front(), xs.empty() ? 1 : xs.back()};
    detail::axes(o, f);
    if (xs.empty()) detail::empty_note(o);
    std::vector<double> base(xs.size(), 0.0);
    std::vector<std::string> names;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        names.push_back(layers[l].name);
        std::vector<double> top = base;
        for (std::size_t i = 0; i < xs.size() && i < layers[l].points.size(); ++i) top[i] += layers[l].points[i].second;
        o << "<polygon fill=\"" << detail::kPalette[l % std::size(detail::kPalette)] << "\" fill-opacity=\"0.8\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i)
            o << (i ? " " : "") << detail::num(f.px(xs[i])) << ',' << detail::num(f.py(top[i]));
        for (std::size_t i = xs.size(); i-- > 0;) o << ' ' << detail::num(f.px(xs[i])) << ',' << detail::num(f.py(base[i]));
        o << "\"/>\n";
        base = std::move(top);
    }
    for (double x : xs)
        o << "<text x=\"" << detail::num(f.px(x)) << "\" y=\"" << detail::num(detail::kHeight - detail::kBottom + 16)
          << "\" text-anchor=\"middle\" font-size=\"10\">" << detail::num(x) << "</text>\n";
    detail::legend(o, names);
    o << "</svg>\n";
    return o.str();
}

/// Reads a metrics CSV written by write_metrics_csv.
inline std::vector<MetricRow> read_metrics_csv(std::istream& in) {
    std::vector<MetricRow> rows;
    std::string line;
    if (!std::getline(in, line)) return rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        MetricRow r;
        const auto q1 = line.find('"'), q2 = line.find('"', q1 + 1);
        if (q1 == std::string::npos || q2 == std::string::npos) throw FormatError("malformed metrics row: " + line);
        r.condition = line.substr(0, q1 - 1);
        r.group = line.substr(q1 + 1, q2 - q1 - 1);
        std::stringstream rest(line.substr(q2 + 2));
        std::string field;
        std::getline(rest, field, ',');
        r.k = std::stoul(field);
        std::getline(rest, field, ',');
        r.numerator = std::stoul(field);
        std::getline(rest, field, ',');
        r.denominator = std::stoul(field);
        rows.push_back(r);
    }
    return rows;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

}  // namespace mapp::svg
