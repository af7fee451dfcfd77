#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace cdp::svg {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
    std::vector<double> error;  ///< optional symmetric y error bars
};

struct Axes {
    std::string title, xlabel, ylabel;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

/// Minimal line plot: frame, 5 ticks per axis, one polyline per series.
inline std::string line_plot(const Axes& ax, const std::vector<Series>& series) {
    constexpr double W = 520, H = 400, L = 60, R = 20, T = 40, B = 50;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
    const double xspan = ax.xmax > ax.xmin ? ax.xmax - ax.xmin : 1.0;
    const double yspan = ax.ymax > ax.ymin ? ax.ymax - ax.ymin : 1.0;
    auto px = [&](double x) { return L + (std::clamp(x, ax.xmin, ax.xmax) - ax.xmin) / xspan * (W - L - R); };
    auto py = [&](double y) { return H - B - (std::clamp(y, ax.ymin, ax.ymax) - ax.ymin) / yspan * (H - T - B); };
    using detail::num;

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) +
                    "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + num(W) + "\" height=\"" + num(H) + "\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" + detail::escape(ax.title) + "</text>\n";
    s += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(W - L - R) + "\" height=\"" + num(H - T - B) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = ax.xmin + xspan * i / 4.0, yv = ax.ymin + yspan * i / 4.0;
        s += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(H - B + 15) + "\" text-anchor=\"middle\">" + detail::tick(xv) + "</text>\n";
        s += "<text x=\"" + num(L - 5) + "\" y=\"" + num(py(yv) + 4) + "\" text-anchor=\"end\">" + detail::tick(yv) + "</text>\n";
    }
    s += "<text x=\"" + num((L + W - R) / 2) + "\" y=\"" + num(H - 12) + "\" text-anchor=\"middle\">" + detail::escape(ax.xlabel) + "</text>\n";
    s += "<text x=\"15\" y=\"" + num((T + H - B) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
         num((T + H - B) / 2) + ")\">" + detail::escape(ax.ylabel) + "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& ser = series[k];
        const char* color = colors[k % std::size(colors)];
        std::string pts;
        for (const auto& [x, y] : ser.points) pts += num(px(x)) + "," + num(py(y)) + " ";
        s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        for (std::size_t i = 0; i < ser.error.size() && i < ser.points.size(); ++i) {
            const auto [x, y] = ser.points[i];
            s += "<line x1=\"" + num(px(x)) + "\" x2=\"" + num(px(x)) + "\" y1=\"" + num(py(y - ser.error[i])) + "\" y2=\"" +
                 num(py(y + ser.error[i])) + "\" stroke=\"" + color + "\"/>\n";
        }
        const double ly = T + 15 + 14.0 * static_cast<double>(k);
        s += "<line x1=\"" + num(W - R - 120) + "\" x2=\"" + num(W - R - 100) + "\" y1=\"" + num(ly) + "\" y2=\"" + num(ly) +
             "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + num(W - R - 95) + "\" y=\"" + num(ly + 4) + "\">" + detail::escape(ser.label) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace cdp::svg
