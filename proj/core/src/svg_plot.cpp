#include "metamap/svg_plot.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace metamap::svg {

namespace {

constexpr int kMarginLeft = 78;
constexpr int kMarginRight = 170;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 56;

std::string escape(const std::string& s) {
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

struct Axis {
    bool log = false;
    double lo = 0.0;
    double hi = 1.0;

    double t(double v) const { return log ? std::log10(v) : v; }
    double frac(double v) const { return (t(v) - lo) / (hi - lo); }

    std::vector<double> ticks() const {
        std::vector<double> out;
        if (log) {
            for (double e = std::floor(lo); e <= std::ceil(hi) + 1e-9; e += 1.0)
                if (e >= lo - 1e-9 && e <= hi + 1e-9) out.push_back(std::pow(10.0, e));
            return out;
        }
        const double span = hi - lo;
        const double raw = span / 5.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        for (double m : {1.0, 2.0, 5.0, 10.0})
            if (m * mag >= raw) {
                step = m * mag;
                break;
            }
        for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step) out.push_back(v);
        return out;
    }
};

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }

Axis make_axis(bool log, const std::vector<Series>& series, bool use_x) {
    Axis a;
    a.log = log;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : series) {
        const auto& v = use_x ? s.x : s.y;
        for (std::size_t i = 0; i < v.size() && i < s.x.size() && i < s.y.size(); ++i)
            if (usable(s.x[i], use_x && log) && usable(s.y[i], !use_x && log) && usable(v[i], log)) {
                lo = std::min(lo, a.t(v[i]));
                hi = std::max(hi, a.t(v[i]));
            }
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    } else if (!log) {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    } else {
        lo = std::floor(lo * 4.0) / 4.0;
        hi = std::ceil(hi * 4.0) / 4.0;
    }
    a.lo = lo;
    a.hi = hi;
    return a;
}

}  // namespace

std::string render(const Plot& plot, const std::vector<Series>& series) {
    const int w = plot.width;
    const int h = plot.height;
    const double pw = w - kMarginLeft - kMarginRight;
    const double ph = h - kMarginTop - kMarginBottom;
    const Axis ax = make_axis(plot.log_x, series, true);
    const Axis ay = make_axis(plot.log_y, series, false);
    auto px = [&](double v) { return kMarginLeft + ax.frac(v) * pw; };
    auto py = [&](double v) { return kMarginTop + (1.0 - ay.frac(v)) * ph; };

    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        w, h, w, h);
    out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", w, h);
    out += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                       kMarginLeft + pw / 2, escape(plot.title));
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"#333\"/>\n",
                       kMarginLeft, kMarginTop, pw, ph);

    for (double t : ax.ticks()) {
        const double x = px(t);
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#ddd\"/>\n", x,
                           static_cast<double>(kMarginTop), kMarginTop + ph);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.4g}</text>\n", x,
                           kMarginTop + ph + 16, t);
    }
    for (double t : ay.ticks()) {
        const double y = py(t);
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#ddd\"/>\n",
                           static_cast<double>(kMarginLeft), y, kMarginLeft + pw);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.4g}</text>\n", kMarginLeft - 6.0,
                           y + 4, t);
    }
    out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kMarginLeft + pw / 2, h - 14,
                       escape(plot.x_label));
    out += fmt::format(
        "<text x=\"18\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2f})\">{}</text>\n",
        kMarginTop + ph / 2, kMarginTop + ph / 2, escape(plot.y_label));

    int legend_row = 0;
    for (const auto& s : series) {
        std::string pts;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!usable(s.x[i], plot.log_x) || !usable(s.y[i], plot.log_y)) continue;
            pts += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
            if (s.markers)
                out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(s.x[i]),
                                   py(s.y[i]), s.color);
        }
        if (!pts.empty()) pts.pop_back();
        out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", s.color, pts);
        const double ly = kMarginTop + 12 + 18 * legend_row++;
        const double lx = kMarginLeft + pw + 12;
        out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                           lx, ly, lx + 22, ly, s.color);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", lx + 28, ly + 4, escape(s.label));
    }
    out += "</svg>\n";
    return out;
}

}  // namespace metamap::svg
