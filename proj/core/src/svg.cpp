#include "ntdpc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace ntdpc {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void take(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (!(lo < hi)) {
            lo -= 1.0;
            hi += 1.0;
        }
        const double margin = 0.05 * (hi - lo);
        lo -= margin;
        hi += margin;
    }
};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void emit_svg(const PlotSpec& spec, const CsvData& data, const std::filesystem::path& out_path) {
    require(!spec.series.empty(), "emit_svg: plot has no series");

    struct SeriesData {
        std::vector<double> x, y, band;
    };
    std::vector<SeriesData> all;
    Range rx, ry;
    for (const SvgSeries& s : spec.series) {
        SeriesData d;
        d.x = data.numeric(s.x_column);
        d.y = data.numeric(s.y_column);
        if (!s.band_column.empty()) d.band = data.numeric(s.band_column);
        for (std::size_t i = 0; i < d.x.size(); ++i) {
            rx.take(d.x[i]);
            const double b = d.band.empty() ? 0.0 : d.band[i];
            ry.take(d.y[i] - b);
            ry.take(d.y[i] + b);
        }
        all.push_back(std::move(d));
    }
    for (double h : spec.h_ref_lines) ry.take(h);
    rx.pad();
    ry.pad();

    const double ml = 64, mr = 16, mt = 36, mb = 46;
    const double pw = spec.width - ml - mr;
    const double ph = spec.height - mt - mb;
    auto px = [&](double x) { return ml + (x - rx.lo) / (rx.hi - rx.lo) * pw; };
    auto py = [&](double y) { return mt + (ry.hi - y) / (ry.hi - ry.lo) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
       << spec.height << "\" viewBox=\"0 0 " << spec.width << " " << spec.height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << fmt(spec.width / 2.0) << "\" y=\"20\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"14\">"
       << escape(spec.title) << "</text>\n";

    // axes box and ticks
    os << "<rect x=\"" << fmt(ml) << "\" y=\"" << fmt(mt) << "\" width=\"" << fmt(pw)
       << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double xv = rx.lo + t * (rx.hi - rx.lo) / 5.0;
        const double yv = ry.lo + t * (ry.hi - ry.lo) / 5.0;
        os << "<line x1=\"" << fmt(px(xv)) << "\" y1=\"" << fmt(mt + ph) << "\" x2=\""
           << fmt(px(xv)) << "\" y2=\"" << fmt(mt + ph + 4) << "\" stroke=\"#444\"/>\n";
        os << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << fmt(mt + ph + 18)
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(xv)
           << "</text>\n";
        os << "<line x1=\"" << fmt(ml - 4) << "\" y1=\"" << fmt(py(yv)) << "\" x2=\"" << fmt(ml)
           << "\" y2=\"" << fmt(py(yv)) << "\" stroke=\"#444\"/>\n";
        os << "<text x=\"" << fmt(ml - 8) << "\" y=\"" << fmt(py(yv) + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(yv)
           << "</text>\n";
    }
    os << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"" << fmt(spec.height - 8.0)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << escape(spec.x_label) << "</text>\n";
    os << "<text x=\"14\" y=\"" << fmt(mt + ph / 2)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 "
       << fmt(mt + ph / 2) << ")\">" << escape(spec.y_label) << "</text>\n";

    for (double h : spec.h_ref_lines) {
        os << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(py(h)) << "\" x2=\"" << fmt(ml + pw)
           << "\" y2=\"" << fmt(py(h)) << "\" stroke=\"#888\" stroke-dasharray=\"6 4\"/>\n";
    }

    // bands first so every mean line stays visible
    for (std::size_t si = 0; si < all.size(); ++si) {
        const auto& d = all[si];
        if (d.band.empty()) continue;
        os << "<polygon fill=\"" << spec.series[si].color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < d.x.size(); ++i) {
            os << fmt(px(d.x[i])) << ',' << fmt(py(d.y[i] + d.band[i])) << ' ';
        }
        for (std::size_t i = d.x.size(); i-- > 0;) {
            os << fmt(px(d.x[i])) << ',' << fmt(py(d.y[i] - d.band[i]));
            if (i) os << ' ';
        }
        os << "\"/>\n";
    }
    for (std::size_t si = 0; si < all.size(); ++si) {
        const auto& d = all[si];
        os << "<polyline fill=\"none\" stroke=\"" << spec.series[si].color
           << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < d.x.size(); ++i) {
            if (i) os << ' ';
            os << fmt(px(d.x[i])) << ',' << fmt(py(d.y[i]));
        }
        os << "\"/>\n";
    }
    for (std::size_t si = 0; si < all.size(); ++si) {
        if (spec.series[si].label.empty()) continue;
        const double ly = mt + 16 + 16.0 * static_cast<double>(si);
        os << "<line x1=\"" << fmt(ml + pw - 120) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
           << fmt(ml + pw - 96) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\""
           << spec.series[si].color << "\" stroke-width=\"1.5\"/>\n";
        os << "<text x=\"" << fmt(ml + pw - 90) << "\" y=\"" << fmt(ly)
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(spec.series[si].label)
           << "</text>\n";
    }
    os << "</svg>\n";

    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw std::runtime_error("emit_svg: cannot open " + out_path.string());
    file << os.str();
    if (!file) throw std::runtime_error("emit_svg: write to " + out_path.string() + " failed");
}

void emit_svg_from_csv(const PlotSpec& spec, const std::filesystem::path& csv_path,
                       const std::filesystem::path& out_path) {
    emit_svg(spec, read_csv(csv_path), out_path);
}

}  // namespace ntdpc
