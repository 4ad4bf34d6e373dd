#include "plot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include "evoae/error.hpp"

namespace evoae::app {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

struct Range {
    double lo, hi;
};

Range axis_range(const std::vector<FrontPoint>& pts, std::size_t k) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& p : pts) {
        lo = std::min(lo, p.objectives[k]);
        hi = std::max(hi, p.objectives[k]);
    }
    if (pts.empty()) return {0.0, 1.0};
    if (hi - lo < 1e-12) return {lo - 0.5, hi + 0.5};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

} // namespace

std::vector<FrontPoint> read_front_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path.string() + ": cannot open");
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
    const auto header = split(line, ',');
    std::vector<std::size_t> f_cols;
    std::size_t feasible_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i].size() > 1 && header[i][0] == 'f' && std::isdigit(static_cast<unsigned char>(header[i][1])))
            f_cols.push_back(i);
        if (header[i] == "feasible") feasible_col = i;
    }
    if (f_cols.size() < 2) throw FormatError(path.string() + ": need at least two objective columns");

    std::vector<FrontPoint> points;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size())
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
        FrontPoint p;
        try {
            for (auto c : f_cols) p.objectives.push_back(std::stod(cells[c]));
        } catch (const std::exception&) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad number");
        }
        if (feasible_col < cells.size()) p.feasible = cells[feasible_col] == "1" || cells[feasible_col] == "true";
        points.push_back(std::move(p));
    }
    return points;
}

std::string front_svg(const std::vector<FrontPoint>& points, const std::vector<std::string>& axis_names) {
    std::size_t n_obj = points.empty() ? 2 : points.front().objectives.size();
    std::vector<std::pair<std::size_t, std::size_t>> panels;
    if (n_obj <= 2)
        panels = {{0, 1}};
    else
        panels = {{0, 1}, {0, 2}, {1, 2}};

    auto name = [&](std::size_t k) {
        return k < axis_names.size() ? axis_names[k] : "f" + std::to_string(k + 1);
    };

    constexpr double pw = 360, ph = 320, ml = 70, mr = 20, mt = 20, mb = 50;
    const double total_w = panels.size() * (pw + ml + mr);
    const double total_h = ph + mt + mb;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_w << "\" height=\"" << total_h
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const auto [a, b] = panels[pi];
        const Range rx = axis_range(points, a), ry = axis_range(points, b);
        const double ox = pi * (pw + ml + mr) + ml, oy = mt;
        auto sx = [&](double v) { return ox + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
        auto sy = [&](double v) { return oy + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph; };

        svg << "<g class=\"panel\" data-x=\"" << name(a) << "\" data-y=\"" << name(b) << "\" data-xmin=\""
            << rx.lo << "\" data-xmax=\"" << rx.hi << "\" data-ymin=\"" << ry.lo << "\" data-ymax=\"" << ry.hi
            << "\">\n";
        svg << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << pw << "\" height=\"" << ph
            << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int t = 0; t <= 4; ++t) {
            const double fx = rx.lo + (rx.hi - rx.lo) * t / 4.0;
            const double fy = ry.lo + (ry.hi - ry.lo) * t / 4.0;
            svg << "<text x=\"" << sx(fx) << "\" y=\"" << oy + ph + 14 << "\" text-anchor=\"middle\">" << fmt(fx)
                << "</text>\n";
            svg << "<text x=\"" << ox - 6 << "\" y=\"" << sy(fy) + 4 << "\" text-anchor=\"end\">" << fmt(fy)
                << "</text>\n";
        }
        svg << "<text x=\"" << ox + pw / 2 << "\" y=\"" << oy + ph + 36 << "\" text-anchor=\"middle\">" << name(a)
            << "</text>\n";
        svg << "<text transform=\"translate(" << ox - 52 << "," << oy + ph / 2
            << ") rotate(-90)\" text-anchor=\"middle\">" << name(b) << "</text>\n";
        for (const auto& p : points) {
            svg << "<circle cx=\"" << sx(p.objectives[a]) << "\" cy=\"" << sy(p.objectives[b]) << "\" r=\"3\" ";
            if (p.feasible)
                svg << "fill=\"#1f77b4\"/>\n";
            else
                svg << "fill=\"none\" stroke=\"#d62728\"/>\n";
        }
        svg << "</g>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_front_svg(const std::vector<FrontPoint>& points, const std::filesystem::path& path,
                     const std::vector<std::string>& axis_names) {
    std::ofstream out(path);
    if (!out) throw FormatError(path.string() + ": cannot write");
    out << front_svg(points, axis_names);
}

} // namespace evoae::app
