#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "chamberlens/error.hpp"
#include "chamberlens/ingest.hpp"

namespace chamberlens {

struct ScatterPoint {
    std::string label;
    double x = 0.0;
    double y = 0.0;
    std::optional<std::string> group; // colors layout nodes by community
};

struct ScatterStyle {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool labelled = true; // text label next to every point
    double radius = 6.0;
    std::optional<std::array<double, 4>> bounds; // x0, x1, y0, y1; data extent when absent
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

inline constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

} // namespace detail

/// Self-contained SVG scatter. Each point is one <circle class="point">,
/// so consumers can count data points by class. Output is a pure function
/// of the input.
inline std::string render_scatter(const std::vector<ScatterPoint>& points, const ScatterStyle& style) {
    constexpr double width = 640.0, height = 480.0, margin = 60.0;
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (style.bounds) {
        std::tie(x0, x1, y0, y1) = std::tuple((*style.bounds)[0], (*style.bounds)[1], (*style.bounds)[2], (*style.bounds)[3]);
    } else if (!points.empty()) {
        auto [xmin, xmax] = std::minmax_element(points.begin(), points.end(),
                                                [](const auto& a, const auto& b) { return a.x < b.x; });
        auto [ymin, ymax] = std::minmax_element(points.begin(), points.end(),
                                                [](const auto& a, const auto& b) { return a.y < b.y; });
        const double px = std::max(1e-9, (xmax->x - xmin->x) * 0.05);
        const double py = std::max(1e-9, (ymax->y - ymin->y) * 0.05);
        x0 = xmin->x - px;
        x1 = xmax->x + px;
        y0 = ymin->y - py;
        y1 = ymax->y + py;
    }
    auto sx = [&](double x) { return margin + (x - x0) / (x1 - x0) * (width - 2 * margin); };
    auto sy = [&](double y) { return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin); };

    std::map<std::string, std::size_t> colors;
    for (const auto& p : points) {
        if (p.group) {
            colors.try_emplace(*p.group, colors.size());
        }
    }

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n",
        width, height, width, height);
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += fmt::format("<text x=\"{:.1f}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n", width / 2,
                       detail::xml_escape(style.title));
    svg += fmt::format("<line class=\"axis\" x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"black\"/>\n",
                       margin, height - margin, width - margin);
    svg += fmt::format("<line class=\"axis\" x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n",
                       margin, height - margin, margin);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n", width / 2,
                       height - 20, detail::xml_escape(style.x_label));
    svg += fmt::format(
        "<text x=\"20\" y=\"{0:.1f}\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 20 {0:.1f})\">{1}</text>\n",
        height / 2, detail::xml_escape(style.y_label));
    for (const auto& [value, px] : {std::pair(x0, sx(x0)), std::pair(x1, sx(x1))}) {
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-size=\"10\">{:.3g}</text>\n", px,
                           height - margin + 14, value);
    }
    for (const auto& [value, py] : {std::pair(y0, sy(y0)), std::pair(y1, sy(y1))}) {
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\" font-size=\"10\">{:.3g}</text>\n",
                           margin - 4, py + 3, value);
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        const char* fill = p.group ? detail::kPalette[colors.at(*p.group) % detail::kPalette.size()]
                                   : detail::kPalette[i % detail::kPalette.size()];
        svg += fmt::format("<circle class=\"point\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{:.1f}\" fill=\"{}\"><title>{}</title></circle>\n",
                           sx(p.x), sy(p.y), style.radius, fill, detail::xml_escape(p.label));
        if (style.labelled) {
            svg += fmt::format("<text class=\"label\" x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"12\">{}</text>\n",
                               sx(p.x) + style.radius + 2, sy(p.y) - style.radius, detail::xml_escape(p.label));
        }
    }
    svg += "</svg>\n";
    return svg;
}

/// Points of the negativity/subjectivity scatter from a long-format
/// means.csv (community,feature,mean).
inline std::vector<ScatterPoint> means_points(std::istream& in) {
    detail::CsvReader reader(in);
    std::vector<std::string> row;
    if (!reader.next_row(row)) {
        throw FormatError("means CSV is empty");
    }
    const auto col = [&](const char* name) {
        const auto it = std::find(row.begin(), row.end(), name);
        if (it == row.end()) {
            throw FormatError(std::string("means CSV lacks column '") + name + "'");
        }
        return static_cast<std::size_t>(it - row.begin());
    };
    const auto c_comm = col("community"), c_feat = col("feature"), c_mean = col("mean");
    const auto width = row.size();
    std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> acc;
    std::vector<std::string> order;
    while (reader.next_row(row)) {
        if (row.size() == 1 && row[0].empty()) {
            continue;
        }
        if (row.size() != width) {
            throw FormatError("means CSV row has the wrong number of cells");
        }
        const auto& id = row[c_comm];
        if (!acc.contains(id)) {
            order.push_back(id);
        }
        auto& slot = acc[id];
        double value = 0.0;
        try {
            value = std::stod(row[c_mean]);
        } catch (const std::exception&) {
            throw FormatError("means CSV value '" + row[c_mean] + "' is not a number");
        }
        if (row[c_feat] == "neg") {
            slot.first = value;
        } else if (row[c_feat] == "subjectivity") {
            slot.second = value;
        }
    }
    std::vector<ScatterPoint> points;
    for (const auto& id : order) {
        const auto& [x, y] = acc.at(id);
        if (!x || !y) {
            throw FormatError("community '" + id + "' lacks neg or subjectivity means");
        }
        points.push_back({id, *x, *y, std::nullopt});
    }
    return points;
}

/// Points of a layout plot from layout.csv (user_id,x,y); `community_of`
/// colors nodes when given.
inline std::vector<ScatterPoint> layout_points(std::istream& in,
                                               const std::map<std::string, std::string>& community_of = {}) {
    detail::CsvReader reader(in);
    std::vector<std::string> row;
    if (!reader.next_row(row)) {
        throw FormatError("layout CSV is empty");
    }
    const auto col = [&](const char* name) {
        const auto it = std::find(row.begin(), row.end(), name);
        if (it == row.end()) {
            throw FormatError(std::string("layout CSV lacks column '") + name + "'");
        }
        return static_cast<std::size_t>(it - row.begin());
    };
    const auto c_user = col("user_id"), c_x = col("x"), c_y = col("y");
    const auto width = row.size();
    std::vector<ScatterPoint> points;
    while (reader.next_row(row)) {
        if (row.size() == 1 && row[0].empty()) {
            continue;
        }
        if (row.size() != width) {
            throw FormatError("layout CSV row has the wrong number of cells");
        }
        ScatterPoint p;
        p.label = row[c_user];
        try {
            p.x = std::stod(row[c_x]);
            p.y = std::stod(row[c_y]);
        } catch (const std::exception&) {
            throw FormatError("layout CSV coordinates for '" + p.label + "' are not numbers");
        }
        if (const auto it = community_of.find(p.label); it != community_of.end()) {
            p.group = it->second;
        } else if (!community_of.empty()) {
            p.group = "none";
        }
        points.push_back(std::move(p));
    }
    return points;
}

inline std::string plot_means_svg(const std::vector<ScatterPoint>& points) {
    ScatterStyle style;
    style.title = "Mean negativity vs mean subjectivity per community";
    style.x_label = "mean negativity";
    style.y_label = "mean subjectivity";
    style.bounds = std::array<double, 4>{0.0, 1.0, 0.0, 1.0};
    return render_scatter(points, style);
}

inline std::string plot_layout_svg(const std::vector<ScatterPoint>& points) {
    ScatterStyle style;
    style.title = "Reply graph layout";
    style.labelled = false;
    style.radius = 2.5;
    return render_scatter(points, style);
}

} // namespace chamberlens
