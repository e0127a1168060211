#include "layoutforge/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>

namespace layoutforge {

namespace {

constexpr double kMargin = 20.0;
constexpr double kScale = 5.0;  // px per cm
constexpr double kInset = 1.5;  // px per stack level

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00") s = "0.00";
    return s;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

bool rests_on(const Aabb& top, const Aabb& bottom) {
    const double eps = 1e-9 * std::max(1.0, std::abs(bottom.max.z));
    return footprint_overlap_area(top, bottom) > 0.0 && top.min.z >= bottom.max.z - eps && top.min.z > bottom.min.z;
}

}  // namespace

std::map<std::string, int> stack_depths(const Layout& layout) {
    std::vector<std::string> names;
    for (const auto& [name, _] : layout.boxes) names.push_back(name);
    std::stable_sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
        return layout.boxes.at(a).min.z < layout.boxes.at(b).min.z;
    });
    std::map<std::string, int> depth;
    for (const auto& name : names) {
        const Aabb& box = layout.boxes.at(name);
        int d = 0;
        for (const auto& [other, level] : depth) {
            if (rests_on(box, layout.boxes.at(other))) d = std::max(d, level + 1);
        }
        depth[name] = d;
    }
    return depth;
}

std::vector<std::string> draw_order(const Layout& layout) {
    const auto depth = stack_depths(layout);
    std::vector<std::string> order;
    for (const auto& [name, _] : depth) order.push_back(name);
    std::stable_sort(order.begin(), order.end(),
                     [&](const std::string& a, const std::string& b) { return depth.at(a) < depth.at(b); });
    return order;
}

std::string render_svg(const Layout& layout, const Boundary& boundary) {
    const double w = boundary.width * kScale;
    const double h = boundary.depth * kScale;
    const double far_y = boundary.origin_y + boundary.depth;
    auto sx = [&](double x) { return kMargin + (x - boundary.origin_x) * kScale; };
    auto sy = [&](double y) { return kMargin + (far_y - y) * kScale; };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w + 2 * kMargin) + "\" height=\"" +
           num(h + 2 * kMargin) + "\" viewBox=\"0 0 " + num(w + 2 * kMargin) + " " + num(h + 2 * kMargin) + "\">\n";
    out += "  <rect class=\"boundary\" x=\"" + num(kMargin) + "\" y=\"" + num(kMargin) + "\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" fill=\"#f4efe6\" stroke=\"#555555\" stroke-width=\"2\"/>\n";

    const auto depth = stack_depths(layout);
    for (const auto& name : draw_order(layout)) {
        const Aabb& b = layout.boxes.at(name);
        const int d = depth.at(name);
        const double inset = kInset * d;
        const double x0 = sx(b.min.x) + inset;
        const double y0 = sy(b.max.y) + inset;
        const double rw = std::max(0.0, (b.max.x - b.min.x) * kScale - 2 * inset);
        const double rh = std::max(0.0, (b.max.y - b.min.y) * kScale - 2 * inset);
        out += "  <g class=\"object\" data-depth=\"" + std::to_string(d) + "\">\n";
        out += "    <rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(rw) + "\" height=\"" + num(rh) +
               "\" fill=\"" + (d == 0 ? "#cfe0f3" : "#f3dccf") + "\" fill-opacity=\"0.85\" stroke=\"#2b4a6f\"" +
               (d == 0 ? "" : " stroke-dasharray=\"4 2\"") + "/>\n";
        out += "    <text x=\"" + num(x0 + rw / 2) + "\" y=\"" + num(y0 + rh / 2) +
               "\" font-size=\"10\" text-anchor=\"middle\" dominant-baseline=\"middle\">" + escape(name) + "</text>\n";
        out += "  </g>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace layoutforge
