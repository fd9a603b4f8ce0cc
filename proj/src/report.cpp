#include "dfadapt/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "dfadapt/error.hpp"

namespace dfadapt {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

CsvTable& CsvTable::row(std::initializer_list<std::string> cells) { return row(std::vector<std::string>(cells)); }

CsvTable& CsvTable::row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw ContractViolation("CsvTable: row width does not match header");
    rows_.push_back(std::move(cells));
    return *this;
}

std::string CsvTable::str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(columns_);
    for (const auto& r : rows_) line(r);
    return out;
}

namespace {

// Sequential blue-to-yellow scale.
constexpr std::array<const char*, 16> kPalette = {
    "#30123b", "#3e378f", "#455bcd", "#437ef5", "#32a0fb", "#1ac2e0", "#1fdcb7", "#41ee89",
    "#7afa5b", "#a8fc3c", "#cbec34", "#e8d539", "#fab53a", "#fb8a23", "#ec5f10", "#d03a04"};

std::string svg(const Mesh& mesh, const std::vector<double>* values, const SvgOptions& opt) {
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (mesh.num_vertices() > 0) {
        x0 = y0 = std::numeric_limits<double>::infinity();
        x1 = y1 = -x0;
        for (const Vertex& v : mesh.vertices()) {
            x0 = std::min(x0, v.x.x());
            x1 = std::max(x1, v.x.x());
            y0 = std::min(y0, v.x.y());
            y1 = std::max(y1, v.x.y());
        }
    }
    const double margin = 10.0;
    const double legend_h = (values && opt.legend) ? 40.0 : 0.0;
    const double sx = (opt.width - 2 * margin) / std::max(x1 - x0, 1e-300);
    const double sy = (opt.height - 2 * margin - legend_h) / std::max(y1 - y0, 1e-300);
    const double s = std::min(sx, sy);
    auto px = [&](const Vec2& p) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f,%.3f", margin + (p.x() - x0) * s,
                      margin + (y1 - p.y()) * s);  // y axis up
        return std::string(buf);
    };

    double lo = 0.0, hi = 0.0;
    if (values && !values->empty()) {
        lo = *std::min_element(values->begin(), values->end());
        hi = *std::max_element(values->begin(), values->end());
    }

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
        << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<g stroke=\"black\" stroke-width=\"" << opt.stroke << "\">\n";
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const auto c = mesh.corners(t);
        out << "<polygon points=\"" << px(c[0]) << ' ' << px(c[1]) << ' ' << px(c[2]) << "\" fill=\"";
        if (values) {
            const int bin = colour_bin((*values)[t], lo, hi);
            out << kPalette[bin] << "\" data-bin=\"" << bin;
        } else {
            out << "none";
        }
        out << "\"/>\n";
    }
    out << "</g>\n";
    if (values && opt.legend) {
        const double y = opt.height - legend_h + 5.0;
        const double w = (opt.width - 2 * margin) / 2.0 / kPalette.size();
        for (std::size_t i = 0; i < kPalette.size(); ++i)
            out << "<rect x=\"" << margin + i * w << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"12\" fill=\""
                << kPalette[i] << "\"/>\n";
        out << "<text x=\"" << margin << "\" y=\"" << y + 28 << "\" font-size=\"12\">min " << format_number(lo)
            << "</text>\n";
        out << "<text x=\"" << margin + kPalette.size() * w << "\" y=\"" << y + 28
            << "\" font-size=\"12\" text-anchor=\"end\">max " << format_number(hi) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace

int colour_bin(double value, double lo, double hi) {
    if (!(hi > lo)) return 0;
    const double r = (value - lo) / (hi - lo);
    return std::clamp(static_cast<int>(r * kPalette.size()), 0, static_cast<int>(kPalette.size()) - 1);
}

std::string render_mesh_svg(const Mesh& mesh, std::span<const double> element_values, const SvgOptions& options) {
    if (element_values.empty()) return svg(mesh, nullptr, options);
    if (static_cast<Index>(element_values.size()) != mesh.num_triangles())
        throw ContractViolation("render_mesh_svg: one value per triangle expected");
    const std::vector<double> v(element_values.begin(), element_values.end());
    return svg(mesh, &v, options);
}

std::string render_vertex_field_svg(const Mesh& mesh, std::span<const double> vertex_values,
                                    const SvgOptions& options) {
    if (static_cast<Index>(vertex_values.size()) != mesh.num_vertices())
        throw ContractViolation("render_vertex_field_svg: one value per vertex expected");
    std::vector<double> v(mesh.num_triangles());
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tv = mesh.triangle(t).vertices;
        v[t] = (vertex_values[tv[0]] + vertex_values[tv[1]] + vertex_values[tv[2]]) / 3.0;
    }
    return svg(mesh, &v, options);
}

}  // namespace dfadapt
