#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "dfadapt/mesh.hpp"

namespace dfadapt {

// Shortest round-trippable formatting ("%.17g" trimmed); "inf", "-inf", "nan".
std::string format_number(double v);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns);

    CsvTable& row(std::initializer_list<std::string> cells);
    CsvTable& row(std::vector<std::string> cells);
    std::size_t size() const { return rows_.size(); }
    const std::vector<std::string>& columns() const { return columns_; }
    std::string str() const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

struct SvgOptions {
    int width = 800;   // viewport, pixels
    int height = 800;
    double stroke = 0.5;
    bool legend = true;
};

// Wireframe of the mesh. With element_values (one per triangle) or
// vertex_values (one per vertex, averaged per triangle) the polygons are
// filled from a 16-bin colour scale and a min/max legend is drawn.
std::string render_mesh_svg(const Mesh& mesh, std::span<const double> element_values = {},
                            const SvgOptions& options = {});
std::string render_vertex_field_svg(const Mesh& mesh, std::span<const double> vertex_values,
                                    const SvgOptions& options = {});

// Colour bin (0..15) of `value` in [lo, hi].
int colour_bin(double value, double lo, double hi);

}  // namespace dfadapt
