#include "melroi/annotations.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "melroi/grid.hpp"
#include "melroi/xml.hpp"

namespace melroi {

namespace {

double parse_coord(const XmlNode& vertex, const char* key) {
    const std::string* raw = vertex.attribute(key);
    if (!raw)
        throw ParseError(std::string("Vertex missing attribute ") + key, vertex.line, vertex.column);
    double value = 0.0;
    const char* begin = raw->c_str();
    const char* end = begin + raw->size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError(std::string("Vertex attribute ") + key + " is not a number: '" + *raw + "'",
                         vertex.line, vertex.column);
    return value;
}

std::string format_coord(double v) {
    if (v == std::floor(v) && std::fabs(v) < 1e15) {
        char buf[32];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), static_cast<long long>(v));
        return std::string(buf, ptr);
    }
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace

AnnotationParse parse_annotation_xml(const std::string& xml_text) {
    const XmlNode root = parse_xml(xml_text);
    if (root.name != "Annotations")
        throw ParseError("expected root element Annotations, found " + root.name, root.line,
                         root.column);
    AnnotationParse out;
    for (const XmlNode* annotation : root.children_named("Annotation")) {
        for (const XmlNode* regions : annotation->children_named("Regions")) {
            for (const XmlNode* region : regions->children_named("Region")) {
                AnnotationRegion r;
                if (const std::string* id = region->attribute("Id")) r.region_id = *id;
                for (const XmlNode* vertices : region->children_named("Vertices"))
                    for (const XmlNode* vertex : vertices->children_named("Vertex"))
                        r.vertices.emplace_back(parse_coord(*vertex, "X"), parse_coord(*vertex, "Y"));
                if (r.vertices.size() < 3) {
                    out.warnings.push_back("skipped region '" + r.region_id + "' with " +
                                           std::to_string(r.vertices.size()) + " vertices");
                    continue;
                }
                out.set.regions.push_back(std::move(r));
            }
        }
    }
    return out;
}

std::string serialize_annotation_xml(const AnnotationSet& set) {
    std::string out = "<Annotations>\n  <Annotation Id=\"1\">\n    <Regions>\n";
    for (const AnnotationRegion& r : set.regions) {
        out += "      <Region Id=\"" + xml_escape(r.region_id) + "\">\n        <Vertices>\n";
        for (const auto& [x, y] : r.vertices)
            out += "          <Vertex X=\"" + format_coord(x) + "\" Y=\"" + format_coord(y) + "\"/>\n";
        out += "        </Vertices>\n      </Region>\n";
    }
    out += "    </Regions>\n  </Annotation>\n</Annotations>\n";
    return out;
}

void clamp_vertices(AnnotationSet& set, double width, double height) {
    for (AnnotationRegion& r : set.regions) {
        for (auto& [x, y] : r.vertices) {
            x = std::clamp(x, 0.0, width);
            y = std::clamp(y, 0.0, height);
        }
    }
}

int winding_number(const std::vector<Point>& polygon, double px, double py) {
    int wn = 0;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& [ax, ay] = polygon[i];
        const auto& [bx, by] = polygon[(i + 1) % n];
        const double side = (bx - ax) * (py - ay) - (px - ax) * (by - ay);
        if (ay <= py) {
            if (by > py && side > 0) ++wn;
        } else {
            if (by <= py && side < 0) --wn;
        }
    }
    return wn;
}

bool point_in_regions(const AnnotationSet& set, double x, double y) {
    for (const AnnotationRegion& r : set.regions)
        if (winding_number(r.vertices, x, y) != 0) return true;
    return false;
}

std::vector<std::uint8_t> patch_membership(const PatchGrid& grid, const AnnotationSet& set) {
    if (grid.slide_id != set.slide_id)
        throw IdentityError("patch_membership: grid is for slide '" + grid.slide_id +
                            "' but annotations are for '" + set.slide_id + "'");
    std::vector<std::uint8_t> flags(static_cast<std::size_t>(grid.cols) * grid.rows, 0);
    for (int gy = 0; gy < grid.rows; ++gy) {
        for (int gx = 0; gx < grid.cols; ++gx) {
            const auto [cx, cy] = patch_center(gx, gy, grid.patch_size);
            flags[static_cast<std::size_t>(gy) * grid.cols + gx] =
                point_in_regions(set, cx, cy) ? 1 : 0;
        }
    }
    return flags;
}

void apply_membership(const PatchGrid& grid, const AnnotationSet& set,
                      std::vector<PatchRecord>& records) {
    const std::vector<std::uint8_t> flags = patch_membership(grid, set);
    for (PatchRecord& rec : records)
        rec.in_annotation = flags[static_cast<std::size_t>(rec.grid_y) * grid.cols + rec.grid_x] != 0;
}

double annotated_ratio(const std::vector<PatchRecord>& patches) {
    long annotated = 0;
    long tissue = 0;
    for (const PatchRecord& p : patches) {
        if (!p.tissue) continue;
        ++tissue;
        if (p.in_annotation) ++annotated;
    }
    if (tissue == 0) throw EmptySlideError("annotated_ratio: slide has no tissue patches");
    return static_cast<double>(annotated) / static_cast<double>(tissue);
}

} // namespace melroi
