#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "melroi/types.hpp"

namespace melroi {

using Point = std::pair<double, double>;

// One pathologist-drawn polygon. The last vertex implicitly connects back
// to the first.
struct AnnotationRegion {
    std::string region_id;
    std::vector<Point> vertices;
    std::optional<PatchClass> assigned_class;
};

struct AnnotationSet {
    std::string slide_id;
    std::vector<AnnotationRegion> regions;
};

struct AnnotationParse {
    AnnotationSet set;
    std::vector<std::string> warnings; // regions skipped for <3 vertices, etc.
};

// Accepted schema (ImageScope export subset):
//   Annotations > Annotation(Id) > Regions > Region(Id) > Vertices > Vertex(X,Y)
// Regions with fewer than 3 vertices are skipped with a warning record.
AnnotationParse parse_annotation_xml(const std::string& xml_text);

// Emits the same subset. parse(serialize(set)) == set for sets whose vertex
// coordinates round-trip through decimal text (integers always do).
std::string serialize_annotation_xml(const AnnotationSet& set);

// Hand-drawn loops commonly overshoot the slide edge; clamp into bounds.
void clamp_vertices(AnnotationSet& set, double width, double height);

// Nonzero winding number of the closed polygon around (px, py).
int winding_number(const std::vector<Point>& polygon, double px, double py);

bool point_in_regions(const AnnotationSet& set, double x, double y);

// in_annotation flag per patch, indexed [gy * cols + gx]: true iff the patch
// center lies inside at least one region under the nonzero winding rule.
std::vector<std::uint8_t> patch_membership(const PatchGrid& grid, const AnnotationSet& set);

void apply_membership(const PatchGrid& grid, const AnnotationSet& set,
                      std::vector<PatchRecord>& records);

// beta = tissue patches inside annotations / tissue patches.
double annotated_ratio(const std::vector<PatchRecord>& patches);

} // namespace melroi
