#pragma once

#include <utility>
#include <vector>

#include "melroi/types.hpp"

namespace melroi {

// Outer contour of the union of the subset's patch_size x patch_size pixel
// squares, traced by marching over the cell-corner lattice with the inside
// kept on the walking direction's right (positive shoelace in slide
// coordinates). Closed: first vertex equals last; collinear lattice corners
// are merged. For a disconnected subset the loop of the component holding
// the lexicographically smallest (grid_y, grid_x) cell is traced.
std::vector<std::pair<double, double>> trace_boundary(const std::vector<PatchKey>& cells,
                                                      int patch_size = kPatchSize);

// Signed polygon area (positive for trace_boundary output).
double shoelace_area(const std::vector<std::pair<double, double>>& polygon);

} // namespace melroi
