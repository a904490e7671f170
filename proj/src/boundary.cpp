#include "melroi/boundary.hpp"

#include <algorithm>
#include <set>

#include "melroi/errors.hpp"

namespace melroi {

namespace {

enum Dir : int { E = 0, S = 1, W = 2, N = 3 };
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};

// Next walking direction at a lattice corner given the 2x2 cell occupancy
// around it (bit 0 = NW, 1 = NE, 2 = SW, 3 = SE). The walk keeps inside
// cells on its right; the two diagonal saddle configurations treat the
// touching cells as connected and depend on the incoming direction.
int next_dir(unsigned config, int incoming) {
    switch (config) {
        case 0b0001: return W;           // NW
        case 0b0010: return N;           // NE
        case 0b0100: return S;           // SW
        case 0b1000: return E;           // SE
        case 0b0011: return W;           // top row
        case 0b1100: return E;           // bottom row
        case 0b0101: return S;           // left column
        case 0b1010: return N;           // right column
        case 0b0111: return S;           // all but SE
        case 0b1011: return W;           // all but SW
        case 0b1101: return E;           // all but NE
        case 0b1110: return N;           // all but NW
        case 0b1001:                     // NW + SE saddle
            return incoming == S ? E : W;
        case 0b0110:                     // NE + SW saddle
            return incoming == E ? N : S;
        default:
            throw Error("trace_boundary: walked onto a non-boundary corner");
    }
}

} // namespace

std::vector<std::pair<double, double>> trace_boundary(const std::vector<PatchKey>& cells,
                                                      int patch_size) {
    if (cells.empty()) throw Error("trace_boundary: empty patch subset");
    std::set<PatchKey> mask(cells.begin(), cells.end());
    auto inside = [&](int gx, int gy) { return mask.count({gx, gy}) != 0; };
    auto config_at = [&](int cx, int cy) -> unsigned {
        unsigned c = 0;
        if (inside(cx - 1, cy - 1)) c |= 0b0001;
        if (inside(cx, cy - 1)) c |= 0b0010;
        if (inside(cx - 1, cy)) c |= 0b0100;
        if (inside(cx, cy)) c |= 0b1000;
        return c;
    };

    // Start at the top-left corner of the lexicographically smallest cell;
    // no subset cell lies above or to its left, so the walk leaves east.
    PatchKey start_cell = *std::min_element(cells.begin(), cells.end(),
                                            [](const PatchKey& a, const PatchKey& b) {
                                                return std::pair(a.second, a.first) <
                                                       std::pair(b.second, b.first);
                                            });
    const int sx = start_cell.first;
    const int sy = start_cell.second;

    std::vector<std::pair<int, int>> corners;
    corners.emplace_back(sx, sy);
    int cx = sx, cy = sy, dir = E;
    const std::size_t step_limit = 8 * (cells.size() + 4) * (cells.size() + 4);
    for (std::size_t steps = 0;; ++steps) {
        if (steps > step_limit) throw Error("trace_boundary: walk failed to close");
        cx += kDx[dir];
        cy += kDy[dir];
        if (cx == sx && cy == sy) break;
        const int nd = next_dir(config_at(cx, cy), dir);
        if (nd != dir) corners.emplace_back(cx, cy);
        dir = nd;
    }

    std::vector<std::pair<double, double>> out;
    out.reserve(corners.size() + 1);
    const double ps = static_cast<double>(patch_size);
    for (const auto& [x, y] : corners) out.emplace_back(x * ps, y * ps);
    out.push_back(out.front());
    return out;
}

double shoelace_area(const std::vector<std::pair<double, double>>& polygon) {
    double acc = 0.0;
    const std::size_t n = polygon.size();
    if (n < 3) return 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto& [x0, y0] = polygon[i];
        const auto& [x1, y1] = polygon[i + 1];
        acc += x0 * y1 - x1 * y0;
    }
    return acc / 2.0;
}

} // namespace melroi
