#pragma once

#include <set>
#include <vector>

#include "melroi/types.hpp"

namespace melroi {

struct VoteSummary {
    long n_mel = 0;
    long n_nev = 0;
    long n_other = 0;
    bool tie_flag = false;
};

// Majority vote over per-patch argmax classes, ignoring Other. A tie
// (including zero votes on both sides) resolves to Melanoma with tie_flag
// set. Throws EmptySlideError when no patch carries scores.
std::pair<SlideLabel, VoteSummary> classify_slide(const std::vector<PatchRecord>& scored);

struct RankedPatch {
    int grid_x = 0;
    int grid_y = 0;
    double score = 0.0;
};

// Scored tissue patches in descending ranking-class score (s_mel for
// melanoma slides, s_nev otherwise); ties broken by (grid_y, grid_x)
// ascending. Total, deterministic order.
std::vector<RankedPatch> rank_patches(const std::vector<PatchRecord>& scored,
                                      SlideLabel slide_label);

// First round(n * beta) patches, rounding half away from zero.
std::set<PatchKey> select_roi(const std::vector<RankedPatch>& ranked, double beta);

} // namespace melroi
