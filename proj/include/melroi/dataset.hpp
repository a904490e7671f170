#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "melroi/types.hpp"

namespace melroi {

struct LabelingParams {
    int buffer_distance = 2;      // Chebyshev grid distance kept clear around annotations
    double other_cap_ratio = 2.0; // Other patches sampled per annotated patch
};

// Applies the labeling rules to one slide's records (tissue and
// in_annotation flags must be set):
//   tissue & annotated            -> the slide's patch class
//   tissue, >= buffer away        -> Other, uniformly subsampled to at most
//                                    other_cap_ratio x annotated count
//   everything else               -> unlabeled
void label_patches(const PatchGrid& grid, std::vector<PatchRecord>& records,
                   SlideLabel slide_label, const LabelingParams& params, std::uint64_t seed);

struct DatasetEntry {
    std::string slide_id;
    int grid_x = 0;
    int grid_y = 0;
    PatchClass label = PatchClass::Other;
};

struct PatchDataset {
    std::vector<DatasetEntry> entries; // sorted by (slide_id, grid_y, grid_x)
    std::array<long, 3> class_counts{};
    std::string provenance;
};

PatchDataset assemble_dataset(const std::vector<DatasetEntry>& entries, std::string provenance);

struct SlideTag {
    std::string slide_id;
    SlideLabel label = SlideLabel::Melanoma;
};

struct SplitResult {
    std::vector<std::string> train_ids; // sorted
    std::vector<std::string> test_ids;  // sorted
};

// Slide-level split, stratified by label: round(n_class * fraction) train
// slides per class. Deterministic given the seed and invariant under input
// permutation. Throws StratificationError when a class would vanish from
// either side.
SplitResult stratified_split(const std::vector<SlideTag>& slides, double fraction,
                             std::uint64_t seed);

// Stratified subsample of the given slides (used by the robustness sweep);
// fraction may be 1. Throws StratificationError when a class rounds to zero.
std::vector<std::string> stratified_subsample(const std::vector<SlideTag>& slides,
                                              double fraction, std::uint64_t seed);

} // namespace melroi
