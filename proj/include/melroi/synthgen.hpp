#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "melroi/annotations.hpp"
#include "melroi/types.hpp"

namespace melroi {

struct CohortSpec {
    int n_slides = 160;
    double class_balance = 86.0 / 160.0; // melanoma fraction
    int slide_width = 2048;
    int slide_height = 2048;
    std::array<int, 2> roi_count_range{1, 3};
    std::array<double, 2> roi_area_fraction_range{0.05, 0.30};
    double class_separability = 40.0; // chromatic offset between tumor textures, RGB units
    double annotation_coverage = 0.7; // fraction of ROIs receiving annotations
    std::uint64_t seed = 0;
};

struct SlidePlan {
    std::string slide_id;
    SlideLabel label = SlideLabel::Melanoma;
};

// Slide ids and labels; melanoma count is round(n_slides * class_balance)
// exactly, with the assignment order seeded.
std::vector<SlidePlan> plan_cohort(const CohortSpec& spec);

struct GeneratedSlide {
    SlideRaster raster;
    AnnotationSet annotations;            // covered ROIs only
    Image8 truth_mask;                    // gray, 255 inside any ROI blob
    std::vector<std::uint8_t> truth_patch_flags; // center-in-any-blob, [gy*cols+gx]
    int grid_cols = 0;
    int grid_rows = 0;
};

// One slide: glass margin, H&E-like tissue noise, ROI blobs with a
// class-dependent chromatic shift (melanoma darker/bluer, nevus
// lighter/browner) plus high-frequency speckle. Geometry is independent of
// `coverage`, which only selects the blobs that get annotation polygons.
// Deterministic given spec.seed and slide_index.
GeneratedSlide generate_slide(const CohortSpec& spec, const SlidePlan& plan,
                              std::size_t slide_index, double coverage);

} // namespace melroi
