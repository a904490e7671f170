#pragma once

#include <array>
#include <map>

#include "melroi/types.hpp"

namespace melroi {

enum class RenderMode { Boundary, Overlay, Heatmap };

struct RenderSpec {
    RenderMode mode = RenderMode::Overlay;
    std::array<float, 3> overlay_mask_color{0.0f, 0.0f, 255.0f}; // translucent blue
    float overlay_alpha = 0.5f;
    std::array<std::uint8_t, 3> boundary_color{0, 255, 0};
    int boundary_thickness = 3;
    int optics_min_pts = 2;
    double optics_eps = 1.5;
};

// Per-patch score of the slide's ranking class for scored tissue patches.
using PatchScoreMap = std::map<PatchKey, double>;

// Overlay: alpha-blends everything outside the predicted ROI patches and
// leaves ROI pixels untouched. Heatmap: fills each scored patch from a
// blue-to-red ramp scaled to the slide's observed score range (degenerate
// range renders mid-ramp). Boundary: draws the traced outline of the
// largest OPTICS cluster of the ROI. Always returns RGBA.
Image8 render(const SlideRaster& slide, const SlideResult& result, const PatchScoreMap& scores,
              const RenderSpec& spec);

} // namespace melroi
