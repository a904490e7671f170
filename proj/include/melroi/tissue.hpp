#pragma once

#include "melroi/image.hpp"

namespace melroi {

// Thresholds in HSV terms: a pixel counts as tissue when its saturation
// exceeds `saturation` and its value stays below `value`; a patch counts as
// tissue when the fraction of such pixels exceeds `fraction`.
struct TissueThresholds {
    double saturation = 0.08;
    double value = 0.95;
    double fraction = 0.25;
};

double tissue_pixel_fraction(const Planes8& planes, const TissueThresholds& thr = {});

bool detect_tissue(const Image8& patch, const TissueThresholds& thr = {});

} // namespace melroi
