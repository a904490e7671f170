#pragma once

#include "melroi/types.hpp"

namespace melroi {

// Tiles the slide into non-overlapping 256x256 patches anchored at the
// top-left corner. Residual border pixels that do not fill a whole patch
// are discarded.
PatchGrid build_grid(const SlideRaster& raster);

// Exact 256x256 RGB sub-raster of patch (grid_x, grid_y).
Image8 patch_pixels(const SlideRaster& raster, int grid_x, int grid_y);

// Pixel coordinates of the patch center used for annotation membership.
inline std::pair<double, double> patch_center(int grid_x, int grid_y, int patch_size = kPatchSize) {
    return {grid_x * static_cast<double>(patch_size) + patch_size / 2.0,
            grid_y * static_cast<double>(patch_size) + patch_size / 2.0};
}

} // namespace melroi
