#include "melroi/grid.hpp"

#include <string>

namespace melroi {

std::optional<SlideLabel> slide_label_from_string(const std::string& s) {
    if (s == "melanoma") return SlideLabel::Melanoma;
    if (s == "nevus") return SlideLabel::Nevus;
    return std::nullopt;
}

std::optional<PatchClass> patch_class_from_string(const std::string& s) {
    if (s == "melanoma") return PatchClass::Melanoma;
    if (s == "nevus") return PatchClass::Nevus;
    if (s == "other") return PatchClass::Other;
    return std::nullopt;
}

PatchGrid build_grid(const SlideRaster& raster) {
    const int w = raster.pixels.width;
    const int h = raster.pixels.height;
    if (w < kPatchSize || h < kPatchSize)
        throw InvalidSlide("slide " + raster.slide_id + " is smaller than one patch (" +
                           std::to_string(w) + "x" + std::to_string(h) + ")");
    PatchGrid grid;
    grid.slide_id = raster.slide_id;
    grid.patch_size = kPatchSize;
    grid.cols = w / kPatchSize;
    grid.rows = h / kPatchSize;
    return grid;
}

Image8 patch_pixels(const SlideRaster& raster, int grid_x, int grid_y) {
    const int cols = raster.pixels.width / kPatchSize;
    const int rows = raster.pixels.height / kPatchSize;
    if (grid_x < 0 || grid_x >= cols || grid_y < 0 || grid_y >= rows)
        throw IndexError("patch (" + std::to_string(grid_x) + "," + std::to_string(grid_y) +
                         ") outside grid " + std::to_string(cols) + "x" + std::to_string(rows));
    return crop(raster.pixels, grid_x * kPatchSize, grid_y * kPatchSize, kPatchSize, kPatchSize);
}

} // namespace melroi
