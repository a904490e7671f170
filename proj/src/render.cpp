#include "melroi/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "melroi/boundary.hpp"
#include "melroi/grid.hpp"
#include "melroi/kernels/kernels.hpp"
#include "melroi/optics.hpp"

namespace melroi {

namespace {

Image8 to_rgba(const Image8& rgb) {
    Image8 out(rgb.width, rgb.height, 4);
    const std::size_t n = rgb.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        out.data[i * 4 + 0] = rgb.data[i * 3 + 0];
        out.data[i * 4 + 1] = rgb.data[i * 3 + 1];
        out.data[i * 4 + 2] = rgb.data[i * 3 + 2];
        out.data[i * 4 + 3] = 255;
    }
    return out;
}

void render_overlay(Image8& img, const PatchGrid& grid, const SlideResult& result,
                    const RenderSpec& spec) {
    const float target[4] = {spec.overlay_mask_color[0], spec.overlay_mask_color[1],
                             spec.overlay_mask_color[2], 255.0f};
    const auto& blend = kernels::active_kernels().blend_rgba;
    std::vector<std::uint8_t> roi_row(grid.cols);
    for (int y = 0; y < img.height; ++y) {
        const int gy = y / grid.patch_size;
        for (int gx = 0; gx < grid.cols; ++gx)
            roi_row[gx] = gy < grid.rows && result.roi_patches.count({gx, gy}) ? 1 : 0;
        // Blend maximal non-ROI pixel runs of this row.
        int x = 0;
        while (x < img.width) {
            const int gx = x / grid.patch_size;
            const bool roi = gx < grid.cols && roi_row[gx];
            int x_end = std::min((gx + 1) * grid.patch_size, img.width);
            if (gx >= grid.cols) x_end = img.width;
            if (roi) {
                x = x_end;
                continue;
            }
            // Extend across adjacent non-ROI patches.
            while (x_end < img.width) {
                const int ngx = x_end / grid.patch_size;
                if (ngx < grid.cols && roi_row[ngx]) break;
                x_end = std::min(ngx < grid.cols ? (ngx + 1) * grid.patch_size : img.width,
                                 img.width);
            }
            blend(img.at(x, y), static_cast<std::size_t>(x_end - x), target, spec.overlay_alpha);
            x = x_end;
        }
    }
}

void render_heatmap(Image8& img, const PatchGrid& grid, const PatchScoreMap& scores) {
    if (scores.empty()) return;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& [key, s] : scores) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    const bool degenerate = !(hi > lo);
    for (const auto& [key, s] : scores) {
        const double t = degenerate ? 0.5 : (s - lo) / (hi - lo);
        const std::uint8_t cr = static_cast<std::uint8_t>(std::lround(255.0 * t));
        const std::uint8_t cb = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)));
        const int x0 = key.first * grid.patch_size;
        const int y0 = key.second * grid.patch_size;
        for (int y = y0; y < y0 + grid.patch_size; ++y) {
            std::uint8_t* px = img.at(x0, y);
            for (int x = 0; x < grid.patch_size; ++x, px += 4) {
                px[0] = cr;
                px[1] = 0;
                px[2] = cb;
            }
        }
    }
}

void draw_segment(Image8& img, double x0d, double y0d, double x1d, double y1d,
                  const std::array<std::uint8_t, 3>& color, int thickness) {
    const int half = thickness / 2;
    const int x0 = static_cast<int>(std::lround(std::min(x0d, x1d))) - half;
    const int x1 = static_cast<int>(std::lround(std::max(x0d, x1d))) + half;
    const int y0 = static_cast<int>(std::lround(std::min(y0d, y1d))) - half;
    const int y1 = static_cast<int>(std::lround(std::max(y0d, y1d))) + half;
    for (int y = std::max(y0, 0); y <= std::min(y1, img.height - 1); ++y) {
        for (int x = std::max(x0, 0); x <= std::min(x1, img.width - 1); ++x) {
            std::uint8_t* px = img.at(x, y);
            px[0] = color[0];
            px[1] = color[1];
            px[2] = color[2];
        }
    }
}

void render_boundary(Image8& img, const SlideResult& result, const RenderSpec& spec) {
    if (result.roi_patches.empty()) return;
    const std::vector<PatchKey> roi(result.roi_patches.begin(), result.roi_patches.end());
    const std::vector<PatchKey> cluster =
        largest_roi_cluster(roi, spec.optics_min_pts, spec.optics_eps, spec.optics_eps);
    const auto contour = trace_boundary(cluster);
    for (std::size_t i = 0; i + 1 < contour.size(); ++i)
        draw_segment(img, contour[i].first, contour[i].second, contour[i + 1].first,
                     contour[i + 1].second, spec.boundary_color, spec.boundary_thickness);
}

} // namespace

Image8 render(const SlideRaster& slide, const SlideResult& result, const PatchScoreMap& scores,
              const RenderSpec& spec) {
    if (slide.slide_id != result.slide_id)
        throw IdentityError("render: result is for slide '" + result.slide_id +
                            "' but raster is '" + slide.slide_id + "'");
    const PatchGrid grid = build_grid(slide);
    for (const auto& [key, s] : scores) {
        (void)s;
        if (!grid.in_range(key.first, key.second))
            throw IdentityError("render: score key outside grid for slide " + slide.slide_id);
    }
    for (const PatchKey& key : result.roi_patches)
        if (!grid.in_range(key.first, key.second))
            throw IdentityError("render: ROI patch outside grid for slide " + slide.slide_id);

    Image8 img = to_rgba(slide.pixels);
    switch (spec.mode) {
        case RenderMode::Overlay: render_overlay(img, grid, result, spec); break;
        case RenderMode::Heatmap: render_heatmap(img, grid, scores); break;
        case RenderMode::Boundary: render_boundary(img, result, spec); break;
    }
    return img;
}

} // namespace melroi
