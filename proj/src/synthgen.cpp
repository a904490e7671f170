#include "melroi/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "melroi/errors.hpp"
#include "melroi/grid.hpp"
#include "melroi/rng.hpp"

namespace melroi {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Stateless lattice value noise in [-1, 1]; hashing keeps pixel evaluation
// order-free so slides can be generated in parallel.
double hash_unit(std::uint64_t seed, std::int64_t x, std::int64_t y, std::uint64_t tag) {
    const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ULL ^
                                               mix64(static_cast<std::uint64_t>(y) + tag)));
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Lattice values are precomputed once per slide; sampling is then two
// smoothstep lerps without hashing.
class NoiseField {
public:
    NoiseField(std::uint64_t seed, int width, int height, double cell, std::uint64_t tag)
        : cell_(cell), cols_(static_cast<int>(width / cell) + 2),
          rows_(static_cast<int>(height / cell) + 2), values_(static_cast<std::size_t>(cols_) * rows_) {
        for (int y = 0; y < rows_; ++y)
            for (int x = 0; x < cols_; ++x)
                values_[static_cast<std::size_t>(y) * cols_ + x] = hash_unit(seed, x, y, tag);
    }

    double sample(int px, int py) const {
        const double gx = px / cell_;
        const double gy = py / cell_;
        const int x0 = static_cast<int>(gx);
        const int y0 = static_cast<int>(gy);
        const double tx = smoothstep(gx - x0);
        const double ty = smoothstep(gy - y0);
        const double* row0 = &values_[static_cast<std::size_t>(y0) * cols_ + x0];
        const double* row1 = row0 + cols_;
        const double a = row0[0] + (row0[1] - row0[0]) * tx;
        const double b = row1[0] + (row1[1] - row1[0]) * tx;
        return a + (b - a) * ty;
    }

private:
    double cell_;
    int cols_;
    int rows_;
    std::vector<double> values_;
};

// Three independent per-channel noises in [-1, 1] from one hash.
void fine_noise3(std::uint64_t seed, int x, int y, double out[3]) {
    const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ULL ^
                                               mix64(static_cast<std::uint64_t>(y))));
    for (int c = 0; c < 3; ++c)
        out[c] = static_cast<double>((h >> (c * 21)) & 0x1FFFFF) * (2.0 / 2097151.0) - 1.0;
}

std::uint8_t clamp_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0) + 0.5);
}

struct Blob {
    double cx = 0.0, cy = 0.0, radius = 0.0;
    std::vector<Point> polygon;
};

// Star-shaped polygon with three radial harmonics; vertices on integers.
std::vector<Point> blob_polygon(Rng& rng, double cx, double cy, double radius) {
    double amp[3], phase[3];
    for (int m = 0; m < 3; ++m) {
        amp[m] = rng.uniform(-1.0, 1.0) * 0.15 / static_cast<double>(m + 1);
        phase[m] = rng.uniform(0.0, 2.0 * kPi);
    }
    const int nv = 24;
    std::vector<Point> poly;
    poly.reserve(nv);
    for (int i = 0; i < nv; ++i) {
        const double theta = 2.0 * kPi * static_cast<double>(i) / nv;
        double mod = 0.0;
        for (int m = 0; m < 3; ++m) mod += amp[m] * std::sin((m + 1) * theta + phase[m]);
        const double r = radius * std::max(1.0 + mod, 0.35);
        poly.emplace_back(std::round(cx + r * std::cos(theta)), std::round(cy + r * std::sin(theta)));
    }
    return poly;
}

// Even-odd scanline fill at pixel centers.
void fill_polygon(Image8& mask, const std::vector<Point>& poly) {
    double y_min = poly[0].second, y_max = poly[0].second;
    for (const auto& [x, y] : poly) {
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
    }
    const int y0 = std::max(0, static_cast<int>(std::floor(y_min)));
    const int y1 = std::min(mask.height - 1, static_cast<int>(std::ceil(y_max)));
    std::vector<double> xs;
    for (int y = y0; y <= y1; ++y) {
        const double yc = y + 0.5;
        xs.clear();
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const auto& [ax, ay] = poly[i];
            const auto& [bx, by] = poly[(i + 1) % poly.size()];
            if ((ay <= yc && by > yc) || (by <= yc && ay > yc))
                xs.push_back(ax + (yc - ay) * (bx - ax) / (by - ay));
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            const int x_start = std::max(0, static_cast<int>(std::ceil(xs[i] - 0.5)));
            const int x_end = std::min(mask.width - 1,
                                       static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1);
            for (int x = x_start; x <= x_end; ++x) mask.at(x, y)[0] = 255;
        }
    }
}

} // namespace

std::vector<SlidePlan> plan_cohort(const CohortSpec& spec) {
    if (spec.n_slides <= 0) throw GenerationError("plan_cohort: n_slides must be positive");
    const long n_mel = std::llround(spec.class_balance * static_cast<double>(spec.n_slides));
    std::vector<SlideLabel> labels(spec.n_slides, SlideLabel::Nevus);
    for (long i = 0; i < std::min<long>(n_mel, spec.n_slides); ++i) labels[i] = SlideLabel::Melanoma;
    Rng rng(seed_for(spec.seed, "labels"));
    rng.shuffle(labels);

    int width = 3;
    for (int v = spec.n_slides; v >= 1000; v /= 10) ++width;
    std::vector<SlidePlan> plans;
    plans.reserve(spec.n_slides);
    for (int i = 0; i < spec.n_slides; ++i) {
        std::string num = std::to_string(i);
        num.insert(num.begin(), width - static_cast<int>(num.size()), '0');
        plans.push_back({"synth_" + num, labels[i]});
    }
    return plans;
}

GeneratedSlide generate_slide(const CohortSpec& spec, const SlidePlan& plan,
                              std::size_t slide_index, double coverage) {
    const int W = spec.slide_width;
    const int H = spec.slide_height;
    if (W < kPatchSize || H < kPatchSize)
        throw GenerationError("generate_slide: slide smaller than one patch");
    Rng rng(seed_for(spec.seed, "slide", slide_index));
    const std::uint64_t noise_seed = seed_for(spec.seed, "noise", slide_index);

    const int margin_left = static_cast<int>(rng.uniform_int(64, 352));
    const int margin_right = static_cast<int>(rng.uniform_int(64, 352));
    const int margin_top = static_cast<int>(rng.uniform_int(64, 352));
    const int margin_bottom = static_cast<int>(rng.uniform_int(64, 352));
    const double box_x0 = margin_left, box_x1 = W - margin_right;
    const double box_y0 = margin_top, box_y1 = H - margin_bottom;

    double base[3] = {176.0, 130.0, 162.0};
    for (double& b : base) b += rng.uniform(-8.0, 8.0);

    // ROI geometry. Total target area is split across the blobs.
    const int blob_count =
        static_cast<int>(rng.uniform_int(spec.roi_count_range[0], spec.roi_count_range[1]));
    const double total_fraction =
        rng.uniform(spec.roi_area_fraction_range[0], spec.roi_area_fraction_range[1]);
    std::vector<double> weights(blob_count);
    double wsum = 0.0;
    for (double& w : weights) {
        w = 0.5 + rng.uniform();
        wsum += w;
    }
    // Radial wobble stays below 0.28 * radius, so 1.3 * radius bounds every
    // vertex. Radii clamp to what the tissue box can hold; the preferred
    // inter-blob separation decays over placement attempts (tumor regions
    // may legitimately sit close or even overlap).
    const double feasible_radius =
        std::min(box_x1 - box_x0, box_y1 - box_y0) / 2.0 / 1.3 - 1.0;
    if (feasible_radius < 32.0)
        throw GenerationError("generate_slide: tissue box of " + plan.slide_id +
                              " cannot hold an ROI");
    std::vector<Blob> blobs;
    for (int b = 0; b < blob_count; ++b) {
        const double area = total_fraction * (weights[b] / wsum) * static_cast<double>(W) * H;
        const double radius = std::min(std::sqrt(area / kPi), feasible_radius);
        const double pad = 1.3 * radius;
        bool placed = false;
        for (int attempt = 0; attempt < 300 && !placed; ++attempt) {
            const double cx = rng.uniform(box_x0 + pad, box_x1 - pad);
            const double cy = rng.uniform(box_y0 + pad, box_y1 - pad);
            const double relax = attempt < 100 ? 1.0 : (attempt < 200 ? 0.5 : 0.0);
            bool clear = true;
            for (const Blob& other : blobs) {
                const double min_dist = relax * (1.3 * (radius + other.radius) + 192.0);
                const double dx = cx - other.cx, dy = cy - other.cy;
                if (dx * dx + dy * dy < min_dist * min_dist) {
                    clear = false;
                    break;
                }
            }
            if (clear) {
                Blob blob{cx, cy, radius, blob_polygon(rng, cx, cy, radius)};
                blobs.push_back(std::move(blob));
                placed = true;
            }
        }
        if (!placed)
            throw GenerationError("generate_slide: could not place ROI " + std::to_string(b) +
                                  " of " + plan.slide_id);
    }

    GeneratedSlide out;
    out.truth_mask = Image8(W, H, 1, 0);
    for (const Blob& blob : blobs) fill_polygon(out.truth_mask, blob.polygon);

    // Texture. The melanoma shift darkens toward blue; the nevus shift
    // brightens toward brown. Speckle marks tumor texture for both classes.
    const double s = spec.class_separability;
    const double shift_mel[3] = {-1.00 * s, -0.75 * s, -0.20 * s};
    const double shift_nev[3] = {0.40 * s, 0.05 * s, -0.55 * s};
    const double* shift = plan.label == SlideLabel::Melanoma ? shift_mel : shift_nev;

    out.raster.slide_id = plan.slide_id;
    out.raster.true_label = plan.label;
    out.raster.pixels = Image8(W, H, 3);
    Image8& img = out.raster.pixels;
    const NoiseField low_field(noise_seed, W, H, 192.0, 1);
    const NoiseField tint_field(noise_seed, W, H, 96.0, 2);
    const NoiseField speckle_field(noise_seed, W, H, 12.0, 3);
    for (int y = 0; y < H; ++y) {
        std::uint8_t* row = img.row(y);
        const std::uint8_t* mask_row = out.truth_mask.row(y);
        for (int x = 0; x < W; ++x) {
            double px[3];
            double fine[3];
            fine_noise3(noise_seed, x, y, fine);
            const bool glass = x < box_x0 || x >= box_x1 || y < box_y0 || y >= box_y1;
            if (glass) {
                for (int c = 0; c < 3; ++c) px[c] = 248.0 + 4.0 * fine[c];
            } else {
                const double low = low_field.sample(x, y);
                const double tint = tint_field.sample(x, y);
                for (int c = 0; c < 3; ++c) px[c] = base[c] + 16.0 * low + 5.0 * fine[c];
                px[0] += 6.0 * tint;
                px[2] -= 6.0 * tint;
                if (mask_row[x]) {
                    const double speckle = speckle_field.sample(x, y);
                    for (int c = 0; c < 3; ++c) px[c] += shift[c] + 12.0 * speckle + 4.0 * fine[c];
                }
            }
            for (int c = 0; c < 3; ++c) row[x * 3 + c] = clamp_byte(px[c]);
        }
    }

    // Patch-level truth uses the same center-in-polygon rule as
    // annotation membership.
    out.grid_cols = W / kPatchSize;
    out.grid_rows = H / kPatchSize;
    AnnotationSet all_blobs;
    all_blobs.slide_id = plan.slide_id;
    for (std::size_t b = 0; b < blobs.size(); ++b)
        all_blobs.regions.push_back(
            {std::to_string(b + 1), blobs[b].polygon, patch_class_of(plan.label)});
    out.truth_patch_flags.assign(static_cast<std::size_t>(out.grid_cols) * out.grid_rows, 0);
    for (int gy = 0; gy < out.grid_rows; ++gy)
        for (int gx = 0; gx < out.grid_cols; ++gx) {
            const auto [cx, cy] = patch_center(gx, gy);
            out.truth_patch_flags[static_cast<std::size_t>(gy) * out.grid_cols + gx] =
                point_in_regions(all_blobs, cx, cy) ? 1 : 0;
        }

    out.annotations.slide_id = plan.slide_id;
    for (std::size_t b = 0; b < blobs.size(); ++b) {
        const bool covered = coverage >= 1.0 || rng.bernoulli(coverage);
        if (covered) out.annotations.regions.push_back(all_blobs.regions[b]);
    }
    return out;
}

} // namespace melroi
