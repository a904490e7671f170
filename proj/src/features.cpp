#include "melroi/features.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

#include "melroi/kernels/kernels.hpp"

namespace melroi {

const std::array<const char*, kFeatureCount> kFeatureNames = {
    "r_mean", "r_std", "r_skew", "g_mean", "g_std", "g_skew", "b_mean", "b_std", "b_skew",
    "conc_h_mean", "conc_h_std", "conc_h_skew", "conc_e_mean", "conc_e_std", "conc_e_skew",
    "hue_hist_0", "hue_hist_1", "hue_hist_2", "hue_hist_3", "hue_hist_4", "hue_hist_5",
    "hue_hist_6", "hue_hist_7",
    "conc_h_hist_0", "conc_h_hist_1", "conc_h_hist_2", "conc_h_hist_3", "conc_h_hist_4",
    "conc_h_hist_5", "conc_h_hist_6", "conc_h_hist_7",
    "edge_density", "tissue_fraction",
    "saturation_mean", "saturation_std", "value_mean", "value_std",
    "luma_mean", "luma_std", "dark_fraction",
};

namespace {

struct Moments {
    double mean, stddev, skewness;
};

// Central moments from exact power sums; `unit` rescales the stored integer
// quantum back to feature units.
Moments moments_from_sums(const std::uint64_t s[3], std::size_t n, double unit) {
    const double dn = static_cast<double>(n);
    const double m1 = static_cast<double>(s[0]) / dn;
    const double m2raw = static_cast<double>(s[1]) / dn;
    const double m3raw = static_cast<double>(s[2]) / dn;
    const double var = m2raw - m1 * m1;
    const double m3 = m3raw - 3.0 * m1 * m2raw + 2.0 * m1 * m1 * m1;
    Moments out;
    out.mean = m1 * unit;
    if (var <= 1e-12) {
        out.stddev = 0.0;
        out.skewness = 0.0;
    } else {
        const double sd = std::sqrt(var);
        out.stddev = sd * unit;
        out.skewness = m3 / (sd * sd * sd);
    }
    return out;
}

int hue_bin(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const std::uint8_t mx = std::max(r, std::max(g, b));
    const std::uint8_t mn = std::min(r, std::min(g, b));
    if (mx == mn) return 0;
    const float d = static_cast<float>(mx - mn);
    float h6;
    if (r == mx) {
        h6 = static_cast<float>(static_cast<int>(g) - static_cast<int>(b)) / d;
        if (h6 < 0.0f) h6 += 6.0f;
    } else if (g == mx) {
        h6 = static_cast<float>(static_cast<int>(b) - static_cast<int>(r)) / d + 2.0f;
    } else {
        h6 = static_cast<float>(static_cast<int>(r) - static_cast<int>(g)) / d + 4.0f;
    }
    if (h6 >= 6.0f) h6 -= 6.0f;
    int bin = static_cast<int>(h6 * (4.0f / 3.0f));
    if (bin < 0) bin = 0;
    if (bin > 7) bin = 7;
    return bin;
}

} // namespace

PatchFeatures extract_features(const Image8& patch, const StainProfile& reference,
                               const TissueThresholds& thresholds) {
    const auto& k = kernels::active_kernels();
    const Planes8 planes = to_planes(patch);
    const std::size_t n = planes.pixel_count();
    PatchFeatures f{};

    // RGB moments.
    const std::uint8_t* channel_ptr[3] = {planes.r.data(), planes.g.data(), planes.b.data()};
    for (int c = 0; c < 3; ++c) {
        std::uint64_t sums[3];
        k.u8_power_sums(channel_ptr[c], n, sums);
        const Moments m = moments_from_sums(sums, n, 1.0 / 255.0);
        f[c * 3 + 0] = m.mean;
        f[c * 3 + 1] = m.stddev;
        f[c * 3 + 2] = m.skewness;
    }

    // Stain-concentration moments and H-concentration histogram. Quantized
    // to 1/256 so the sums stay integer-exact.
    const ConcentrationPlanes conc = compute_concentrations(planes, reference);
    std::vector<std::uint16_t> qh(n), qe(n);
    k.conc_quantize(conc.h.data(), n, qh.data());
    k.conc_quantize(conc.e.data(), n, qe.data());
    const std::uint16_t* conc_ptr[2] = {qh.data(), qe.data()};
    for (int c = 0; c < 2; ++c) {
        std::uint64_t sums[3];
        k.u16_power_sums(conc_ptr[c], n, sums);
        const Moments m = moments_from_sums(sums, n, 1.0 / 256.0);
        f[9 + c * 3 + 0] = m.mean;
        f[9 + c * 3 + 1] = m.stddev;
        f[9 + c * 3 + 2] = m.skewness;
    }
    std::array<std::uint64_t, 8> conc_hist{};
    for (std::size_t i = 0; i < n; ++i)
        ++conc_hist[std::min<std::uint16_t>(static_cast<std::uint16_t>(qh[i] >> 7), 7)];

    // Single pixel pass for hue bins and derived byte planes.
    std::array<std::uint64_t, 8> hue_hist{};
    std::vector<std::uint8_t> sat_plane(n), val_plane(n), luma_plane(n);
    std::uint64_t dark = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t r = planes.r[i], g = planes.g[i], b = planes.b[i];
        ++hue_hist[hue_bin(r, g, b)];
        const std::uint32_t mx = std::max(r, std::max(g, b));
        const std::uint32_t mn = std::min(r, std::min(g, b));
        sat_plane[i] = mx == 0 ? 0
                               : static_cast<std::uint8_t>((2 * 255 * (mx - mn) + mx) / (2 * mx));
        val_plane[i] = static_cast<std::uint8_t>(mx);
        luma_plane[i] = static_cast<std::uint8_t>((77u * r + 150u * g + 29u * b) >> 8);
        if (mx < 128) ++dark;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (int i = 0; i < 8; ++i) f[15 + i] = static_cast<double>(hue_hist[i]) * inv_n;
    for (int i = 0; i < 8; ++i) f[23 + i] = static_cast<double>(conc_hist[i]) * inv_n;

    // Edge density over the luma plane in [0,1].
    std::vector<float> gray(n);
    k.gray_f32(planes.r.data(), planes.g.data(), planes.b.data(), n, gray.data());
    const std::uint32_t edges = k.edge_count_f32(gray.data(), patch.width, patch.height, 0.1f);
    f[31] = static_cast<double>(edges) * inv_n;

    f[32] = tissue_pixel_fraction(planes, thresholds);

    const std::uint8_t* derived[3] = {sat_plane.data(), val_plane.data(), luma_plane.data()};
    for (int c = 0; c < 3; ++c) {
        std::uint64_t sums[3];
        k.u8_power_sums(derived[c], n, sums);
        const Moments m = moments_from_sums(sums, n, 1.0 / 255.0);
        f[33 + c * 2 + 0] = m.mean;
        f[33 + c * 2 + 1] = m.stddev;
    }
    f[39] = static_cast<double>(dark) * inv_n;
    return f;
}

} // namespace melroi
