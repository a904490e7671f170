#include "melroi/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "kernels_inline.hpp"

namespace melroi::kernels {

const float* od_lut() {
    static const auto table = [] {
        struct Table { float v[256]; } t{};
        for (int i = 0; i < 256; ++i)
            t.v[i] = static_cast<float>(-std::log10((i + 1) / 256.0));
        return t;
    }();
    return table.v;
}

namespace {

std::uint32_t tissue_count_scalar(const std::uint8_t* r, const std::uint8_t* g,
                                  const std::uint8_t* b, std::size_t n,
                                  float sat_thr, float val_thr) {
    const float val_limit = val_thr * 255.0f;
    std::uint32_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t mx = std::max(r[i], std::max(g[i], b[i]));
        const std::uint8_t mn = std::min(r[i], std::min(g[i], b[i]));
        const float fmx = static_cast<float>(mx);
        const float fd = static_cast<float>(mx - mn);
        if (fd > sat_thr * fmx && fmx < val_limit) ++count;
    }
    return count;
}

void od_from_bytes_scalar(const std::uint8_t* src, std::size_t n, float* dst) {
    const float* lut = od_lut();
    for (std::size_t i = 0; i < n; ++i) dst[i] = lut[src[i]];
}

void od_to_conc_scalar(const float* od_r, const float* od_g, const float* od_b,
                       std::size_t n, const float pinv[6], float* conc_h, float* conc_e) {
    for (std::size_t i = 0; i < n; ++i) {
        float h = pinv[0] * od_r[i];
        h = h + pinv[1] * od_g[i];
        h = h + pinv[2] * od_b[i];
        float e = pinv[3] * od_r[i];
        e = e + pinv[4] * od_g[i];
        e = e + pinv[5] * od_b[i];
        conc_h[i] = h;
        conc_e[i] = e;
    }
}

void conc_render_scalar(const float* conc_h, const float* conc_e, std::size_t n,
                        const float scale[2], const float stains[6],
                        std::uint8_t* r, std::uint8_t* g, std::uint8_t* b) {
    for (std::size_t i = 0; i < n; ++i) {
        float h = conc_h[i] < 0.0f ? 0.0f : conc_h[i];
        float e = conc_e[i] < 0.0f ? 0.0f : conc_e[i];
        h = h * scale[0];
        e = e * scale[1];
        const float od_r = stains[0] * h + stains[1] * e;
        const float od_g = stains[2] * h + stains[3] * e;
        const float od_b = stains[4] * h + stains[5] * e;
        r[i] = detail::od_to_byte(od_r);
        g[i] = detail::od_to_byte(od_g);
        b[i] = detail::od_to_byte(od_b);
    }
}

void conc_quantize_scalar(const float* conc, std::size_t n, std::uint16_t* q) {
    for (std::size_t i = 0; i < n; ++i) {
        const float v = std::floor(conc[i] * 256.0f + 0.5f);
        float c = v;
        if (c < 0.0f) c = 0.0f;
        if (c > 4095.0f) c = 4095.0f;
        q[i] = static_cast<std::uint16_t>(c);
    }
}

void u8_power_sums_scalar(const std::uint8_t* v, std::size_t n, std::uint64_t out[3]) {
    std::uint64_t s1 = 0, s2 = 0, s3 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t x = v[i];
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
    }
    out[0] = s1;
    out[1] = s2;
    out[2] = s3;
}

void u16_power_sums_scalar(const std::uint16_t* v, std::size_t n, std::uint64_t out[3]) {
    std::uint64_t s1 = 0, s2 = 0, s3 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t x = v[i];
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
    }
    out[0] = s1;
    out[1] = s2;
    out[2] = s3;
}

void blend_rgba_scalar(std::uint8_t* rgba, std::size_t n, const float target[4], float alpha) {
    const float ia = 1.0f - alpha;
    float w[4];
    for (int c = 0; c < 4; ++c) w[c] = target[c] * alpha;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint8_t* px = rgba + i * 4;
        for (int c = 0; c < 4; ++c) {
            const float v = std::floor(static_cast<float>(px[c]) * ia + w[c] + 0.5f);
            px[c] = static_cast<std::uint8_t>(v < 0.0f ? 0.0f : (v > 255.0f ? 255.0f : v));
        }
    }
}

void gray_f32_scalar(const std::uint8_t* r, const std::uint8_t* g, const std::uint8_t* b,
                     std::size_t n, float* gray) {
    for (std::size_t i = 0; i < n; ++i) {
        float t = 0.299f * static_cast<float>(r[i]);
        t = t + 0.587f * static_cast<float>(g[i]);
        t = t + 0.114f * static_cast<float>(b[i]);
        gray[i] = t * detail::kInv255;
    }
}

std::uint32_t edge_count_f32_scalar(const float* gray, int width, int height, float threshold) {
    const float t2 = threshold * threshold;
    std::uint32_t count = 0;
    for (int y = 1; y + 1 < height; ++y) {
        const float* row = gray + static_cast<std::size_t>(y) * width;
        const float* up = row - width;
        const float* dn = row + width;
        for (int x = 1; x + 1 < width; ++x) {
            const float gx = (row[x + 1] - row[x - 1]) * 0.5f;
            const float gy = (dn[x] - up[x]) * 0.5f;
            const float m2 = gx * gx + gy * gy;
            if (m2 > t2) ++count;
        }
    }
    return count;
}

} // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table = {
        "scalar",
        tissue_count_scalar,
        od_from_bytes_scalar,
        od_to_conc_scalar,
        conc_render_scalar,
        conc_quantize_scalar,
        u8_power_sums_scalar,
        u16_power_sums_scalar,
        blend_rgba_scalar,
        gray_f32_scalar,
        edge_count_f32_scalar,
    };
    return table;
}

} // namespace melroi::kernels
