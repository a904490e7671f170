#pragma once

#include <cstddef>
#include <cstdint>

// Pixel inner loops, planar layout. Every kernel has a scalar reference
// implementation that defines the contract bit-for-bit; vector variants
// must reproduce it exactly (equivalence-tested), so runtime selection can
// never change pipeline output. No FMA anywhere: a contracted multiply-add
// rounds differently from the separate mul/add the reference performs.
namespace melroi::kernels {

// 256-entry optical-density table, od_lut()[v] = -log10((v + 1) / 256).
const float* od_lut();

struct KernelTable {
    const char* name;

    // Count of pixels with saturation > sat_thr and value < val_thr (HSV).
    std::uint32_t (*tissue_count)(const std::uint8_t* r, const std::uint8_t* g,
                                  const std::uint8_t* b, std::size_t n,
                                  float sat_thr, float val_thr);

    // dst[i] = od_lut()[src[i]] for one channel plane.
    void (*od_from_bytes)(const std::uint8_t* src, std::size_t n, float* dst);

    // Least-squares stain concentrations: [h e]' = pinv (2x3, row-major) * od.
    void (*od_to_conc)(const float* od_r, const float* od_g, const float* od_b,
                       std::size_t n, const float pinv[6], float* conc_h, float* conc_e);

    // Re-render RGB from clamped, rescaled concentrations through a 3x2
    // stain matrix (row-major), via I = 256 * 10^-od - 1.
    void (*conc_render)(const float* conc_h, const float* conc_e, std::size_t n,
                        const float scale[2], const float stains[6],
                        std::uint8_t* r, std::uint8_t* g, std::uint8_t* b);

    // Fixed-point concentrations: q = clamp(floor(c * 256 + 0.5), 0, 4095).
    // Quantizing makes the downstream moment sums integer-exact and hence
    // independent of summation order.
    void (*conc_quantize)(const float* conc, std::size_t n, std::uint16_t* q);

    // out = {sum v, sum v^2, sum v^3} as exact integers.
    void (*u8_power_sums)(const std::uint8_t* v, std::size_t n, std::uint64_t out[3]);
    void (*u16_power_sums)(const std::uint16_t* v, std::size_t n, std::uint64_t out[3]);

    // In-place alpha blend toward target color (RGBA, 0..255 floats):
    // px = floor(px * (1 - alpha) + target * alpha + 0.5).
    void (*blend_rgba)(std::uint8_t* rgba, std::size_t n, const float target[4], float alpha);

    // Luma plane: (0.299 r + 0.587 g + 0.114 b) / 255.
    void (*gray_f32)(const std::uint8_t* r, const std::uint8_t* g, const std::uint8_t* b,
                     std::size_t n, float* gray);

    // Count of interior pixels whose central-difference gradient magnitude
    // exceeds threshold.
    std::uint32_t (*edge_count_f32)(const float* gray, int width, int height, float threshold);
};

const KernelTable& scalar_kernels();

// nullptr when AVX2 is unavailable (build target or runtime CPU).
const KernelTable* avx2_kernels();

// Selected once per process: MELROI_KERNELS=scalar|avx2 overrides the CPU
// probe; unknown or unsupported values fall back to scalar.
const KernelTable& active_kernels();

// Test hook. nullptr restores automatic selection.
void set_active_kernels(const KernelTable* table);

} // namespace melroi::kernels
