#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

// Shared scalar definitions for kernels that need transcendentals. The
// vector variants re-implement the exact same operation sequence with
// intrinsics; any deviation shows up in the equivalence tests.
namespace melroi::kernels::detail {

inline constexpr float kLog2Of10 = 3.32192809488736235f;
inline constexpr float kInv255 = 1.0f / 255.0f;

// 2^f on f in [-0.5, 0.5], degree-6 Taylor in ln2. Max relative error is
// about 1e-7, far below the 1/256 output quantum of the render path.
inline float exp2_poly(float f) {
    float p = 0.000154353387f;
    p = p * f + 0.00133335581f;
    p = p * f + 0.00961812910f;
    p = p * f + 0.0555041086f;
    p = p * f + 0.240226507f;
    p = p * f + 0.693147182f;
    p = p * f + 1.0f;
    return p;
}

// 10^-x for x >= 0 (clamped), split as 2^n * 2^f with floor(y+0.5) rounding
// so the result does not depend on the runtime FP rounding mode.
inline float exp10_neg(float x) {
    float y = x * -kLog2Of10;
    if (y < -64.0f) y = -64.0f;
    if (y > 0.0f) y = 0.0f;
    const float n = std::floor(y + 0.5f);
    const float f = y - n;
    const std::int32_t e = static_cast<std::int32_t>(n) + 127;
    const float pow2n = std::bit_cast<float>(e << 23);
    return exp2_poly(f) * pow2n;
}

// I = 256 * 10^-od - 1, rounded half-up and clamped to [0, 255].
inline std::uint8_t od_to_byte(float od) {
    const float v = 256.0f * exp10_neg(od) - 1.0f;
    float q = std::floor(v + 0.5f);
    if (q < 0.0f) q = 0.0f;
    if (q > 255.0f) q = 255.0f;
    return static_cast<std::uint8_t>(q);
}

} // namespace melroi::kernels::detail
