// AVX2 kernel variants. Each routine mirrors the scalar reference operation
// for operation (mul/add association, floor-based rounding) so results are
// bit-identical; the equivalence tests enforce that on random inputs.
#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "melroi/kernels/kernels.hpp"
#include "kernels_inline.hpp"

namespace melroi::kernels {
namespace {

inline __m256 widen_u8_ps(const std::uint8_t* p) {
    const __m128i bytes = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(p));
    return _mm256_cvtepi32_ps(_mm256_cvtepu8_epi32(bytes));
}

// Packs 8 u32 lane values (each <= 255) into 8 bytes.
inline void store_u32x8_as_u8(std::uint8_t* dst, __m256i v) {
    const __m256i shuf = _mm256_setr_epi8(0, 4, 8, 12, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1,
                                          0, 4, 8, 12, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1);
    const __m256i packed = _mm256_shuffle_epi8(v, shuf);
    const std::uint32_t lo = static_cast<std::uint32_t>(_mm256_extract_epi32(packed, 0));
    const std::uint32_t hi = static_cast<std::uint32_t>(_mm256_extract_epi32(packed, 4));
    std::memcpy(dst, &lo, 4);
    std::memcpy(dst + 4, &hi, 4);
}

std::uint32_t tissue_count_avx2(const std::uint8_t* r, const std::uint8_t* g,
                                const std::uint8_t* b, std::size_t n,
                                float sat_thr, float val_thr) {
    const float val_limit = val_thr * 255.0f;
    const __m256 vsat = _mm256_set1_ps(sat_thr);
    const __m256 vlim = _mm256_set1_ps(val_limit);
    std::uint32_t count = 0;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m128i rb = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(r + i));
        const __m128i gb = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(g + i));
        const __m128i bb = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(b + i));
        const __m128i mx = _mm_max_epu8(rb, _mm_max_epu8(gb, bb));
        const __m128i mn = _mm_min_epu8(rb, _mm_min_epu8(gb, bb));
        const __m256 fmx = _mm256_cvtepi32_ps(_mm256_cvtepu8_epi32(mx));
        const __m256 fd = _mm256_cvtepi32_ps(_mm256_cvtepu8_epi32(_mm_sub_epi8(mx, mn)));
        const __m256 c1 = _mm256_cmp_ps(fd, _mm256_mul_ps(vsat, fmx), _CMP_GT_OQ);
        const __m256 c2 = _mm256_cmp_ps(fmx, vlim, _CMP_LT_OQ);
        count += static_cast<std::uint32_t>(
            _mm_popcnt_u32(static_cast<unsigned>(_mm256_movemask_ps(_mm256_and_ps(c1, c2)))));
    }
    for (; i < n; ++i) {
        const std::uint8_t mx = std::max(r[i], std::max(g[i], b[i]));
        const std::uint8_t mn = std::min(r[i], std::min(g[i], b[i]));
        const float fmx = static_cast<float>(mx);
        const float fd = static_cast<float>(mx - mn);
        if (fd > sat_thr * fmx && fmx < val_limit) ++count;
    }
    return count;
}

void od_from_bytes_avx2(const std::uint8_t* src, std::size_t n, float* dst) {
    const float* lut = od_lut();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m128i bytes = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(src + i));
        const __m256i idx = _mm256_cvtepu8_epi32(bytes);
        _mm256_storeu_ps(dst + i, _mm256_i32gather_ps(lut, idx, 4));
    }
    for (; i < n; ++i) dst[i] = lut[src[i]];
}

void od_to_conc_avx2(const float* od_r, const float* od_g, const float* od_b,
                     std::size_t n, const float pinv[6], float* conc_h, float* conc_e) {
    const __m256 p0 = _mm256_set1_ps(pinv[0]), p1 = _mm256_set1_ps(pinv[1]),
                 p2 = _mm256_set1_ps(pinv[2]), p3 = _mm256_set1_ps(pinv[3]),
                 p4 = _mm256_set1_ps(pinv[4]), p5 = _mm256_set1_ps(pinv[5]);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vr = _mm256_loadu_ps(od_r + i);
        const __m256 vg = _mm256_loadu_ps(od_g + i);
        const __m256 vb = _mm256_loadu_ps(od_b + i);
        __m256 h = _mm256_mul_ps(p0, vr);
        h = _mm256_add_ps(h, _mm256_mul_ps(p1, vg));
        h = _mm256_add_ps(h, _mm256_mul_ps(p2, vb));
        __m256 e = _mm256_mul_ps(p3, vr);
        e = _mm256_add_ps(e, _mm256_mul_ps(p4, vg));
        e = _mm256_add_ps(e, _mm256_mul_ps(p5, vb));
        _mm256_storeu_ps(conc_h + i, h);
        _mm256_storeu_ps(conc_e + i, e);
    }
    for (; i < n; ++i) {
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

inline __m256 exp10_neg_avx2(__m256 x) {
    const __m256 vlog = _mm256_set1_ps(-detail::kLog2Of10);
    __m256 y = _mm256_mul_ps(x, vlog);
    y = _mm256_max_ps(y, _mm256_set1_ps(-64.0f));
    y = _mm256_min_ps(y, _mm256_setzero_ps());
    const __m256 nf = _mm256_floor_ps(_mm256_add_ps(y, _mm256_set1_ps(0.5f)));
    const __m256 f = _mm256_sub_ps(y, nf);
    __m256 p = _mm256_set1_ps(0.000154353387f);
    p = _mm256_add_ps(_mm256_mul_ps(p, f), _mm256_set1_ps(0.00133335581f));
    p = _mm256_add_ps(_mm256_mul_ps(p, f), _mm256_set1_ps(0.00961812910f));
    p = _mm256_add_ps(_mm256_mul_ps(p, f), _mm256_set1_ps(0.0555041086f));
    p = _mm256_add_ps(_mm256_mul_ps(p, f), _mm256_set1_ps(0.240226507f));
    p = _mm256_add_ps(_mm256_mul_ps(p, f), _mm256_set1_ps(0.693147182f));
    p = _mm256_add_ps(_mm256_mul_ps(p, f), _mm256_set1_ps(1.0f));
    const __m256i e = _mm256_slli_epi32(_mm256_add_epi32(_mm256_cvtps_epi32(nf), _mm256_set1_epi32(127)), 23);
    return _mm256_mul_ps(p, _mm256_castsi256_ps(e));
}

inline __m256i od_to_byte_avx2(__m256 od) {
    const __m256 v = _mm256_sub_ps(_mm256_mul_ps(_mm256_set1_ps(256.0f), exp10_neg_avx2(od)),
                                   _mm256_set1_ps(1.0f));
    __m256 q = _mm256_floor_ps(_mm256_add_ps(v, _mm256_set1_ps(0.5f)));
    q = _mm256_max_ps(q, _mm256_setzero_ps());
    q = _mm256_min_ps(q, _mm256_set1_ps(255.0f));
    return _mm256_cvtps_epi32(q);
}

void conc_render_avx2(const float* conc_h, const float* conc_e, std::size_t n,
                      const float scale[2], const float stains[6],
                      std::uint8_t* r, std::uint8_t* g, std::uint8_t* b) {
    const __m256 s0 = _mm256_set1_ps(scale[0]), s1 = _mm256_set1_ps(scale[1]);
    const __m256 m0 = _mm256_set1_ps(stains[0]), m1 = _mm256_set1_ps(stains[1]),
                 m2 = _mm256_set1_ps(stains[2]), m3 = _mm256_set1_ps(stains[3]),
                 m4 = _mm256_set1_ps(stains[4]), m5 = _mm256_set1_ps(stains[5]);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 h = _mm256_max_ps(_mm256_loadu_ps(conc_h + i), _mm256_setzero_ps());
        __m256 e = _mm256_max_ps(_mm256_loadu_ps(conc_e + i), _mm256_setzero_ps());
        h = _mm256_mul_ps(h, s0);
        e = _mm256_mul_ps(e, s1);
        const __m256 od_r = _mm256_add_ps(_mm256_mul_ps(m0, h), _mm256_mul_ps(m1, e));
        const __m256 od_g = _mm256_add_ps(_mm256_mul_ps(m2, h), _mm256_mul_ps(m3, e));
        const __m256 od_b = _mm256_add_ps(_mm256_mul_ps(m4, h), _mm256_mul_ps(m5, e));
        store_u32x8_as_u8(r + i, od_to_byte_avx2(od_r));
        store_u32x8_as_u8(g + i, od_to_byte_avx2(od_g));
        store_u32x8_as_u8(b + i, od_to_byte_avx2(od_b));
    }
    for (; i < n; ++i) {
        float h = conc_h[i] < 0.0f ? 0.0f : conc_h[i];
        float e = conc_e[i] < 0.0f ? 0.0f : conc_e[i];
        h = h * scale[0];
        e = e * scale[1];
        r[i] = detail::od_to_byte(stains[0] * h + stains[1] * e);
        g[i] = detail::od_to_byte(stains[2] * h + stains[3] * e);
        b[i] = detail::od_to_byte(stains[4] * h + stains[5] * e);
    }
}

void conc_quantize_avx2(const float* conc, std::size_t n, std::uint16_t* q) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 c = _mm256_loadu_ps(conc + i);
        __m256 v = _mm256_floor_ps(_mm256_add_ps(_mm256_mul_ps(c, _mm256_set1_ps(256.0f)),
                                                 _mm256_set1_ps(0.5f)));
        v = _mm256_max_ps(v, _mm256_setzero_ps());
        v = _mm256_min_ps(v, _mm256_set1_ps(4095.0f));
        const __m256i vi = _mm256_cvtps_epi32(v);
        const __m256i packed = _mm256_packus_epi32(vi, vi);               // per-lane duplicate
        const __m256i lanes = _mm256_permute4x64_epi64(packed, 0x08);     // gather low halves
        _mm_storeu_si128(reinterpret_cast<__m128i*>(q + i), _mm256_castsi256_si128(lanes));
    }
    for (; i < n; ++i) {
        const float v = std::floor(conc[i] * 256.0f + 0.5f);
        float c = v;
        if (c < 0.0f) c = 0.0f;
        if (c > 4095.0f) c = 4095.0f;
        q[i] = static_cast<std::uint16_t>(c);
    }
}

inline void accumulate_u32_into_u64(__m256i& acc_lo, __m256i& acc_hi, __m256i v32) {
    const __m256i zero = _mm256_setzero_si256();
    acc_lo = _mm256_add_epi64(acc_lo, _mm256_unpacklo_epi32(v32, zero));
    acc_hi = _mm256_add_epi64(acc_hi, _mm256_unpackhi_epi32(v32, zero));
}

inline std::uint64_t hsum_u64(__m256i v) {
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
    return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

void u8_power_sums_avx2(const std::uint8_t* v, std::size_t n, std::uint64_t out[3]) {
    const __m256i zero = _mm256_setzero_si256();
    __m256i acc1 = zero;                       // u64 lanes via SAD
    __m256i acc2_lo = zero, acc2_hi = zero;    // u64
    __m256i acc3_lo = zero, acc3_hi = zero;    // u64
    std::size_t i = 0;
    // 60 blocks of 32 bytes per chunk keeps the u32 cube accumulator below
    // 2^32 (60 * 4 * 255^3 < 4.0e9).
    const std::size_t kChunkBlocks = 60;
    while (i + 32 <= n) {
        const std::size_t blocks = std::min(kChunkBlocks, (n - i) / 32);
        __m256i c2 = zero, c3 = zero;          // u32 partial sums
        for (std::size_t bl = 0; bl < blocks; ++bl, i += 32) {
            const __m256i bytes = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(v + i));
            acc1 = _mm256_add_epi64(acc1, _mm256_sad_epu8(bytes, zero));
            const __m256i w16a = _mm256_cvtepu8_epi16(_mm256_castsi256_si128(bytes));
            const __m256i w16b = _mm256_cvtepu8_epi16(_mm256_extracti128_si256(bytes, 1));
            for (const __m256i w16 : {w16a, w16b}) {
                const __m256i x_lo = _mm256_unpacklo_epi16(w16, zero);
                const __m256i x_hi = _mm256_unpackhi_epi16(w16, zero);
                for (const __m256i x : {x_lo, x_hi}) {
                    const __m256i sq = _mm256_mullo_epi32(x, x);
                    c2 = _mm256_add_epi32(c2, sq);
                    c3 = _mm256_add_epi32(c3, _mm256_mullo_epi32(sq, x));
                }
            }
        }
        accumulate_u32_into_u64(acc2_lo, acc2_hi, c2);
        accumulate_u32_into_u64(acc3_lo, acc3_hi, c3);
    }
    std::uint64_t s1 = hsum_u64(acc1);
    std::uint64_t s2 = hsum_u64(_mm256_add_epi64(acc2_lo, acc2_hi));
    std::uint64_t s3 = hsum_u64(_mm256_add_epi64(acc3_lo, acc3_hi));
    for (; i < n; ++i) {
        const std::uint64_t x = v[i];
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
    }
    out[0] = s1;
    out[1] = s2;
    out[2] = s3;
}

void u16_power_sums_avx2(const std::uint16_t* v, std::size_t n, std::uint64_t out[3]) {
    const __m256i zero = _mm256_setzero_si256();
    __m256i acc1_lo = zero, acc1_hi = zero;
    __m256i acc2_lo = zero, acc2_hi = zero;
    __m256i acc3 = zero;                       // u64 via mul_epu32
    std::size_t i = 0;
    const std::size_t kChunkBlocks = 16384;    // 16 u16 per block; sum stays < 2^32
    while (i + 16 <= n) {
        const std::size_t blocks = std::min(kChunkBlocks, (n - i) / 16);
        __m256i c1 = zero;
        for (std::size_t bl = 0; bl < blocks; ++bl, i += 16) {
            const __m256i x16 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(v + i));
            const __m256i x_lo = _mm256_unpacklo_epi16(x16, zero);
            const __m256i x_hi = _mm256_unpackhi_epi16(x16, zero);
            for (const __m256i x : {x_lo, x_hi}) {
                c1 = _mm256_add_epi32(c1, x);
                const __m256i sq = _mm256_mullo_epi32(x, x);
                accumulate_u32_into_u64(acc2_lo, acc2_hi, sq);
                const __m256i cube_even = _mm256_mul_epu32(sq, x);
                const __m256i cube_odd = _mm256_mul_epu32(_mm256_srli_epi64(sq, 32),
                                                          _mm256_srli_epi64(x, 32));
                acc3 = _mm256_add_epi64(acc3, _mm256_add_epi64(cube_even, cube_odd));
            }
        }
        accumulate_u32_into_u64(acc1_lo, acc1_hi, c1);
    }
    std::uint64_t s1 = hsum_u64(_mm256_add_epi64(acc1_lo, acc1_hi));
    std::uint64_t s2 = hsum_u64(_mm256_add_epi64(acc2_lo, acc2_hi));
    std::uint64_t s3 = hsum_u64(acc3);
    for (; i < n; ++i) {
        const std::uint64_t x = v[i];
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
    }
    out[0] = s1;
    out[1] = s2;
    out[2] = s3;
}

void blend_rgba_avx2(std::uint8_t* rgba, std::size_t n, const float target[4], float alpha) {
    const float ia = 1.0f - alpha;
    float w[4];
    for (int c = 0; c < 4; ++c) w[c] = target[c] * alpha;
    const __m256 via = _mm256_set1_ps(ia);
    const __m256 vw = _mm256_setr_ps(w[0], w[1], w[2], w[3], w[0], w[1], w[2], w[3]);
    const __m256 half = _mm256_set1_ps(0.5f);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        std::uint8_t* px = rgba + i * 4;
        const __m256 p = widen_u8_ps(px);
        __m256 q = _mm256_floor_ps(_mm256_add_ps(_mm256_add_ps(_mm256_mul_ps(p, via), vw), half));
        q = _mm256_max_ps(q, _mm256_setzero_ps());
        q = _mm256_min_ps(q, _mm256_set1_ps(255.0f));
        store_u32x8_as_u8(px, _mm256_cvtps_epi32(q));
    }
    for (; i < n; ++i) {
        std::uint8_t* px = rgba + i * 4;
        for (int c = 0; c < 4; ++c) {
            const float q = std::floor(static_cast<float>(px[c]) * ia + w[c] + 0.5f);
            px[c] = static_cast<std::uint8_t>(q < 0.0f ? 0.0f : (q > 255.0f ? 255.0f : q));
        }
    }
}

void gray_f32_avx2(const std::uint8_t* r, const std::uint8_t* g, const std::uint8_t* b,
                   std::size_t n, float* gray) {
    const __m256 cr = _mm256_set1_ps(0.299f), cg = _mm256_set1_ps(0.587f),
                 cb = _mm256_set1_ps(0.114f), inv = _mm256_set1_ps(detail::kInv255);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 t = _mm256_mul_ps(cr, widen_u8_ps(r + i));
        t = _mm256_add_ps(t, _mm256_mul_ps(cg, widen_u8_ps(g + i)));
        t = _mm256_add_ps(t, _mm256_mul_ps(cb, widen_u8_ps(b + i)));
        _mm256_storeu_ps(gray + i, _mm256_mul_ps(t, inv));
    }
    for (; i < n; ++i) {
        float t = 0.299f * static_cast<float>(r[i]);
        t = t + 0.587f * static_cast<float>(g[i]);
        t = t + 0.114f * static_cast<float>(b[i]);
        gray[i] = t * detail::kInv255;
    }
}

std::uint32_t edge_count_f32_avx2(const float* gray, int width, int height, float threshold) {
    const float t2s = threshold * threshold;
    const __m256 t2 = _mm256_set1_ps(t2s);
    const __m256 half = _mm256_set1_ps(0.5f);
    std::uint32_t count = 0;
    for (int y = 1; y + 1 < height; ++y) {
        const float* row = gray + static_cast<std::size_t>(y) * width;
        const float* up = row - width;
        const float* dn = row + width;
        int x = 1;
        for (; x + 8 <= width - 1; x += 8) {
            const __m256 gx = _mm256_mul_ps(
                _mm256_sub_ps(_mm256_loadu_ps(row + x + 1), _mm256_loadu_ps(row + x - 1)), half);
            const __m256 gy = _mm256_mul_ps(
                _mm256_sub_ps(_mm256_loadu_ps(dn + x), _mm256_loadu_ps(up + x)), half);
            const __m256 m2 = _mm256_add_ps(_mm256_mul_ps(gx, gx), _mm256_mul_ps(gy, gy));
            count += static_cast<std::uint32_t>(_mm_popcnt_u32(
                static_cast<unsigned>(_mm256_movemask_ps(_mm256_cmp_ps(m2, t2, _CMP_GT_OQ)))));
        }
        for (; x + 1 < width; ++x) {
            const float gx = (row[x + 1] - row[x - 1]) * 0.5f;
            const float gy = (dn[x] - up[x]) * 0.5f;
            if (gx * gx + gy * gy > t2s) ++count;
        }
    }
    return count;
}

} // namespace

const KernelTable* avx2_table_impl() {
    static const KernelTable table = {
        "avx2",
        tissue_count_avx2,
        od_from_bytes_avx2,
        od_to_conc_avx2,
        conc_render_avx2,
        conc_quantize_avx2,
        u8_power_sums_avx2,
        u16_power_sums_avx2,
        blend_rgba_avx2,
        gray_f32_avx2,
        edge_count_f32_avx2,
    };
    return &table;
}

} // namespace melroi::kernels

#endif // x86
