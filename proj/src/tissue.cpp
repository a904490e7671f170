#include "melroi/tissue.hpp"

#include "melroi/kernels/kernels.hpp"

namespace melroi {

double tissue_pixel_fraction(const Planes8& planes, const TissueThresholds& thr) {
    const std::size_t n = planes.pixel_count();
    if (n == 0) return 0.0;
    const std::uint32_t count = kernels::active_kernels().tissue_count(
        planes.r.data(), planes.g.data(), planes.b.data(), n,
        static_cast<float>(thr.saturation), static_cast<float>(thr.value));
    return static_cast<double>(count) / static_cast<double>(n);
}

bool detect_tissue(const Image8& patch, const TissueThresholds& thr) {
    return tissue_pixel_fraction(to_planes(patch), thr) > thr.fraction;
}

} // namespace melroi
