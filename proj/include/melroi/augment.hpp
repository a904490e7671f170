#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "melroi/image.hpp"

namespace melroi {

struct AugmentationConfig {
    int crop_size = 224;
    double hflip_probability = 0.5;
    std::array<double, 3> channel_mean{0.5, 0.5, 0.5};
    std::array<double, 3> channel_std{0.25, 0.25, 0.25};
    std::uint64_t rng_seed = 0;
};

// crop_size x crop_size x 3, row-major interleaved, standardized channels.
struct AugmentedTensor {
    int size = 0;
    std::vector<float> values;

    float at(int x, int y, int c) const {
        return values[(static_cast<std::size_t>(y) * size + x) * 3 + c];
    }
};

// Random crop + horizontal flip + per-channel standardization. The random
// draw is keyed by (cfg.rng_seed, draw_index): the same pair always yields
// the same output.
AugmentedTensor augment(const Image8& patch, const AugmentationConfig& cfg,
                        std::uint64_t draw_index);

// Test-time path: standardization only, full patch.
AugmentedTensor standardize(const Image8& patch, const AugmentationConfig& cfg);

} // namespace melroi
