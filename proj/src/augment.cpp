#include "melroi/augment.hpp"

#include "melroi/errors.hpp"
#include "melroi/rng.hpp"
#include "melroi/types.hpp"

namespace melroi {

namespace {

void validate(const AugmentationConfig& cfg, const Image8& patch) {
    if (cfg.crop_size <= 0 || cfg.crop_size > patch.width || cfg.crop_size > patch.height)
        throw ConfigError("augment: crop_size " + std::to_string(cfg.crop_size) +
                          " exceeds patch size");
    if (cfg.hflip_probability < 0.0 || cfg.hflip_probability > 1.0)
        throw ConfigError("augment: hflip_probability outside [0,1]");
    for (double s : cfg.channel_std)
        if (s <= 0.0) throw ConfigError("augment: channel_std must be positive");
}

AugmentedTensor standardize_crop(const Image8& patch, const AugmentationConfig& cfg, int x0,
                                 int y0, bool flip) {
    AugmentedTensor out;
    out.size = cfg.crop_size;
    out.values.resize(static_cast<std::size_t>(cfg.crop_size) * cfg.crop_size * 3);
    const double inv255 = 1.0 / 255.0;
    for (int y = 0; y < cfg.crop_size; ++y) {
        for (int x = 0; x < cfg.crop_size; ++x) {
            const int sx = flip ? x0 + cfg.crop_size - 1 - x : x0 + x;
            const std::uint8_t* px = patch.at(sx, y0 + y);
            float* dst = &out.values[(static_cast<std::size_t>(y) * cfg.crop_size + x) * 3];
            for (int c = 0; c < 3; ++c) {
                const double v = px[c] * inv255;
                dst[c] = static_cast<float>((v - cfg.channel_mean[c]) / cfg.channel_std[c]);
            }
        }
    }
    return out;
}

} // namespace

AugmentedTensor augment(const Image8& patch, const AugmentationConfig& cfg,
                        std::uint64_t draw_index) {
    validate(cfg, patch);
    Rng rng(seed_for(cfg.rng_seed, "augment", draw_index));
    const int max_x = patch.width - cfg.crop_size;
    const int max_y = patch.height - cfg.crop_size;
    const int x0 = max_x > 0 ? static_cast<int>(rng.uniform_int(0, max_x)) : 0;
    const int y0 = max_y > 0 ? static_cast<int>(rng.uniform_int(0, max_y)) : 0;
    const bool flip = rng.bernoulli(cfg.hflip_probability);
    return standardize_crop(patch, cfg, x0, y0, flip);
}

AugmentedTensor standardize(const Image8& patch, const AugmentationConfig& cfg) {
    AugmentationConfig full = cfg;
    full.crop_size = std::min(patch.width, patch.height);
    validate(full, patch);
    return standardize_crop(patch, full, 0, 0, false);
}

} // namespace melroi
