#pragma once

#include <array>
#include <string>

#include "melroi/image.hpp"
#include "melroi/stain.hpp"
#include "melroi/tissue.hpp"

namespace melroi {

inline constexpr int kFeatureCount = 40;

// Hand-designed stand-in for learned CNN features. Every entry is either a
// count fraction or a moment of an integer-quantized per-pixel quantity, so
// the vector is exactly invariant under horizontal flip and independent of
// pixel visit order. Layout:
//   0-8   R/G/B mean, std, skewness
//   9-14  H/E stain-concentration mean, std, skewness
//   15-22 8-bin hue histogram
//   23-30 8-bin H-concentration histogram over [0,4)
//   31    edge density (gray-gradient magnitude > 0.1)
//   32    tissue fraction
//   33-36 saturation mean/std, value mean/std
//   37-38 luma mean/std
//   39    dark fraction (max channel < 128)
using PatchFeatures = std::array<double, kFeatureCount>;

extern const std::array<const char*, kFeatureCount> kFeatureNames;

// `patch` is the stain-normalized RGB patch; concentrations are taken
// against the reference profile it was normalized to.
PatchFeatures extract_features(const Image8& patch, const StainProfile& reference,
                               const TissueThresholds& thresholds = {});

} // namespace melroi
