#pragma once

#include <array>
#include <vector>

#include "melroi/image.hpp"

namespace melroi {

// H&E stain basis in optical-density space. stain_matrix is row-major 3x2;
// column 0 is the hematoxylin-like vector (higher blue OD), column 1 the
// eosin-like one. Columns are unit-norm with nonnegative entries.
struct StainProfile {
    std::array<double, 6> stain_matrix{};
    std::array<double, 2> max_concentrations{};

    double column_norm(int col) const;
};

// Ruifrok's H and E OD vectors, normalized; max concentrations 1.9 / 1.0.
StainProfile default_reference_profile();

// Throws DegenerateStains when the two columns are parallel within 1e-6.
void validate_profile(const StainProfile& profile);

// Least-squares deconvolution matrix, row-major 2x3: conc = pinv * od.
std::array<float, 6> deconvolution_matrix(const StainProfile& profile);

struct ConcentrationPlanes {
    int width = 0;
    int height = 0;
    std::vector<float> h;
    std::vector<float> e;
};

// Per-pixel stain concentrations of an RGB image under the given profile.
ConcentrationPlanes compute_concentrations(const Planes8& planes, const StainProfile& profile);

// Macenko-style estimation from a pixel sample:
//   1. OD = -log10((I+1)/256) per channel
//   2. drop pixels with any OD component < 0.15
//   3. two leading right-singular directions of the OD cloud
//   4. 1st/99th percentile angle directions, sign-fixed nonnegative,
//      hematoxylin-like column first
//   5. concentrations by least squares; per-stain 99th percentile maxima
// Throws InsufficientTissue (<1000 usable pixels) or DegenerateStains
// (rank-1 OD cloud).
StainProfile estimate_stains(const Planes8& sample);

// Deconvolve against `source`, rescale concentrations by reference/source
// maxima, re-render through the reference stain matrix.
Image8 normalize_patch(const Image8& patch, const StainProfile& source,
                       const StainProfile& reference);

// Renders an image from concentration planes (used by the synthetic-stain
// tests and the generator).
Image8 render_concentrations(const ConcentrationPlanes& conc, const StainProfile& profile);

} // namespace melroi
