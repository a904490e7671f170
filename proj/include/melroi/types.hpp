#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "melroi/errors.hpp"
#include "melroi/image.hpp"

namespace melroi {

inline constexpr int kPatchSize = 256;

enum class SlideLabel : std::uint8_t { Melanoma = 0, Nevus = 1 };
enum class PatchClass : std::uint8_t { Melanoma = 0, Nevus = 1, Other = 2 };
enum class Magnification : std::uint8_t { X20 = 0 };

inline const char* to_string(SlideLabel l) {
    return l == SlideLabel::Melanoma ? "melanoma" : "nevus";
}
inline const char* to_string(PatchClass c) {
    switch (c) {
        case PatchClass::Melanoma: return "melanoma";
        case PatchClass::Nevus: return "nevus";
        default: return "other";
    }
}
std::optional<SlideLabel> slide_label_from_string(const std::string& s);
std::optional<PatchClass> patch_class_from_string(const std::string& s);

inline PatchClass patch_class_of(SlideLabel l) {
    return l == SlideLabel::Melanoma ? PatchClass::Melanoma : PatchClass::Nevus;
}

struct SlideRaster {
    std::string slide_id;
    Image8 pixels; // RGB8
    Magnification magnification_tag = Magnification::X20;
    std::optional<SlideLabel> true_label;
};

// Per-patch class probabilities. Components must sum to 1 within 1e-9.
struct ScoreTriplet {
    double s_mel = 0.0;
    double s_nev = 0.0;
    double s_other = 0.0;

    bool valid() const {
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        return in01(s_mel) && in01(s_nev) && in01(s_other) &&
               std::fabs(s_mel + s_nev + s_other - 1.0) <= 1e-9;
    }
    // Ties resolved toward the lower class index (melanoma, nevus, other).
    PatchClass argmax() const {
        if (s_mel >= s_nev && s_mel >= s_other) return PatchClass::Melanoma;
        if (s_nev >= s_other) return PatchClass::Nevus;
        return PatchClass::Other;
    }
};

struct PatchGrid {
    std::string slide_id;
    int patch_size = kPatchSize;
    int cols = 0;
    int rows = 0;

    int patch_count() const { return cols * rows; }
    bool in_range(int gx, int gy) const { return gx >= 0 && gx < cols && gy >= 0 && gy < rows; }
};

struct PatchRecord {
    int grid_x = 0;
    int grid_y = 0;
    bool tissue = false;
    std::optional<PatchClass> label;
    std::optional<ScoreTriplet> scores;
    bool in_annotation = false;
};

using PatchKey = std::pair<int, int>; // (grid_x, grid_y)

struct SlideResult {
    std::string slide_id;
    SlideLabel predicted_label = SlideLabel::Melanoma;
    long n_mel = 0;
    long n_nev = 0;
    double beta = 0.0;
    std::set<PatchKey> roi_patches;
    std::optional<double> iou;
    bool tie_flag = false;
};

} // namespace melroi
