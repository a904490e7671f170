#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "melroi/types.hpp"

namespace melroi {

// Patch-grid IoU: |A intersect B| / |A union B|. Two empty sets agree
// vacuously (1); exactly one empty set yields 0.
double patch_iou(const std::set<PatchKey>& annotated, const std::set<PatchKey>& predicted);

// rows = true label, cols = predicted; index order (Melanoma, Nevus).
struct ConfusionMatrix {
    std::array<std::array<long, 2>, 2> counts{};

    long total() const {
        return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
    }
};

ConfusionMatrix confusion_matrix(const std::vector<std::pair<SlideLabel, SlideLabel>>& true_pred);

struct PerSlideEval {
    std::string slide_id;
    std::optional<SlideLabel> true_label;
    SlideLabel predicted_label = SlideLabel::Melanoma;
    long n_mel = 0;
    long n_nev = 0;
    long n_other = 0;
    double beta = 0.0;
    long roi_size = 0;
    std::optional<double> iou;
    bool tie_flag = false;
};

struct EvalReport {
    double patch_accuracy = 0.0;
    double slide_accuracy = 0.0;
    double mean_iou = 0.0;
    long patches_evaluated = 0;
    long slides_evaluated = 0;
    long slides_with_iou = 0;
    double split_fraction = 0.0;
    std::uint64_t seed = 0;
    ConfusionMatrix confusion;
    std::vector<PerSlideEval> per_slide; // sorted by slide_id
    std::vector<std::string> warnings;
};

struct MetricSummary {
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Normal-approximation 95% interval: mean +/- 1.96 * s / sqrt(n), with s
// the sample standard deviation over repeats.
MetricSummary summarize_repeats(const std::vector<double>& values);

struct RobustnessRow {
    double fraction = 0.0;
    MetricSummary patch_accuracy;
    MetricSummary slide_accuracy;
    MetricSummary iou;
};

struct RobustnessSummary {
    std::vector<RobustnessRow> rows;
    int n_repeats = 0;
    std::uint64_t base_seed = 0;
};

} // namespace melroi
