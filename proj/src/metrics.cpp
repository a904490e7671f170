#include "melroi/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace melroi {

double patch_iou(const std::set<PatchKey>& annotated, const std::set<PatchKey>& predicted) {
    if (annotated.empty() && predicted.empty()) return 1.0;
    std::size_t inter = 0;
    for (const PatchKey& k : annotated) inter += predicted.count(k);
    const std::size_t uni = annotated.size() + predicted.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

ConfusionMatrix confusion_matrix(const std::vector<std::pair<SlideLabel, SlideLabel>>& true_pred) {
    ConfusionMatrix m;
    for (const auto& [truth, pred] : true_pred)
        ++m.counts[static_cast<int>(truth)][static_cast<int>(pred)];
    return m;
}

MetricSummary summarize_repeats(const std::vector<double>& values) {
    MetricSummary s;
    const std::size_t n = values.size();
    if (n == 0) return s;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    s.mean = mean;
    if (n == 1) {
        s.ci_low = s.ci_high = mean;
        return s;
    }
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    const double half = 1.96 * std::sqrt(var / static_cast<double>(n));
    s.ci_low = mean - half;
    s.ci_high = mean + half;
    return s;
}

} // namespace melroi
