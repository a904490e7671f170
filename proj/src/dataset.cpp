#include "melroi/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "melroi/rng.hpp"

namespace melroi {

void label_patches(const PatchGrid& grid, std::vector<PatchRecord>& records,
                   SlideLabel slide_label, const LabelingParams& params, std::uint64_t seed) {
    const PatchClass tumor_class = patch_class_of(slide_label);
    std::vector<PatchKey> annotated;
    long annotated_tissue = 0;
    for (PatchRecord& rec : records) {
        rec.label.reset();
        if (rec.in_annotation) {
            annotated.emplace_back(rec.grid_x, rec.grid_y);
            if (rec.tissue) {
                rec.label = tumor_class;
                ++annotated_tissue;
            }
        }
    }

    // Tissue patches clear of every annotated patch by the Chebyshev buffer
    // are Other candidates; closer unannotated tissue stays unlabeled.
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const PatchRecord& rec = records[i];
        if (!rec.tissue || rec.in_annotation) continue;
        int min_dist = grid.cols + grid.rows;
        for (const auto& [ax, ay] : annotated) {
            const int d = std::max(std::abs(rec.grid_x - ax), std::abs(rec.grid_y - ay));
            min_dist = std::min(min_dist, d);
        }
        if (annotated.empty() || min_dist >= params.buffer_distance) eligible.push_back(i);
    }

    const long cap = static_cast<long>(std::floor(params.other_cap_ratio *
                                                  static_cast<double>(annotated_tissue) + 1e-9));
    std::sort(eligible.begin(), eligible.end(), [&](std::size_t a, std::size_t b) {
        return std::pair(records[a].grid_y, records[a].grid_x) <
               std::pair(records[b].grid_y, records[b].grid_x);
    });
    Rng rng(seed);
    rng.shuffle(eligible);
    const std::size_t take = std::min<std::size_t>(eligible.size(), static_cast<std::size_t>(std::max(cap, 0L)));
    for (std::size_t i = 0; i < take; ++i) records[eligible[i]].label = PatchClass::Other;
}

PatchDataset assemble_dataset(const std::vector<DatasetEntry>& entries, std::string provenance) {
    PatchDataset ds;
    ds.entries = entries;
    ds.provenance = std::move(provenance);
    std::sort(ds.entries.begin(), ds.entries.end(), [](const DatasetEntry& a, const DatasetEntry& b) {
        return std::tie(a.slide_id, a.grid_y, a.grid_x) < std::tie(b.slide_id, b.grid_y, b.grid_x);
    });
    for (const DatasetEntry& e : ds.entries) ++ds.class_counts[static_cast<int>(e.label)];
    return ds;
}

namespace {

// Per-class id lists, sorted first so the seeded shuffle is invariant to
// the caller's slide ordering.
std::map<int, std::vector<std::string>> by_class(const std::vector<SlideTag>& slides) {
    std::map<int, std::vector<std::string>> out;
    for (const SlideTag& s : slides) out[static_cast<int>(s.label)].push_back(s.slide_id);
    for (auto& [cls, ids] : out) std::sort(ids.begin(), ids.end());
    return out;
}

} // namespace

SplitResult stratified_split(const std::vector<SlideTag>& slides, double fraction,
                             std::uint64_t seed) {
    SplitResult result;
    for (auto& [cls, ids] : by_class(slides)) {
        Rng rng(seed_for(seed, "split", static_cast<std::uint64_t>(cls)));
        rng.shuffle(ids);
        const long n = static_cast<long>(ids.size());
        const long train_n = std::llround(fraction * static_cast<double>(n));
        if (train_n <= 0 || train_n >= n)
            throw StratificationError("class " + std::string(to_string(static_cast<SlideLabel>(cls))) +
                                      " (" + std::to_string(n) + " slides) vanishes from one side at fraction " +
                                      std::to_string(fraction));
        result.train_ids.insert(result.train_ids.end(), ids.begin(), ids.begin() + train_n);
        result.test_ids.insert(result.test_ids.end(), ids.begin() + train_n, ids.end());
    }
    std::sort(result.train_ids.begin(), result.train_ids.end());
    std::sort(result.test_ids.begin(), result.test_ids.end());
    return result;
}

std::vector<std::string> stratified_subsample(const std::vector<SlideTag>& slides,
                                              double fraction, std::uint64_t seed) {
    std::vector<std::string> picked;
    for (auto& [cls, ids] : by_class(slides)) {
        Rng rng(seed_for(seed, "subsample", static_cast<std::uint64_t>(cls)));
        rng.shuffle(ids);
        const long n = static_cast<long>(ids.size());
        const long take = std::llround(fraction * static_cast<double>(n));
        if (take <= 0)
            throw StratificationError("class " + std::string(to_string(static_cast<SlideLabel>(cls))) +
                                      " has no slides at fraction " + std::to_string(fraction));
        picked.insert(picked.end(), ids.begin(), ids.begin() + std::min(take, n));
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

} // namespace melroi
