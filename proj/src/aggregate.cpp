#include "melroi/aggregate.hpp"

#include <algorithm>
#include <cmath>

namespace melroi {

std::pair<SlideLabel, VoteSummary> classify_slide(const std::vector<PatchRecord>& scored) {
    VoteSummary votes;
    long total = 0;
    for (const PatchRecord& rec : scored) {
        if (!rec.scores) continue;
        ++total;
        switch (rec.scores->argmax()) {
            case PatchClass::Melanoma: ++votes.n_mel; break;
            case PatchClass::Nevus: ++votes.n_nev; break;
            case PatchClass::Other: ++votes.n_other; break;
        }
    }
    if (total == 0) throw EmptySlideError("classify_slide: no scored patches");
    SlideLabel label;
    if (votes.n_mel > votes.n_nev) {
        label = SlideLabel::Melanoma;
    } else if (votes.n_nev > votes.n_mel) {
        label = SlideLabel::Nevus;
    } else {
        label = SlideLabel::Melanoma;
        votes.tie_flag = true;
    }
    return {label, votes};
}

std::vector<RankedPatch> rank_patches(const std::vector<PatchRecord>& scored,
                                      SlideLabel slide_label) {
    std::vector<RankedPatch> ranked;
    for (const PatchRecord& rec : scored) {
        if (!rec.scores) continue;
        const double s = slide_label == SlideLabel::Melanoma ? rec.scores->s_mel
                                                             : rec.scores->s_nev;
        ranked.push_back({rec.grid_x, rec.grid_y, s});
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedPatch& a, const RankedPatch& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::pair(a.grid_y, a.grid_x) < std::pair(b.grid_y, b.grid_x);
    });
    return ranked;
}

std::set<PatchKey> select_roi(const std::vector<RankedPatch>& ranked, double beta) {
    const long n = static_cast<long>(ranked.size());
    long k = std::llround(static_cast<double>(n) * beta); // half away from zero
    k = std::clamp(k, 0L, n);
    std::set<PatchKey> roi;
    for (long i = 0; i < k; ++i) roi.emplace(ranked[i].grid_x, ranked[i].grid_y);
    return roi;
}

} // namespace melroi
