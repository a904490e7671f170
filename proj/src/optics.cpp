#include "melroi/optics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "melroi/errors.hpp"

namespace melroi {

namespace {

constexpr double kUndefined = std::numeric_limits<double>::infinity();

double dist(const OpticsPoint& a, const OpticsPoint& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

} // namespace

ReachabilityPlot optics_order(const std::vector<OpticsPoint>& points, int min_pts, double eps) {
    if (min_pts < 2) throw ConfigError("optics_order: min_pts must be >= 2");
    const int n = static_cast<int>(points.size());
    ReachabilityPlot plot;
    plot.core_distance.assign(n, kUndefined);
    if (n < min_pts) {
        plot.single_cluster_fallback = true;
        for (int i = 0; i < n; ++i) {
            plot.ordering.push_back(i);
            plot.reachability.push_back(kUndefined);
        }
        return plot;
    }

    // Neighborhoods within eps (excluding self); core distance counts the
    // point itself as its first neighbor.
    std::vector<std::vector<int>> neighbors(n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> dists;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = dist(points[i], points[j]);
            if (d <= eps) {
                neighbors[i].push_back(j);
                dists.push_back(d);
            }
        }
        if (static_cast<int>(dists.size()) >= min_pts - 1) {
            std::nth_element(dists.begin(), dists.begin() + (min_pts - 2), dists.end());
            plot.core_distance[i] = dists[min_pts - 2];
        }
    }

    std::vector<bool> processed(n, false);
    std::vector<double> reach(n, kUndefined);
    std::vector<bool> seeded(n, false);

    auto update_seeds = [&](int p) {
        if (plot.core_distance[p] == kUndefined) return;
        for (int o : neighbors[p]) {
            if (processed[o]) continue;
            const double new_reach = std::max(plot.core_distance[p], dist(points[p], points[o]));
            if (new_reach < reach[o]) reach[o] = new_reach;
            seeded[o] = true;
        }
    };

    auto pop_min_seed = [&]() -> int {
        int best = -1;
        for (int i = 0; i < n; ++i) {
            if (!seeded[i] || processed[i]) continue;
            if (best == -1 || reach[i] < reach[best]) best = i; // ties keep lower index
        }
        return best;
    };

    for (int start = 0; start < n; ++start) {
        if (processed[start]) continue;
        processed[start] = true;
        plot.ordering.push_back(start);
        plot.reachability.push_back(kUndefined);
        update_seeds(start);
        for (;;) {
            const int j = pop_min_seed();
            if (j == -1) break;
            processed[j] = true;
            seeded[j] = false;
            plot.ordering.push_back(j);
            plot.reachability.push_back(reach[j]);
            update_seeds(j);
        }
    }
    return plot;
}

std::vector<std::vector<int>> extract_clusters(const ReachabilityPlot& plot, int min_pts,
                                               double t) {
    (void)min_pts;
    std::vector<std::vector<int>> clusters;
    if (plot.single_cluster_fallback) {
        if (!plot.ordering.empty())
            clusters.emplace_back(plot.ordering.begin(), plot.ordering.end());
        return clusters;
    }
    int current = -1;
    for (std::size_t pos = 0; pos < plot.ordering.size(); ++pos) {
        const int idx = plot.ordering[pos];
        const double r = plot.reachability[pos];
        if (r > t) {
            if (plot.core_distance[idx] <= t) {
                clusters.push_back({idx});
                current = static_cast<int>(clusters.size()) - 1;
            }
            // else: noise
        } else {
            if (current == -1) {
                clusters.push_back({idx});
                current = 0;
            } else {
                clusters[current].push_back(idx);
            }
        }
    }
    return clusters;
}

std::vector<PatchKey> largest_roi_cluster(const std::vector<PatchKey>& roi_patches,
                                          int min_pts, double eps, double threshold) {
    std::vector<PatchKey> keys = roi_patches;
    std::sort(keys.begin(), keys.end(), [](const PatchKey& a, const PatchKey& b) {
        return std::pair(a.second, a.first) < std::pair(b.second, b.first);
    });
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    if (keys.empty()) return {};

    std::vector<OpticsPoint> pts(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i)
        pts[i] = {static_cast<double>(keys[i].first), static_cast<double>(keys[i].second)};

    const ReachabilityPlot plot = optics_order(pts, min_pts, eps);
    std::vector<std::vector<int>> clusters = extract_clusters(plot, min_pts, threshold);

    std::vector<bool> in_cluster(keys.size(), false);
    for (const auto& c : clusters)
        for (int idx : c) in_cluster[idx] = true;
    for (std::size_t i = 0; i < keys.size(); ++i)
        if (!in_cluster[i]) clusters.push_back({static_cast<int>(i)});

    // Keys are sorted by (gy, gx), so the smallest index in a cluster is
    // its lexicographically smallest patch.
    const std::vector<int>* best = nullptr;
    int best_min_idx = 0;
    for (const auto& c : clusters) {
        const int min_idx = *std::min_element(c.begin(), c.end());
        if (!best || c.size() > best->size() ||
            (c.size() == best->size() && min_idx < best_min_idx)) {
            best = &c;
            best_min_idx = min_idx;
        }
    }
    std::vector<PatchKey> out;
    for (int idx : *best) out.push_back(keys[idx]);
    std::sort(out.begin(), out.end(), [](const PatchKey& a, const PatchKey& b) {
        return std::pair(a.second, a.first) < std::pair(b.second, b.first);
    });
    return out;
}

} // namespace melroi
