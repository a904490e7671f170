#pragma once

#include <vector>

#include "melroi/types.hpp"

namespace melroi {

struct OpticsPoint {
    double x = 0.0;
    double y = 0.0;
};

// OPTICS output. reachability[i] belongs to ordering[i]; infinity stands
// for "undefined" (first point of each density-connected component).
struct ReachabilityPlot {
    std::vector<int> ordering;
    std::vector<double> reachability;
    std::vector<double> core_distance; // indexed by point, not by position
    bool single_cluster_fallback = false;
};

// Standard OPTICS with Euclidean distance. Core distance is the distance
// to the min_pts-th nearest point counting the point itself (the classic
// DBSCAN |N_eps| >= min_pts convention). Deterministic: unprocessed points
// are seeded in input order and queue ties resolve to the lower index.
// Fewer than min_pts points sets single_cluster_fallback.
ReachabilityPlot optics_order(const std::vector<OpticsPoint>& points, int min_pts, double eps);

// DBSCAN-equivalent flat clusters from a reachability threshold t <= eps.
// Noise points appear in no cluster.
std::vector<std::vector<int>> extract_clusters(const ReachabilityPlot& plot,
                                               int min_pts, double t);

// OPTICS over patch centers in grid units. Noise points count as singleton
// clusters so a layout of isolated patches still yields a largest cluster;
// ties go to the cluster containing the lexicographically smallest
// (grid_y, grid_x). Result sorted by (grid_y, grid_x).
std::vector<PatchKey> largest_roi_cluster(const std::vector<PatchKey>& roi_patches,
                                          int min_pts, double eps, double threshold);

} // namespace melroi
