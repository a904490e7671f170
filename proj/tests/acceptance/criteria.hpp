#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "melroi/aggregate.hpp"
#include "melroi/annotations.hpp"
#include "melroi/boundary.hpp"
#include "melroi/classifier.hpp"
#include "melroi/config.hpp"
#include "melroi/metrics.hpp"
#include "melroi/optics.hpp"
#include "melroi/patch_csv.hpp"
#include "melroi/pipeline.hpp"
#include "melroi/rng.hpp"
#include "melroi/stain.hpp"

namespace acceptance {

struct Result {
    bool ok = true;
    std::string detail = "ok";
};

inline std::string& cli_path() {
    static std::string path = "./melroi";
    return path;
}

inline Result fail(const std::string& why) { return {false, why}; }

namespace fs = std::filesystem;
using namespace melroi;

// ---------------------------------------------------------------- helpers

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("melroi_acceptance_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

inline int run_cli(const std::string& args) {
    const std::string cmd = "\"" + cli_path() + "\" " + args + " >/dev/null";
    const int rc = std::system(cmd.c_str());
    return rc == -1 ? -1 : WEXITSTATUS(rc);
}

// ------------------------------------------------------------ criterion 1

inline Result criterion_iou() {
    Timer timer;
    Rng rng(0xA11CE);
    for (int trial = 0; trial < 1000; ++trial) {
        const int cols = static_cast<int>(rng.uniform_int(1, 50));
        const int rows = static_cast<int>(rng.uniform_int(1, 50));
        std::set<PatchKey> a, b;
        const double pa = rng.uniform(0.0, 0.6);
        const double pb = rng.uniform(0.0, 0.6);
        for (int y = 0; y < rows; ++y)
            for (int x = 0; x < cols; ++x) {
                if (rng.uniform() < pa) a.emplace(x, y);
                if (rng.uniform() < pb) b.emplace(x, y);
            }
        // Brute-force oracle over the dense grid.
        long inter = 0, uni = 0;
        for (int y = 0; y < rows; ++y)
            for (int x = 0; x < cols; ++x) {
                const bool in_a = a.count({x, y}) != 0;
                const bool in_b = b.count({x, y}) != 0;
                if (in_a && in_b) ++inter;
                if (in_a || in_b) ++uni;
            }
        const double expected = uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
        if (patch_iou(a, b) != expected)
            return fail("mismatch on trial " + std::to_string(trial));
    }
    if (patch_iou({}, {}) != 1.0) return fail("empty/empty convention violated");
    if (patch_iou({{0, 0}}, {}) != 0.0) return fail("one-empty convention violated");
    const double secs = timer.seconds();
    if (secs >= 10.0) return fail("took " + std::to_string(secs) + "s (limit 10s)");
    return {true, "1000 grids exact, " + std::to_string(secs).substr(0, 4) + "s"};
}

// ------------------------------------------------------------ criterion 2

inline std::vector<PatchRecord> random_scored_records(Rng& rng, int n) {
    std::vector<PatchRecord> records;
    for (int i = 0; i < n; ++i) {
        PatchRecord r;
        r.grid_x = i % 25;
        r.grid_y = i / 25;
        r.tissue = true;
        double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
        const double s = a + b + c;
        if (s == 0.0) a = 1.0;
        r.scores = ScoreTriplet{a / (a + b + c), b / (a + b + c), c / (a + b + c)};
        records.push_back(r);
    }
    return records;
}

inline Result criterion_topk() {
    Rng rng(0xBEE);
    // |roi| = round(n * beta), half away from zero.
    for (int trial = 0; trial < 300; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(1, 400));
        const auto records = random_scored_records(rng, n);
        const auto ranked = rank_patches(records, SlideLabel::Melanoma);
        const double beta = rng.uniform();
        const auto roi = select_roi(ranked, beta);
        const long expected = std::llround(static_cast<double>(n) * beta);
        if (static_cast<long>(roi.size()) != expected)
            return fail("|roi| != round(n*beta) at trial " + std::to_string(trial));
    }
    // The worked top-20% case: n=250, beta=0.2 -> exactly 50.
    {
        Rng r2(0x20);
        const auto records = random_scored_records(r2, 250);
        const auto ranked = rank_patches(records, SlideLabel::Melanoma);
        if (select_roi(ranked, 0.2).size() != 50) return fail("n=250, beta=0.2 did not select 50");
        if (!select_roi(ranked, 0.0).empty()) return fail("beta=0 not empty");
        if (select_roi(ranked, 1.0).size() != 250) return fail("beta=1 not everything");
    }
    // Monotonicity over nested betas on 100 random score vectors.
    for (int trial = 0; trial < 100; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(1, 200));
        const auto records = random_scored_records(rng, n);
        const auto ranked = rank_patches(records, SlideLabel::Nevus);
        double b1 = rng.uniform(), b2 = rng.uniform();
        if (b1 > b2) std::swap(b1, b2);
        const auto r1 = select_roi(ranked, b1);
        const auto r2 = select_roi(ranked, b2);
        if (!std::includes(r2.begin(), r2.end(), r1.begin(), r1.end()))
            return fail("roi(b1) not within roi(b2) at trial " + std::to_string(trial));
    }
    return {true, "round rule, worked 20% case, monotone nesting"};
}

// ------------------------------------------------------------ criterion 3

inline Result criterion_vote() {
    Rng rng(0xC0DE);
    for (int trial = 0; trial < 500; ++trial) {
        int n = static_cast<int>(rng.uniform_int(1, 120));
        std::vector<PatchRecord> records = random_scored_records(rng, n);
        const bool force_tie = trial % 5 == 0;
        if (force_tie) {
            // Rebuild with equal melanoma/nevus argmax counts.
            const int half = static_cast<int>(rng.uniform_int(0, 20));
            records.clear();
            int idx = 0;
            auto push = [&](double m, double v, double o) {
                PatchRecord r;
                r.grid_x = idx % 25;
                r.grid_y = idx / 25;
                ++idx;
                r.tissue = true;
                r.scores = ScoreTriplet{m, v, o};
                records.push_back(r);
            };
            for (int i = 0; i < half; ++i) push(0.7, 0.2, 0.1);
            for (int i = 0; i < half; ++i) push(0.2, 0.7, 0.1);
            const int others = static_cast<int>(rng.uniform_int(0, 30));
            for (int i = 0; i < others; ++i) push(0.1, 0.2, 0.7);
            if (records.empty()) push(0.4, 0.4, 0.2); // degenerate tie on one patch
        }
        const auto [label, votes] = classify_slide(records);

        // Permutation invariance.
        std::vector<PatchRecord> shuffled = records;
        rng.shuffle(shuffled);
        const auto [label2, votes2] = classify_slide(shuffled);
        if (label2 != label || votes2.n_mel != votes.n_mel || votes2.n_nev != votes.n_nev ||
            votes2.tie_flag != votes.tie_flag)
            return fail("permutation changed the vote at trial " + std::to_string(trial));

        // Argmax-preserving Other-score perturbations.
        std::vector<PatchRecord> perturbed = records;
        for (PatchRecord& r : perturbed) {
            ScoreTriplet& s = *r.scores;
            const PatchClass before = s.argmax();
            if (before == PatchClass::Other) {
                const double take = 0.5 * std::min(s.s_mel, s.s_nev) * rng.uniform();
                if (s.s_mel <= s.s_nev) s.s_mel -= take;
                else s.s_nev -= take;
                s.s_other += take;
            } else {
                const double give = s.s_other * rng.uniform();
                s.s_other -= give;
                if (before == PatchClass::Melanoma) s.s_mel += give;
                else s.s_nev += give;
            }
            if (s.argmax() != before) return fail("perturbation broke its own invariant");
        }
        const auto [label3, votes3] = classify_slide(perturbed);
        if (label3 != label || votes3.n_mel != votes.n_mel || votes3.n_nev != votes.n_nev ||
            votes3.tie_flag != votes.tie_flag)
            return fail("Other-score perturbation changed the vote at trial " +
                        std::to_string(trial));

        if (votes.n_mel == votes.n_nev) {
            if (label != SlideLabel::Melanoma || !votes.tie_flag)
                return fail("tie not flagged as melanoma at trial " + std::to_string(trial));
        } else if (votes.tie_flag) {
            return fail("tie flag on a non-tie at trial " + std::to_string(trial));
        }
    }
    return {true, "500 vote tables incl. forced ties"};
}

// ------------------------------------------------------------ criterion 4

// Concentration ranges are kept low enough that every rendered OD stays
// inside the representable gamut (byte > 0); out-of-gamut pixels clamp and
// would break round-trip identities for reasons unrelated to the algorithm.
inline ConcentrationPlanes random_concentrations(Rng& rng, int w, int h, double axis_fraction) {
    ConcentrationPlanes conc;
    conc.width = w;
    conc.height = h;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    conc.h.resize(n);
    conc.e.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = rng.uniform();
        double ch, ce;
        if (pick < axis_fraction / 2) {
            ch = rng.uniform(0.3, 1.4);
            ce = rng.uniform(0.0, 0.02);
        } else if (pick < axis_fraction) {
            ch = rng.uniform(0.0, 0.02);
            ce = rng.uniform(0.3, 1.4);
        } else {
            ch = rng.uniform(0.05, 0.9);
            ce = rng.uniform(0.05, 0.9);
        }
        conc.h[i] = static_cast<float>(ch);
        conc.e[i] = static_cast<float>(ce);
    }
    return conc;
}

inline StainProfile profile_from_columns(const double h[3], const double e[3]) {
    StainProfile p;
    const double hn = std::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
    const double en = std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
    for (int r = 0; r < 3; ++r) {
        p.stain_matrix[r * 2 + 0] = h[r] / hn;
        p.stain_matrix[r * 2 + 1] = e[r] / en;
    }
    p.max_concentrations = {1.8, 1.8};
    return p;
}

inline Result criterion_stain() {
    Timer timer;
    Rng rng(0x57A1);
    const StainProfile ref = default_reference_profile();

    // Identity: source == reference changes pixels by at most 2 per channel.
    {
        const ConcentrationPlanes conc = random_concentrations(rng, 256, 256, 0.2);
        StainProfile src = ref;
        src.max_concentrations = {1.9, 1.0};
        const Image8 img = render_concentrations(conc, src);
        const Image8 out = normalize_patch(img, src, src);
        int max_delta = 0;
        for (std::size_t i = 0; i < img.data.size(); ++i)
            max_delta = std::max(max_delta, std::abs(static_cast<int>(img.data[i]) -
                                                     static_cast<int>(out.data[i])));
        if (max_delta > 2) return fail("identity case moved a channel by " + std::to_string(max_delta));
    }
    // White stays white.
    {
        const Image8 white(64, 64, 3, 255);
        const Image8 out = normalize_patch(white, ref, ref);
        for (std::size_t i = 0; i < out.data.size(); ++i)
            if (out.data[i] != 255) return fail("white pixels did not stay white");
    }
    // Paired renditions of one concentration field normalize together.
    {
        const double h1[3] = {0.55, 0.75, 0.37}, e1[3] = {0.10, 0.95, 0.28};
        const double h2[3] = {0.72, 0.62, 0.31}, e2[3] = {0.05, 0.99, 0.14};
        const StainProfile p1 = profile_from_columns(h1, e1);
        const StainProfile p2 = profile_from_columns(h2, e2);
        const ConcentrationPlanes conc = random_concentrations(rng, 192, 192, 0.3);
        const Image8 img1 = render_concentrations(conc, p1);
        const Image8 img2 = render_concentrations(conc, p2);
        const Image8 n1 = normalize_patch(img1, p1, ref);
        const Image8 n2 = normalize_patch(img2, p2, ref);
        auto mean_l2 = [](const Image8& a, const Image8& b) {
            double acc = 0.0;
            const std::size_t n = a.pixel_count();
            for (std::size_t i = 0; i < n; ++i) {
                double d2 = 0.0;
                for (int c = 0; c < 3; ++c) {
                    const double d = static_cast<double>(a.data[i * 3 + c]) - b.data[i * 3 + c];
                    d2 += d * d;
                }
                acc += std::sqrt(d2);
            }
            return acc / static_cast<double>(n);
        };
        const double before = mean_l2(img1, img2);
        const double after = mean_l2(n1, n2);
        if (!(after <= 0.5 * before))
            return fail("paired-rendition distance only fell from " + format_double(before) +
                        " to " + format_double(after));
    }
    // Stain-matrix recovery within 0.02 per entry. Pure-stain pixels are
    // kept bright and above the OD floor so both angle extremes survive the
    // filtering step.
    for (int trial = 0; trial < 3; ++trial) {
        const double hcol[3] = {0.55 + 0.04 * trial, 0.70, 0.46};
        const double ecol[3] = {0.30, 0.90, 0.32 + 0.03 * trial};
        const StainProfile truth = profile_from_columns(hcol, ecol);
        ConcentrationPlanes conc;
        conc.width = 384;
        conc.height = 384;
        const std::size_t n = static_cast<std::size_t>(conc.width) * conc.height;
        conc.h.resize(n);
        conc.e.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double pick = rng.uniform();
            double ch, ce;
            if (pick < 0.2) {
                ch = rng.uniform(0.9, 1.3);
                ce = rng.uniform(0.0, 0.015);
            } else if (pick < 0.4) {
                ch = rng.uniform(0.0, 0.015);
                ce = rng.uniform(0.9, 1.3);
            } else {
                ch = rng.uniform(0.1, 0.8);
                ce = rng.uniform(0.1, 0.8);
            }
            conc.h[i] = static_cast<float>(ch);
            conc.e[i] = static_cast<float>(ce);
        }
        const Image8 img = render_concentrations(conc, truth);
        const StainProfile est = estimate_stains(to_planes(img));
        for (int i = 0; i < 6; ++i) {
            const double err = std::fabs(est.stain_matrix[i] - truth.stain_matrix[i]);
            if (err > 0.02)
                return fail("stain entry " + std::to_string(i) + " off by " + format_double(err));
        }
    }
    const double secs = timer.seconds();
    if (secs >= 60.0) return fail("took " + std::to_string(secs) + "s (limit 60s)");
    return {true, "identity<=2, pairing>=50%, recovery<=0.02, " +
                      std::to_string(secs).substr(0, 4) + "s"};
}

// ------------------------------------------------------------ criterion 5

inline Result criterion_classifier() {
    Rng rng(0x6AD);
    // Analytic gradient vs central finite differences.
    for (int inst = 0; inst < 20; ++inst) {
        const int n = static_cast<int>(rng.uniform_int(4, 24));
        std::vector<PatchFeatures> xs(n);
        std::vector<PatchClass> ys(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < kFeatureCount; ++j) xs[i][j] = rng.normal();
            ys[i] = static_cast<PatchClass>(rng.uniform_int(0, 2));
        }
        std::array<std::array<double, kFeatureCount + 1>, kClassCount> w{};
        for (auto& row : w)
            for (double& v : row) v = rng.normal() * 0.5;
        std::vector<std::size_t> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        std::array<std::array<double, kFeatureCount + 1>, kClassCount> grad{};
        loss_and_gradient(w, xs, ys, idx, &grad);
        const double eps = 1e-5;
        double max_rel = 0.0;
        for (int c = 0; c < kClassCount; ++c) {
            for (int j = 0; j <= kFeatureCount; ++j) {
                auto wp = w, wm = w;
                wp[c][j] += eps;
                wm[c][j] -= eps;
                const double fd = (loss_and_gradient(wp, xs, ys, idx, nullptr) -
                                   loss_and_gradient(wm, xs, ys, idx, nullptr)) /
                                  (2 * eps);
                const double denom = std::max(std::fabs(grad[c][j]) + std::fabs(fd), 1e-6);
                max_rel = std::max(max_rel, std::fabs(grad[c][j] - fd) / denom);
            }
        }
        if (max_rel >= 1e-4)
            return fail("gradient relative error " + format_double(max_rel) + " at instance " +
                        std::to_string(inst));
    }
    // Zero-weight cross-entropy is ln 3.
    {
        std::vector<PatchFeatures> xs(5);
        std::vector<PatchClass> ys(5, PatchClass::Nevus);
        Rng r2(5);
        for (auto& x : xs)
            for (double& v : x) v = r2.normal();
        std::array<std::array<double, kFeatureCount + 1>, kClassCount> w{};
        std::vector<std::size_t> idx{0, 1, 2, 3, 4};
        const double loss = loss_and_gradient(w, xs, ys, idx, nullptr);
        if (std::fabs(loss - std::log(3.0)) > 1e-9)
            return fail("zero-weight loss " + format_double(loss) + " != ln 3");
    }
    // Linearly separable Gaussians reach >= 0.99 training accuracy.
    {
        std::vector<PatchFeatures> xs;
        std::vector<PatchClass> ys;
        Rng r3(77);
        for (int cls = 0; cls < 3; ++cls) {
            for (int i = 0; i < 60; ++i) {
                PatchFeatures x{};
                for (int j = 0; j < kFeatureCount; ++j) x[j] = r3.normal() * 0.3;
                x[cls * 2] += 3.0;
                xs.push_back(x);
                ys.push_back(static_cast<PatchClass>(cls));
            }
        }
        TrainHyper hyper;
        hyper.epochs = 100;
        hyper.learning_rate = 0.05;
        hyper.seed = 99;
        hyper.early_stop_patience = 100; // run the full budget
        const ClassifierModel model = train(xs, ys, hyper);
        long correct = 0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (score(model, xs[i]).argmax() == ys[i]) ++correct;
        const double acc = static_cast<double>(correct) / static_cast<double>(xs.size());
        if (acc < 0.99) return fail("separable accuracy " + format_double(acc) + " < 0.99");
    }
    return {true, "gradcheck<1e-4, ln3 exact, separable>=0.99"};
}

// ------------------------------------------------------------ criterion 6

// Independent naive OPTICS: linear scans, no shared code with the library.
struct OracleOptics {
    std::vector<int> ordering;
    std::vector<double> reachability;
    std::vector<double> core_distance;
};

inline OracleOptics oracle_optics(const std::vector<OpticsPoint>& pts, int min_pts, double eps) {
    const int n = static_cast<int>(pts.size());
    const double inf = std::numeric_limits<double>::infinity();
    auto d = [&](int i, int j) {
        const double dx = pts[i].x - pts[j].x;
        const double dy = pts[i].y - pts[j].y;
        return std::sqrt(dx * dx + dy * dy);
    };
    OracleOptics out;
    out.core_distance.assign(n, inf);
    for (int i = 0; i < n; ++i) {
        std::vector<double> ds;
        for (int j = 0; j < n; ++j)
            if (j != i && d(i, j) <= eps) ds.push_back(d(i, j));
        std::sort(ds.begin(), ds.end());
        if (static_cast<int>(ds.size()) >= min_pts - 1)
            out.core_distance[i] = ds[min_pts - 2];
    }
    std::vector<bool> done(n, false);
    std::vector<double> reach(n, inf);
    std::vector<bool> seeded(n, false);
    auto expand = [&](int p) {
        if (out.core_distance[p] == inf) return;
        for (int o = 0; o < n; ++o) {
            if (done[o] || o == p || d(p, o) > eps) continue;
            const double r = std::max(out.core_distance[p], d(p, o));
            if (r < reach[o]) reach[o] = r;
            seeded[o] = true;
        }
    };
    for (int s = 0; s < n; ++s) {
        if (done[s]) continue;
        done[s] = true;
        out.ordering.push_back(s);
        out.reachability.push_back(inf);
        expand(s);
        for (;;) {
            int best = -1;
            for (int i = 0; i < n; ++i)
                if (seeded[i] && !done[i] && (best == -1 || reach[i] < reach[best])) best = i;
            if (best == -1) break;
            done[best] = true;
            seeded[best] = false;
            out.ordering.push_back(best);
            out.reachability.push_back(reach[best]);
            expand(best);
        }
    }
    return out;
}

// Union-find DBSCAN for min_pts = 2 (every non-isolated point is core).
inline std::map<int, int> oracle_dbscan_min2(const std::vector<OpticsPoint>& pts, double t) {
    const int n = static_cast<int>(pts.size());
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    auto d2 = [&](int i, int j) {
        const double dx = pts[i].x - pts[j].x;
        const double dy = pts[i].y - pts[j].y;
        return dx * dx + dy * dy;
    };
    std::vector<bool> linked(n, false);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (d2(i, j) <= t * t) {
                parent[find(i)] = find(j);
                linked[i] = linked[j] = true;
            }
    std::map<int, int> labels; // point -> cluster root; isolated points excluded (noise)
    for (int i = 0; i < n; ++i)
        if (linked[i]) labels[i] = find(i);
    return labels;
}

inline Result criterion_optics() {
    Rng rng(0x0971C5);
    for (int layout = 0; layout < 50; ++layout) {
        const int n = static_cast<int>(rng.uniform_int(5, 200));
        std::vector<OpticsPoint> pts(n);
        if (layout % 3 == 0) {
            // Clustered blobs plus stragglers.
            const int blobs = static_cast<int>(rng.uniform_int(1, 4));
            for (int i = 0; i < n; ++i) {
                const int b = static_cast<int>(rng.uniform_int(0, blobs - 1));
                const double cx = 20.0 * b, cy = 13.0 * ((b * 7) % 3);
                pts[i] = {cx + rng.normal() * 1.2, cy + rng.normal() * 1.2};
            }
        } else {
            for (auto& p : pts) p = {rng.uniform(0.0, 40.0), rng.uniform(0.0, 40.0)};
        }
        const double eps = rng.uniform(1.0, 4.0);
        const int min_pts = layout % 4 == 1 ? 3 : 2;

        const ReachabilityPlot plot = optics_order(pts, min_pts, eps);
        const OracleOptics oracle = oracle_optics(pts, min_pts, eps);
        if (plot.ordering != oracle.ordering)
            return fail("ordering mismatch on layout " + std::to_string(layout));
        if (plot.reachability != oracle.reachability)
            return fail("reachability mismatch on layout " + std::to_string(layout));
        if (plot.core_distance != oracle.core_distance)
            return fail("core distance mismatch on layout " + std::to_string(layout));

        if (min_pts == 2) {
            // Threshold extraction must equal the DBSCAN partition.
            const double t = eps;
            const auto clusters = extract_clusters(plot, min_pts, t);
            const auto labels = oracle_dbscan_min2(pts, t);
            std::map<int, int> mine;
            for (std::size_t c = 0; c < clusters.size(); ++c)
                for (int idx : clusters[c]) mine[idx] = static_cast<int>(c);
            if (mine.size() != labels.size())
                return fail("cluster membership count mismatch on layout " +
                            std::to_string(layout));
            // Same partition: equal label sets up to renaming.
            std::map<int, int> rename;
            for (const auto& [pt, root] : labels) {
                if (!mine.count(pt)) return fail("point lost from clusters");
                const int mc = mine.at(pt);
                const auto it = rename.find(root);
                if (it == rename.end()) rename[root] = mc;
                else if (it->second != mc)
                    return fail("partition mismatch on layout " + std::to_string(layout));
            }
            std::set<int> used;
            for (const auto& [root, mc] : rename)
                if (!used.insert(mc).second)
                    return fail("two DBSCAN clusters merged on layout " + std::to_string(layout));
        }
    }

    // Largest-cluster selection against 4-adjacency flood fill under the
    // default parameters (grid blobs, Chebyshev separation >= 2).
    for (int layout = 0; layout < 30; ++layout) {
        Rng lr(7000 + layout);
        std::set<PatchKey> cells;
        const int blobs = static_cast<int>(lr.uniform_int(1, 4));
        for (int b = 0; b < blobs; ++b) {
            for (int attempt = 0; attempt < 50; ++attempt) {
                const int ox = static_cast<int>(lr.uniform_int(0, 40));
                const int oy = static_cast<int>(lr.uniform_int(0, 40));
                // Grow a 4-connected blob.
                std::vector<PatchKey> blob{{ox, oy}};
                const int grow = static_cast<int>(lr.uniform_int(1, 24));
                for (int g = 0; g < grow; ++g) {
                    const PatchKey seed = blob[static_cast<std::size_t>(
                        lr.uniform_int(0, static_cast<long>(blob.size()) - 1))];
                    static const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
                    const int dir = static_cast<int>(lr.uniform_int(0, 3));
                    const PatchKey next{seed.first + dx[dir], seed.second + dy[dir]};
                    if (std::find(blob.begin(), blob.end(), next) == blob.end())
                        blob.push_back(next);
                }
                // Accept only when Chebyshev-separated from existing cells.
                bool clear = true;
                for (const PatchKey& c : blob)
                    for (const PatchKey& e : cells)
                        if (std::max(std::abs(c.first - e.first), std::abs(c.second - e.second)) < 2)
                            clear = false;
                if (clear) {
                    cells.insert(blob.begin(), blob.end());
                    break;
                }
            }
        }
        if (cells.empty()) continue;
        const std::vector<PatchKey> roi(cells.begin(), cells.end());
        const auto mine = largest_roi_cluster(roi, 2, 1.5, 1.5);

        // Flood-fill oracle (4-adjacency).
        std::set<PatchKey> remaining = cells;
        std::vector<std::vector<PatchKey>> components;
        while (!remaining.empty()) {
            std::vector<PatchKey> stack{*remaining.begin()};
            remaining.erase(remaining.begin());
            std::vector<PatchKey> comp;
            while (!stack.empty()) {
                const PatchKey cur = stack.back();
                stack.pop_back();
                comp.push_back(cur);
                static const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
                for (int d = 0; d < 4; ++d) {
                    const PatchKey nb{cur.first + dx[d], cur.second + dy[d]};
                    const auto it = remaining.find(nb);
                    if (it != remaining.end()) {
                        remaining.erase(it);
                        stack.push_back(nb);
                    }
                }
            }
            components.push_back(std::move(comp));
        }
        auto lex_min = [](const std::vector<PatchKey>& v) {
            return *std::min_element(v.begin(), v.end(), [](const PatchKey& a, const PatchKey& b) {
                return std::pair(a.second, a.first) < std::pair(b.second, b.first);
            });
        };
        const std::vector<PatchKey>* best = nullptr;
        for (const auto& comp : components) {
            if (!best || comp.size() > best->size()) best = &comp;
            else if (comp.size() == best->size()) {
                const PatchKey a = lex_min(comp), b = lex_min(*best);
                if (std::pair(a.second, a.first) < std::pair(b.second, b.first)) best = &comp;
            }
        }
        std::vector<PatchKey> expected = *best;
        std::sort(expected.begin(), expected.end(), [](const PatchKey& a, const PatchKey& b) {
            return std::pair(a.second, a.first) < std::pair(b.second, b.first);
        });
        if (mine != expected)
            return fail("largest cluster != flood-fill component on layout " +
                        std::to_string(layout));
    }
    return {true, "50 oracle layouts + 30 flood-fill layouts"};
}

// ------------------------------------------------------------ criterion 7

inline std::set<PatchKey> random_simply_connected_mask(Rng& rng) {
    for (;;) {
        std::set<PatchKey> cells{{10, 10}};
        const int grow = static_cast<int>(rng.uniform_int(0, 60));
        std::vector<PatchKey> order{{10, 10}};
        for (int g = 0; g < grow; ++g) {
            const PatchKey seed =
                order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(order.size()) - 1))];
            static const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
            const int dir = static_cast<int>(rng.uniform_int(0, 3));
            const PatchKey next{seed.first + dx[dir], seed.second + dy[dir]};
            if (next.first < 1 || next.second < 1 || next.first > 30 || next.second > 30) continue;
            if (cells.insert(next).second) order.push_back(next);
        }
        // Reject masks with holes: the complement of the padded bounding box
        // must be a single 4-connected component.
        int x0 = 1000, x1 = -1000, y0 = 1000, y1 = -1000;
        for (const auto& [x, y] : cells) {
            x0 = std::min(x0, x - 1);
            x1 = std::max(x1, x + 1);
            y0 = std::min(y0, y - 1);
            y1 = std::max(y1, y + 1);
        }
        std::set<PatchKey> outside;
        std::vector<PatchKey> stack{{x0, y0}};
        std::set<PatchKey> seen{{x0, y0}};
        while (!stack.empty()) {
            const PatchKey cur = stack.back();
            stack.pop_back();
            outside.insert(cur);
            static const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                const PatchKey nb{cur.first + dx[d], cur.second + dy[d]};
                if (nb.first < x0 || nb.first > x1 || nb.second < y0 || nb.second > y1) continue;
                if (cells.count(nb) || !seen.insert(nb).second) continue;
                stack.push_back(nb);
            }
        }
        const long box = static_cast<long>(x1 - x0 + 1) * (y1 - y0 + 1);
        if (static_cast<long>(outside.size() + cells.size()) == box) return cells;
    }
}

inline Result criterion_boundary() {
    Rng rng(0xB0D);
    for (int trial = 0; trial < 100; ++trial) {
        const std::set<PatchKey> mask = random_simply_connected_mask(rng);
        const std::vector<PatchKey> cells(mask.begin(), mask.end());
        const auto contour = trace_boundary(cells);
        if (contour.size() < 5) return fail("contour too short");
        if (contour.front() != contour.back()) return fail("contour not closed");
        const double area = shoelace_area(contour);
        const double expected = 65536.0 * static_cast<double>(cells.size());
        if (area != expected)
            return fail("trial " + std::to_string(trial) + ": shoelace " + format_double(area) +
                        " != 65536*" + std::to_string(cells.size()));
        // Simplicity: walking the contour edge by edge must not revisit a
        // lattice corner (except closing on the start).
        std::set<std::pair<long, long>> visited;
        bool simple = true;
        for (std::size_t i = 0; i + 1 < contour.size() && simple; ++i) {
            long x = std::lround(contour[i].first) / 256, y = std::lround(contour[i].second) / 256;
            const long tx = std::lround(contour[i + 1].first) / 256,
                       ty = std::lround(contour[i + 1].second) / 256;
            const long sx = tx == x ? 0 : (tx > x ? 1 : -1);
            const long sy = ty == y ? 0 : (ty > y ? 1 : -1);
            while (x != tx || y != ty) {
                if (!visited.insert({x, y}).second) simple = false;
                x += sx;
                y += sy;
            }
        }
        if (!simple) return fail("trial " + std::to_string(trial) + ": contour revisits a corner");
    }
    // Pinned examples.
    {
        const auto single = trace_boundary({{0, 0}});
        const std::vector<std::pair<double, double>> expected{
            {0, 0}, {256, 0}, {256, 256}, {0, 256}, {0, 0}};
        if (single != expected) return fail("single-cell contour has unexpected vertices");
        const auto pair = trace_boundary({{0, 0}, {1, 0}});
        const std::vector<std::pair<double, double>> expected2{
            {0, 0}, {512, 0}, {512, 256}, {0, 256}, {0, 0}};
        if (pair != expected2) return fail("2x1 contour is not the merged rectangle");
    }
    return {true, "100 masks: exact area, closed, simple"};
}

// ------------------------------------------------------------ criterion 8

inline AnnotationSet random_annotation_set(Rng& rng, bool integral) {
    AnnotationSet set;
    set.slide_id = "slide";
    const int regions = static_cast<int>(rng.uniform_int(0, 5));
    for (int r = 0; r < regions; ++r) {
        AnnotationRegion region;
        region.region_id = std::to_string(r + 1);
        const int nv = static_cast<int>(rng.uniform_int(3, 12));
        for (int v = 0; v < nv; ++v) {
            double x = rng.uniform(0.0, 4096.0);
            double y = rng.uniform(0.0, 4096.0);
            if (integral) {
                x = std::floor(x);
                y = std::floor(y);
            }
            region.vertices.emplace_back(x, y);
        }
        set.regions.push_back(std::move(region));
    }
    return set;
}

inline bool sets_equal(const AnnotationSet& a, const AnnotationSet& b) {
    if (a.regions.size() != b.regions.size()) return false;
    for (std::size_t i = 0; i < a.regions.size(); ++i) {
        if (a.regions[i].region_id != b.regions[i].region_id) return false;
        if (a.regions[i].vertices != b.regions[i].vertices) return false;
    }
    return true;
}

// Even-odd ray casting, independent of the winding-number implementation.
inline bool raycast_inside(const std::vector<Point>& poly, double px, double py) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& [xi, yi] = poly[i];
        const auto& [xj, yj] = poly[j];
        if ((yi > py) != (yj > py)) {
            const double t = (py - yi) / (yj - yi);
            if (px < xi + t * (xj - xi)) inside = !inside;
        }
    }
    return inside;
}

inline Result criterion_annotations() {
    Rng rng(0xAB);
    for (int trial = 0; trial < 200; ++trial) {
        const AnnotationSet set = random_annotation_set(rng, trial % 2 == 0);
        AnnotationParse parsed = parse_annotation_xml(serialize_annotation_xml(set));
        parsed.set.slide_id = set.slide_id;
        if (!parsed.warnings.empty()) return fail("unexpected warnings on round-trip");
        if (!sets_equal(set, parsed.set))
            return fail("round-trip mismatch at trial " + std::to_string(trial));
    }
    // Membership equals the ray-casting oracle on simple star polygons.
    for (int trial = 0; trial < 100; ++trial) {
        AnnotationSet set;
        set.slide_id = "s";
        AnnotationRegion region;
        region.region_id = "1";
        const double cx = rng.uniform(600.0, 2400.0);
        const double cy = rng.uniform(600.0, 2400.0);
        const int nv = static_cast<int>(rng.uniform_int(3, 16));
        for (int v = 0; v < nv; ++v) {
            const double theta = 2.0 * 3.14159265358979312 * v / nv;
            const double r = rng.uniform(150.0, 900.0);
            region.vertices.emplace_back(cx + r * std::cos(theta) + rng.uniform(0.0, 0.001),
                                         cy + r * std::sin(theta));
        }
        set.regions.push_back(region);
        PatchGrid grid;
        grid.slide_id = "s";
        grid.cols = 12;
        grid.rows = 12;
        const auto flags = patch_membership(grid, set);
        for (int gy = 0; gy < 12; ++gy)
            for (int gx = 0; gx < 12; ++gx) {
                const double px = gx * 256.0 + 128.0;
                const double py = gy * 256.0 + 128.0;
                const bool oracle = raycast_inside(set.regions[0].vertices, px, py);
                if ((flags[gy * 12 + gx] != 0) != oracle)
                    return fail("membership mismatch at trial " + std::to_string(trial));
            }
    }
    return {true, "200 round-trips + 100 polygon oracles"};
}

// ----------------------------------------------------- pipeline criteria

inline PipelineConfig e2e_config(const fs::path& dir, double separability, std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.output_dir = dir.string();
    cfg.manifest_path = "cohort/manifest.json";
    cfg.seed = seed;
    cfg.workers = 1;
    cfg.synth.n_slides = 60;
    cfg.synth.class_balance = 0.5;
    cfg.synth.class_separability = separability;
    cfg.synth.annotation_coverage = 0.7;
    cfg.synth.seed = seed;
    return cfg;
}

inline std::string write_config(const fs::path& dir, const PipelineConfig& cfg) {
    const std::string path = (dir / "config.json").string();
    write_text_file(path, config_to_json(cfg));
    return path;
}

inline Result criterion_end_to_end() {
    Timer timer;
    const fs::path dir = fresh_dir("e2e");
    const PipelineConfig cfg = e2e_config(dir / "high", 40.0, 20240601);
    fs::create_directories(dir / "high");
    const std::string config = write_config(dir / "high", cfg);
    for (const char* stage : {"synth", "extract", "train", "score", "classify", "evaluate"}) {
        if (run_cli("--config \"" + config + "\" " + stage) != 0)
            return fail(std::string("stage ") + stage + " failed");
    }
    const nlohmann::json report =
        nlohmann::json::parse(read_text_file((dir / "high" / "eval_report.json").string()));
    const double slide_acc = report.at("slide_accuracy").get<double>();
    const double mean_iou = report.at("mean_iou").get<double>();
    const double high_secs = timer.seconds();
    if (slide_acc < 0.95)
        return fail("slide accuracy " + format_double(slide_acc) + " < 0.95");
    if (mean_iou < 0.70) return fail("mean IoU " + format_double(mean_iou) + " < 0.70");
    if (high_secs >= 600.0) return fail("pipeline took " + std::to_string(high_secs) + "s");

    // Zero separability: slide accuracy must sit inside the binomial 95%
    // band around 0.5 (12 test slides -> [3, 9] correct, i.e. [0.25, 0.75]).
    const PipelineConfig cfg0 = e2e_config(dir / "zero", 0.0, 20240601);
    fs::create_directories(dir / "zero");
    const std::string config0 = write_config(dir / "zero", cfg0);
    for (const char* stage : {"synth", "extract", "train", "score", "classify", "evaluate"}) {
        if (run_cli("--config \"" + config0 + "\" " + stage) != 0)
            return fail(std::string("zero-separability stage ") + stage + " failed");
    }
    const nlohmann::json report0 =
        nlohmann::json::parse(read_text_file((dir / "zero" / "eval_report.json").string()));
    const double acc0 = report0.at("slide_accuracy").get<double>();
    const long n_slides = report0.at("slides_evaluated").get<long>();
    if (n_slides != 12) return fail("expected 12 test slides, got " + std::to_string(n_slides));
    if (acc0 < 0.25 || acc0 > 0.75)
        return fail("chance-level accuracy " + format_double(acc0) + " outside [0.25, 0.75]");
    return {true, "acc=" + format_double(slide_acc) + ", IoU=" + format_double(mean_iou) +
                      ", chance=" + format_double(acc0) + ", " +
                      std::to_string(high_secs).substr(0, 5) + "s"};
}

inline Result criterion_sweep() {
    Timer timer;
    const fs::path dir = fresh_dir("sweep");
    const PipelineConfig cfg = e2e_config(dir, 40.0, 20240601);
    const std::string config = write_config(dir, cfg);
    for (const char* stage : {"synth", "extract", "sweep"}) {
        if (run_cli("--config \"" + config + "\" " + stage) != 0)
            return fail(std::string("stage ") + stage + " failed");
    }
    const nlohmann::json doc =
        nlohmann::json::parse(read_text_file((dir / "robustness.json").string()));
    const auto& rows = doc.at("rows");
    if (rows.size() != 4) return fail("expected 4 fraction rows");
    const std::vector<double> expected_fractions{0.2, 0.4, 0.6, 0.8};
    for (int i = 0; i < 4; ++i) {
        if (rows[i].at("fraction").get<double>() != expected_fractions[i])
            return fail("fraction row order unexpected");
        const auto& sa = rows[i].at("slide_accuracy");
        if (!(sa.at("ci_low").get<double>() <= sa.at("mean").get<double>() &&
              sa.at("mean").get<double>() <= sa.at("ci_high").get<double>()))
            return fail("CI does not bracket mean");
    }
    const double lo = rows[0].at("slide_accuracy").at("mean").get<double>();
    const double hi = rows[3].at("slide_accuracy").at("mean").get<double>();
    if (!(hi >= lo))
        return fail("mean slide accuracy at 0.8 (" + format_double(hi) + ") < at 0.2 (" +
                    format_double(lo) + ")");
    const double secs = timer.seconds();
    if (secs >= 1800.0) return fail("sweep took " + std::to_string(secs) + "s");
    if (doc.at("n_repeats").get<int>() != 3) return fail("expected 3 repeats");
    return {true, "4 rows, acc(0.2)=" + format_double(lo) + " <= acc(0.8)=" + format_double(hi) +
                      ", " + std::to_string(secs).substr(0, 5) + "s"};
}

inline std::map<std::string, std::string> snapshot_dir(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        files[fs::relative(entry.path(), root).string()] =
            read_text_file(entry.path().string());
    }
    return files;
}

inline Result criterion_determinism() {
    const fs::path base = fresh_dir("determinism");
    auto run_all = [&](const fs::path& dir, int workers) -> std::string {
        PipelineConfig cfg = e2e_config(dir, 35.0, 777);
        cfg.synth.n_slides = 16;
        cfg.workers = workers;
        cfg.reachability_csv = true;
        fs::create_directories(dir);
        const std::string config = write_config(dir, cfg);
        for (const char* stage :
             {"synth", "extract", "train", "score", "classify", "evaluate", "visualize"}) {
            if (run_cli("--config \"" + config + "\" " + stage) != 0)
                return std::string("stage ") + stage + " failed in " + dir.string();
        }
        return "";
    };
    for (const auto& [dir, workers] :
         std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", 3}, {"c", 3}}) {
        const std::string err = run_all(base / dir, workers);
        if (!err.empty()) return fail(err);
    }
    const auto a = snapshot_dir(base / "a");
    const auto b = snapshot_dir(base / "b");
    const auto c = snapshot_dir(base / "c");
    if (a.size() != b.size() || b.size() != c.size())
        return fail("artifact file sets differ between runs");
    for (const auto& [rel, bytes] : a) {
        const auto itb = b.find(rel);
        const auto itc = c.find(rel);
        if (itb == b.end() || itc == c.end()) return fail("missing artifact " + rel);
        // config.json records the worker count; everything else must match.
        if (rel == "config.json") continue;
        if (itb->second != bytes)
            return fail("artifact " + rel + " differs between workers=1 and workers=3");
        if (itc->second != itb->second)
            return fail("artifact " + rel + " differs between identical runs");
    }
    return {true, std::to_string(a.size()) + " artifacts byte-identical across 3 runs"};
}

} // namespace acceptance
