// Acceptance suite: one criterion per numbered check, each printing a
// single [PASS]/[FAIL] line. Run all or a single one:
//   acceptance [--criterion N] [--cli PATH]
// The pipeline-level criteria (9-11) drive the actual CLI binary.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "criteria.hpp"

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else if (std::strcmp(argv[i], "--cli") == 0 && i + 1 < argc) {
            acceptance::cli_path() = argv[++i];
        } else {
            std::fprintf(stderr, "usage: acceptance [--criterion N] [--cli PATH]\n");
            return 2;
        }
    }

    struct Entry {
        int id;
        const char* title;
        std::function<acceptance::Result()> run;
    };
    const std::vector<Entry> entries = {
        {1, "patch IoU equals brute-force set arithmetic", acceptance::criterion_iou},
        {2, "beta and top-k selection protocol", acceptance::criterion_topk},
        {3, "majority-vote properties", acceptance::criterion_vote},
        {4, "stain normalization", acceptance::criterion_stain},
        {5, "classifier correctness", acceptance::criterion_classifier},
        {6, "OPTICS ordering and cluster extraction", acceptance::criterion_optics},
        {7, "boundary tracing", acceptance::criterion_boundary},
        {8, "annotation XML round-trip and membership", acceptance::criterion_annotations},
        {9, "end-to-end synthetic cohort targets", acceptance::criterion_end_to_end},
        {10, "robustness sweep shape and trend", acceptance::criterion_sweep},
        {11, "pipeline determinism", acceptance::criterion_determinism},
    };

    int failures = 0;
    for (const Entry& e : entries) {
        if (only != 0 && e.id != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        acceptance::Result result;
        try {
            result = e.run();
        } catch (const std::exception& ex) {
            result.ok = false;
            result.detail = std::string("exception: ") + ex.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %2d: %s (%s; %.1fs)\n", result.ok ? "PASS" : "FAIL", e.id,
                    e.title, result.detail.c_str(), secs);
        std::fflush(stdout);
        if (!result.ok) ++failures;
    }
    return failures;
}
