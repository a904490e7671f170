#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "melroi/features.hpp"
#include "melroi/types.hpp"

namespace melroi {

inline constexpr int kClassCount = 3;

struct TrainHyper {
    int epochs = 200;
    double learning_rate = 0.05;
    int batch_size = 64;
    std::uint64_t seed = 0;
    double early_stop_min_delta = 1e-5;
    int early_stop_patience = 10;
};

struct TrainingMeta {
    int epochs_run = 0;
    double learning_rate = 0.0;
    int batch_size = 0;
    std::uint64_t seed = 0;
    std::vector<double> loss_curve; // full-set cross-entropy at each epoch end
};

// Multinomial logistic regression over PatchFeatures: 3 rows of 40 feature
// weights plus a bias. Weights act on raw (unstandardized) features.
struct ClassifierModel {
    std::array<std::array<double, kFeatureCount + 1>, kClassCount> weights{};
    TrainingMeta training_meta;
};

// Mean cross-entropy and its gradient for the given sample indices.
// Exposed so the finite-difference oracle can probe the exact training loss.
double loss_and_gradient(
    const std::array<std::array<double, kFeatureCount + 1>, kClassCount>& weights,
    const std::vector<PatchFeatures>& features, const std::vector<PatchClass>& labels,
    const std::vector<std::size_t>& indices,
    std::array<std::array<double, kFeatureCount + 1>, kClassCount>* gradient);

// Mini-batch SGD on cross-entropy; deterministic given hyper.seed. Features
// are standardized internally and the learned weights folded back to raw
// feature space. Throws ClassCoverageError when a class has no samples and
// DivergenceError when the loss stops being finite.
ClassifierModel train(const std::vector<PatchFeatures>& features,
                      const std::vector<PatchClass>& labels, const TrainHyper& hyper);

ScoreTriplet score(const ClassifierModel& model, const PatchFeatures& features);

// External-scorer ingestion: validates score triplets from a patch CSV
// (renormalizing sums within [0.99, 1.01], rejecting the rest) and joins
// them against the known patch keys.
using ExternalKey = std::tuple<std::string, int, int>;
std::map<ExternalKey, ScoreTriplet> ingest_external_scores(const std::string& csv_text,
                                                           const std::set<ExternalKey>& known_keys);

} // namespace melroi
