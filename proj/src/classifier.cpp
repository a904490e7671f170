#include "melroi/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "melroi/errors.hpp"
#include "melroi/patch_csv.hpp"
#include "melroi/rng.hpp"

namespace melroi {

namespace {

using Weights = std::array<std::array<double, kFeatureCount + 1>, kClassCount>;

std::array<double, kClassCount> softmax_logits(const Weights& w, const double* x) {
    std::array<double, kClassCount> z{};
    for (int c = 0; c < kClassCount; ++c) {
        double acc = w[c][kFeatureCount]; // bias
        for (int j = 0; j < kFeatureCount; ++j) acc += w[c][j] * x[j];
        z[c] = acc;
    }
    const double m = std::max({z[0], z[1], z[2]});
    double sum = 0.0;
    for (int c = 0; c < kClassCount; ++c) {
        z[c] = std::exp(z[c] - m);
        sum += z[c];
    }
    for (int c = 0; c < kClassCount; ++c) z[c] /= sum;
    return z;
}

} // namespace

double loss_and_gradient(const Weights& weights, const std::vector<PatchFeatures>& features,
                         const std::vector<PatchClass>& labels,
                         const std::vector<std::size_t>& indices, Weights* gradient) {
    if (gradient)
        for (auto& row : *gradient) row.fill(0.0);
    double loss = 0.0;
    for (const std::size_t i : indices) {
        const double* x = features[i].data();
        const std::array<double, kClassCount> p = softmax_logits(weights, x);
        const int y = static_cast<int>(labels[i]);
        loss -= std::log(std::max(p[y], 1e-300));
        if (gradient) {
            for (int c = 0; c < kClassCount; ++c) {
                const double g = p[c] - (c == y ? 1.0 : 0.0);
                auto& row = (*gradient)[c];
                for (int j = 0; j < kFeatureCount; ++j) row[j] += g * x[j];
                row[kFeatureCount] += g;
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(indices.size());
    if (gradient)
        for (auto& row : *gradient)
            for (double& v : row) v *= inv;
    return loss * inv;
}

ClassifierModel train(const std::vector<PatchFeatures>& features,
                      const std::vector<PatchClass>& labels, const TrainHyper& hyper) {
    const std::size_t n = features.size();
    if (n == 0 || labels.size() != n)
        throw ClassCoverageError("train: empty dataset or label mismatch");
    std::array<long, kClassCount> counts{};
    for (PatchClass c : labels) ++counts[static_cast<int>(c)];
    for (int c = 0; c < kClassCount; ++c)
        if (counts[c] == 0)
            throw ClassCoverageError(std::string("train: no samples of class ") +
                                     to_string(static_cast<PatchClass>(c)));

    // Standardize features for conditioning; weights are folded back to raw
    // feature space before returning.
    std::array<double, kFeatureCount> mu{}, sigma{};
    for (const PatchFeatures& f : features)
        for (int j = 0; j < kFeatureCount; ++j) mu[j] += f[j];
    for (int j = 0; j < kFeatureCount; ++j) mu[j] /= static_cast<double>(n);
    for (const PatchFeatures& f : features)
        for (int j = 0; j < kFeatureCount; ++j) sigma[j] += (f[j] - mu[j]) * (f[j] - mu[j]);
    for (int j = 0; j < kFeatureCount; ++j) {
        sigma[j] = std::sqrt(sigma[j] / static_cast<double>(n));
        if (sigma[j] < 1e-12) sigma[j] = 1.0;
    }
    std::vector<PatchFeatures> xs(n);
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < kFeatureCount; ++j) xs[i][j] = (features[i][j] - mu[j]) / sigma[j];

    Weights w{};
    for (auto& row : w) row.fill(0.0);
    Weights grad;
    Rng rng(seed_for(hyper.seed, "sgd"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> all(order);

    TrainingMeta meta;
    meta.learning_rate = hyper.learning_rate;
    meta.batch_size = hyper.batch_size;
    meta.seed = hyper.seed;

    double best = std::numeric_limits<double>::infinity();
    int stall = 0;
    const int batch = std::max(1, hyper.batch_size);
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            const std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
            loss_and_gradient(w, xs, labels, idx, &grad);
            for (int c = 0; c < kClassCount; ++c)
                for (int j = 0; j <= kFeatureCount; ++j)
                    w[c][j] -= hyper.learning_rate * grad[c][j];
        }
        const double loss = loss_and_gradient(w, xs, labels, all, nullptr);
        if (!std::isfinite(loss))
            throw DivergenceError("train: loss is not finite at epoch " + std::to_string(epoch) +
                                  "; consider lowering learning_rate");
        meta.loss_curve.push_back(loss);
        meta.epochs_run = epoch + 1;
        if (best - loss < hyper.early_stop_min_delta) {
            if (++stall >= hyper.early_stop_patience) break;
        } else {
            stall = 0;
        }
        best = std::min(best, loss);
    }

    ClassifierModel model;
    model.training_meta = std::move(meta);
    for (int c = 0; c < kClassCount; ++c) {
        double bias = w[c][kFeatureCount];
        for (int j = 0; j < kFeatureCount; ++j) {
            model.weights[c][j] = w[c][j] / sigma[j];
            bias -= w[c][j] * mu[j] / sigma[j];
        }
        model.weights[c][kFeatureCount] = bias;
    }
    return model;
}

ScoreTriplet score(const ClassifierModel& model, const PatchFeatures& features) {
    const std::array<double, kClassCount> p = softmax_logits(model.weights, features.data());
    return ScoreTriplet{p[0], p[1], p[2]};
}

std::map<ExternalKey, ScoreTriplet> ingest_external_scores(
    const std::string& csv_text, const std::set<ExternalKey>& known_keys) {
    std::map<ExternalKey, ScoreTriplet> out;
    for (const PatchCsvRow& row : parse_patch_csv(csv_text)) {
        if (!row.scores) continue;
        const ExternalKey key{row.slide_id, row.grid_x, row.grid_y};
        if (!known_keys.count(key))
            throw JoinError("external scores reference unknown patch " + row.slide_id + ":" +
                            std::to_string(row.grid_x) + "," + std::to_string(row.grid_y));
        const auto& s = *row.scores;
        for (double v : s)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ValidationError("external scores: negative or non-finite component for " +
                                      row.slide_id);
        const double sum = s[0] + s[1] + s[2];
        if (sum < 0.99 || sum > 1.01)
            throw ValidationError("external scores: triplet sums to " + format_double(sum) +
                                  " (outside [0.99, 1.01]) for " + row.slide_id);
        out[key] = ScoreTriplet{s[0] / sum, s[1] / sum, s[2] / sum};
    }
    return out;
}

} // namespace melroi
