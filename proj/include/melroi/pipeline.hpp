#pragma once

#include <optional>
#include <string>
#include <vector>

#include "melroi/config.hpp"
#include "melroi/metrics.hpp"
#include "melroi/types.hpp"

namespace melroi {

// Per-slide evaluation input: records carry tissue/annotation flags, labels
// where ground truth exists, and scores where a scorer has run.
struct EvalSlideInput {
    std::string slide_id;
    std::optional<SlideLabel> true_label;
    std::vector<PatchRecord> records;
};

struct EvalOptions {
    bool beta_from_annotations = true;
    double fixed_beta = 0.2;
    double split_fraction = 0.0;
    std::uint64_t seed = 0;
};

// Slide classification, ROI selection and metrics over a set of slides;
// deterministic, order-independent (slides are processed sorted by id).
EvalReport evaluate_slides(std::vector<EvalSlideInput> slides, const EvalOptions& options);

std::string format_eval_table(const EvalReport& report);
std::string format_robustness_table(const RobustnessSummary& summary);

// Stage entry points. Each validates its upstream artifacts (MissingArtifact
// when absent), computes, and writes its own artifacts under cfg.output_dir.
void stage_synth(const PipelineConfig& cfg);
void stage_extract(const PipelineConfig& cfg);
void stage_train(const PipelineConfig& cfg);
void stage_score(const PipelineConfig& cfg);
void stage_classify(const PipelineConfig& cfg);
EvalReport stage_evaluate(const PipelineConfig& cfg);
RobustnessSummary stage_sweep(const PipelineConfig& cfg);
void stage_visualize(const PipelineConfig& cfg);

} // namespace melroi
