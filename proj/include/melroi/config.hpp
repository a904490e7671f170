#pragma once

#include <string>
#include <vector>

#include "melroi/augment.hpp"
#include "melroi/classifier.hpp"
#include "melroi/dataset.hpp"
#include "melroi/render.hpp"
#include "melroi/stain.hpp"
#include "melroi/synthgen.hpp"
#include "melroi/tissue.hpp"

namespace melroi {

// One JSON document drives every subcommand; all fields have defaults and
// validation rejects out-of-range values before any computation starts.
struct PipelineConfig {
    std::string manifest_path = "cohort/manifest.json";
    std::string output_dir = "out";
    std::uint64_t seed = 1234;
    int workers = 0; // 0 = MELROI_WORKERS or hardware concurrency

    TissueThresholds tissue;
    StainProfile reference_stains = default_reference_profile();
    int stain_sample_patches = 100;
    long stain_sample_pixel_cap = 500000;

    AugmentationConfig augmentation;
    LabelingParams labeling;
    double train_fraction = 0.8;

    TrainHyper scorer;
    std::string external_scores_path; // empty = built-in classifier

    double fixed_beta = 0.2;
    bool beta_from_annotations = true;

    std::vector<double> sweep_fractions{0.2, 0.4, 0.6, 0.8};
    int sweep_repeats = 3;

    std::vector<RenderMode> render_modes{RenderMode::Boundary, RenderMode::Overlay,
                                         RenderMode::Heatmap};
    RenderSpec render;
    bool reachability_csv = false;

    CohortSpec synth;
};

PipelineConfig parse_config_json(const std::string& text);
PipelineConfig load_config(const std::string& path);
std::string config_to_json(const PipelineConfig& cfg);

// Throws ConfigError on the first out-of-range parameter.
void validate_config(const PipelineConfig& cfg);

} // namespace melroi
