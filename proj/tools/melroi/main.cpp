// melroi - melanocytic-tumor ROI detection pipeline.
//
// Subcommands run one stage each and communicate through plain artifacts
// (JSON/CSV/PNG/XML) in the output directory:
//   synth -> extract -> train -> score -> classify -> evaluate | sweep | visualize

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "melroi/config.hpp"
#include "melroi/errors.hpp"
#include "melroi/pipeline.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string output_dir;
    std::string manifest_path;
    std::string external_scores;
    int workers = -1;
    long long seed = -1;
};

melroi::PipelineConfig resolve_config(const CliOptions& opt) {
    melroi::PipelineConfig cfg;
    if (!opt.config_path.empty()) cfg = melroi::load_config(opt.config_path);
    if (!opt.output_dir.empty()) cfg.output_dir = opt.output_dir;
    if (!opt.manifest_path.empty()) cfg.manifest_path = opt.manifest_path;
    if (!opt.external_scores.empty()) cfg.external_scores_path = opt.external_scores;
    if (opt.workers >= 0) cfg.workers = opt.workers;
    if (opt.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(opt.seed);
        cfg.synth.seed = cfg.seed;
    }
    melroi::validate_config(cfg);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"melroi: patch-based ROI detection for melanocytic tumor slides"};
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "pipeline configuration JSON");
    app.add_option("--output", opt.output_dir, "output directory (overrides config)");
    app.add_option("--manifest", opt.manifest_path, "cohort manifest path (overrides config)");
    app.add_option("--workers", opt.workers, "worker threads (0 = auto)");
    app.add_option("--seed", opt.seed, "global seed (overrides config)");

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic cohort");
    CLI::App* extract = app.add_subcommand("extract", "tile slides, detect tissue, label patches, extract features");
    CLI::App* train = app.add_subcommand("train", "train the built-in patch classifier");
    CLI::App* score_cmd = app.add_subcommand("score", "score all tissue patches");
    score_cmd->add_option("--external", opt.external_scores,
                          "ingest externally produced scores (patch CSV) instead of the model");
    CLI::App* classify = app.add_subcommand("classify", "majority-vote slides and select ROI patches");
    CLI::App* evaluate = app.add_subcommand("evaluate", "patch/slide accuracy and IoU on the test split");
    CLI::App* sweep = app.add_subcommand("sweep", "robustness sweep over training-set fractions");
    CLI::App* visualize = app.add_subcommand("visualize", "render boundary/overlay/heatmap maps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    melroi::PipelineConfig cfg;
    try {
        cfg = resolve_config(opt);
    } catch (const melroi::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (synth->parsed()) melroi::stage_synth(cfg);
        else if (extract->parsed()) melroi::stage_extract(cfg);
        else if (train->parsed()) melroi::stage_train(cfg);
        else if (score_cmd->parsed()) melroi::stage_score(cfg);
        else if (classify->parsed()) melroi::stage_classify(cfg);
        else if (evaluate->parsed()) melroi::stage_evaluate(cfg);
        else if (sweep->parsed()) melroi::stage_sweep(cfg);
        else if (visualize->parsed()) melroi::stage_visualize(cfg);
    } catch (const melroi::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const melroi::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const melroi::MissingArtifact& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
