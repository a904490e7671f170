#include "melroi/config.hpp"

#include <filesystem>

#include <json.hpp>

#include "melroi/errors.hpp"
#include "melroi/patch_csv.hpp"

using nlohmann::json;

namespace melroi {

namespace {

RenderMode render_mode_from_string(const std::string& s) {
    if (s == "boundary") return RenderMode::Boundary;
    if (s == "overlay") return RenderMode::Overlay;
    if (s == "heatmap") return RenderMode::Heatmap;
    throw ConfigError("unknown render mode '" + s + "'");
}

const char* render_mode_name(RenderMode m) {
    switch (m) {
        case RenderMode::Boundary: return "boundary";
        case RenderMode::Overlay: return "overlay";
        default: return "heatmap";
    }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

PipelineConfig parse_config_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    PipelineConfig cfg;
    try {
        get_if(doc, "manifest", cfg.manifest_path);
        get_if(doc, "output", cfg.output_dir);
        get_if(doc, "seed", cfg.seed);
        get_if(doc, "workers", cfg.workers);

        if (doc.contains("preprocess")) {
            const json& p = doc["preprocess"];
            if (p.contains("tissue")) {
                const json& t = p["tissue"];
                get_if(t, "saturation_threshold", cfg.tissue.saturation);
                get_if(t, "value_threshold", cfg.tissue.value);
                get_if(t, "fraction_threshold", cfg.tissue.fraction);
            }
            if (p.contains("reference_stains")) {
                const json& r = p["reference_stains"];
                const auto cols = r.at("stain_matrix").get<std::vector<std::vector<double>>>();
                if (cols.size() != 2 || cols[0].size() != 3 || cols[1].size() != 3)
                    throw ConfigError("reference_stains.stain_matrix must be two 3-vectors");
                for (int row = 0; row < 3; ++row) {
                    cfg.reference_stains.stain_matrix[row * 2 + 0] = cols[0][row];
                    cfg.reference_stains.stain_matrix[row * 2 + 1] = cols[1][row];
                }
                const auto mc = r.at("max_concentrations").get<std::vector<double>>();
                if (mc.size() != 2)
                    throw ConfigError("reference_stains.max_concentrations must have 2 entries");
                cfg.reference_stains.max_concentrations = {mc[0], mc[1]};
            }
            get_if(p, "stain_sample_patches", cfg.stain_sample_patches);
            get_if(p, "stain_sample_pixel_cap", cfg.stain_sample_pixel_cap);
        }

        if (doc.contains("augmentation")) {
            const json& a = doc["augmentation"];
            get_if(a, "crop_size", cfg.augmentation.crop_size);
            get_if(a, "hflip_probability", cfg.augmentation.hflip_probability);
            get_if(a, "rng_seed", cfg.augmentation.rng_seed);
            if (a.contains("channel_mean")) {
                const auto v = a["channel_mean"].get<std::vector<double>>();
                if (v.size() != 3) throw ConfigError("augmentation.channel_mean needs 3 entries");
                std::copy(v.begin(), v.end(), cfg.augmentation.channel_mean.begin());
            }
            if (a.contains("channel_std")) {
                const auto v = a["channel_std"].get<std::vector<double>>();
                if (v.size() != 3) throw ConfigError("augmentation.channel_std needs 3 entries");
                std::copy(v.begin(), v.end(), cfg.augmentation.channel_std.begin());
            }
        }

        if (doc.contains("patching")) {
            const json& p = doc["patching"];
            get_if(p, "train_fraction", cfg.train_fraction);
            get_if(p, "buffer_distance", cfg.labeling.buffer_distance);
            get_if(p, "other_cap_ratio", cfg.labeling.other_cap_ratio);
        }

        if (doc.contains("scorer")) {
            const json& s = doc["scorer"];
            get_if(s, "epochs", cfg.scorer.epochs);
            get_if(s, "learning_rate", cfg.scorer.learning_rate);
            get_if(s, "batch_size", cfg.scorer.batch_size);
            get_if(s, "early_stop_min_delta", cfg.scorer.early_stop_min_delta);
            get_if(s, "early_stop_patience", cfg.scorer.early_stop_patience);
            get_if(s, "external_scores", cfg.external_scores_path);
        }

        if (doc.contains("aggregation")) {
            const json& a = doc["aggregation"];
            get_if(a, "fixed_beta", cfg.fixed_beta);
            if (a.contains("beta_source")) {
                const std::string src = a["beta_source"].get<std::string>();
                if (src == "annotations") cfg.beta_from_annotations = true;
                else if (src == "fixed") cfg.beta_from_annotations = false;
                else throw ConfigError("aggregation.beta_source must be 'annotations' or 'fixed'");
            }
        }

        if (doc.contains("evaluation")) {
            const json& e = doc["evaluation"];
            get_if(e, "fractions", cfg.sweep_fractions);
            get_if(e, "repeats", cfg.sweep_repeats);
        }

        if (doc.contains("render")) {
            const json& r = doc["render"];
            if (r.contains("modes")) {
                cfg.render_modes.clear();
                for (const auto& m : r["modes"])
                    cfg.render_modes.push_back(render_mode_from_string(m.get<std::string>()));
            }
            if (r.contains("overlay_mask_color")) {
                const auto v = r["overlay_mask_color"].get<std::vector<double>>();
                if (v.size() != 3) throw ConfigError("render.overlay_mask_color needs 3 entries");
                for (int i = 0; i < 3; ++i)
                    cfg.render.overlay_mask_color[i] = static_cast<float>(v[i]);
            }
            double alpha = cfg.render.overlay_alpha;
            get_if(r, "overlay_alpha", alpha);
            cfg.render.overlay_alpha = static_cast<float>(alpha);
            if (r.contains("boundary_color")) {
                const auto v = r["boundary_color"].get<std::vector<int>>();
                if (v.size() != 3) throw ConfigError("render.boundary_color needs 3 entries");
                for (int i = 0; i < 3; ++i)
                    cfg.render.boundary_color[i] = static_cast<std::uint8_t>(v[i]);
            }
            get_if(r, "boundary_thickness", cfg.render.boundary_thickness);
            get_if(r, "optics_min_pts", cfg.render.optics_min_pts);
            get_if(r, "optics_eps", cfg.render.optics_eps);
            get_if(r, "reachability_csv", cfg.reachability_csv);
        }

        if (doc.contains("synth")) {
            const json& s = doc["synth"];
            get_if(s, "n_slides", cfg.synth.n_slides);
            get_if(s, "class_balance", cfg.synth.class_balance);
            get_if(s, "slide_width", cfg.synth.slide_width);
            get_if(s, "slide_height", cfg.synth.slide_height);
            if (s.contains("roi_count_range")) {
                const auto v = s["roi_count_range"].get<std::vector<int>>();
                if (v.size() != 2) throw ConfigError("synth.roi_count_range needs 2 entries");
                cfg.synth.roi_count_range = {v[0], v[1]};
            }
            if (s.contains("roi_area_fraction_range")) {
                const auto v = s["roi_area_fraction_range"].get<std::vector<double>>();
                if (v.size() != 2)
                    throw ConfigError("synth.roi_area_fraction_range needs 2 entries");
                cfg.synth.roi_area_fraction_range = {v[0], v[1]};
            }
            get_if(s, "class_separability", cfg.synth.class_separability);
            get_if(s, "annotation_coverage", cfg.synth.annotation_coverage);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    cfg.synth.seed = cfg.seed;
    validate_config(cfg);
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
    return parse_config_json(read_text_file(path));
}

std::string config_to_json(const PipelineConfig& cfg) {
    json doc;
    doc["manifest"] = cfg.manifest_path;
    doc["output"] = cfg.output_dir;
    doc["seed"] = cfg.seed;
    doc["workers"] = cfg.workers;
    doc["preprocess"] = {
        {"tissue",
         {{"saturation_threshold", cfg.tissue.saturation},
          {"value_threshold", cfg.tissue.value},
          {"fraction_threshold", cfg.tissue.fraction}}},
        {"reference_stains",
         {{"stain_matrix",
           {{cfg.reference_stains.stain_matrix[0], cfg.reference_stains.stain_matrix[2],
             cfg.reference_stains.stain_matrix[4]},
            {cfg.reference_stains.stain_matrix[1], cfg.reference_stains.stain_matrix[3],
             cfg.reference_stains.stain_matrix[5]}}},
          {"max_concentrations",
           {cfg.reference_stains.max_concentrations[0],
            cfg.reference_stains.max_concentrations[1]}}}},
        {"stain_sample_patches", cfg.stain_sample_patches},
        {"stain_sample_pixel_cap", cfg.stain_sample_pixel_cap}};
    doc["augmentation"] = {{"crop_size", cfg.augmentation.crop_size},
                           {"hflip_probability", cfg.augmentation.hflip_probability},
                           {"channel_mean", cfg.augmentation.channel_mean},
                           {"channel_std", cfg.augmentation.channel_std},
                           {"rng_seed", cfg.augmentation.rng_seed}};
    doc["patching"] = {{"train_fraction", cfg.train_fraction},
                       {"buffer_distance", cfg.labeling.buffer_distance},
                       {"other_cap_ratio", cfg.labeling.other_cap_ratio}};
    doc["scorer"] = {{"epochs", cfg.scorer.epochs},
                     {"learning_rate", cfg.scorer.learning_rate},
                     {"batch_size", cfg.scorer.batch_size},
                     {"early_stop_min_delta", cfg.scorer.early_stop_min_delta},
                     {"early_stop_patience", cfg.scorer.early_stop_patience},
                     {"external_scores", cfg.external_scores_path}};
    doc["aggregation"] = {{"fixed_beta", cfg.fixed_beta},
                          {"beta_source", cfg.beta_from_annotations ? "annotations" : "fixed"}};
    doc["evaluation"] = {{"fractions", cfg.sweep_fractions}, {"repeats", cfg.sweep_repeats}};
    json modes = json::array();
    for (RenderMode m : cfg.render_modes) modes.push_back(render_mode_name(m));
    doc["render"] = {{"modes", modes},
                     {"overlay_mask_color",
                      {cfg.render.overlay_mask_color[0], cfg.render.overlay_mask_color[1],
                       cfg.render.overlay_mask_color[2]}},
                     {"overlay_alpha", cfg.render.overlay_alpha},
                     {"boundary_color",
                      {cfg.render.boundary_color[0], cfg.render.boundary_color[1],
                       cfg.render.boundary_color[2]}},
                     {"boundary_thickness", cfg.render.boundary_thickness},
                     {"optics_min_pts", cfg.render.optics_min_pts},
                     {"optics_eps", cfg.render.optics_eps},
                     {"reachability_csv", cfg.reachability_csv}};
    doc["synth"] = {{"n_slides", cfg.synth.n_slides},
                    {"class_balance", cfg.synth.class_balance},
                    {"slide_width", cfg.synth.slide_width},
                    {"slide_height", cfg.synth.slide_height},
                    {"roi_count_range", cfg.synth.roi_count_range},
                    {"roi_area_fraction_range", cfg.synth.roi_area_fraction_range},
                    {"class_separability", cfg.synth.class_separability},
                    {"annotation_coverage", cfg.synth.annotation_coverage}};
    return doc.dump(2) + "\n";
}

void validate_config(const PipelineConfig& cfg) {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (cfg.manifest_path.empty()) throw ConfigError("manifest path is empty");
    if (cfg.output_dir.empty()) throw ConfigError("output dir is empty");
    if (cfg.workers < 0) throw ConfigError("workers must be >= 0");
    if (!in01(cfg.tissue.saturation) || !in01(cfg.tissue.value) || !in01(cfg.tissue.fraction))
        throw ConfigError("tissue thresholds must lie in [0,1]");
    validate_profile(cfg.reference_stains);
    if (cfg.stain_sample_patches <= 0) throw ConfigError("stain_sample_patches must be positive");
    if (cfg.stain_sample_pixel_cap < 1000)
        throw ConfigError("stain_sample_pixel_cap must be at least 1000");
    if (cfg.augmentation.crop_size <= 0 || cfg.augmentation.crop_size > kPatchSize)
        throw ConfigError("augmentation.crop_size must lie in (0, 256]");
    if (!in01(cfg.augmentation.hflip_probability))
        throw ConfigError("augmentation.hflip_probability must lie in [0,1]");
    for (double s : cfg.augmentation.channel_std)
        if (s <= 0.0) throw ConfigError("augmentation.channel_std must be positive");
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
        throw ConfigError("patching.train_fraction must lie in (0,1)");
    if (cfg.labeling.buffer_distance < 0) throw ConfigError("patching.buffer_distance must be >= 0");
    if (cfg.labeling.other_cap_ratio < 0.0)
        throw ConfigError("patching.other_cap_ratio must be >= 0");
    if (cfg.scorer.epochs <= 0 || cfg.scorer.batch_size <= 0)
        throw ConfigError("scorer.epochs and scorer.batch_size must be positive");
    if (!(cfg.scorer.learning_rate > 0.0)) throw ConfigError("scorer.learning_rate must be positive");
    if (cfg.scorer.early_stop_patience < 1) throw ConfigError("scorer.early_stop_patience must be >= 1");
    if (!in01(cfg.fixed_beta)) throw ConfigError("aggregation.fixed_beta must lie in [0,1]");
    if (cfg.sweep_fractions.empty()) throw ConfigError("evaluation.fractions is empty");
    for (double f : cfg.sweep_fractions)
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("evaluation.fractions must lie in (0,1]");
    if (cfg.sweep_repeats < 2) throw ConfigError("evaluation.repeats must be >= 2");
    if (!in01(cfg.render.overlay_alpha)) throw ConfigError("render.overlay_alpha must lie in [0,1]");
    if (cfg.render.boundary_thickness < 1) throw ConfigError("render.boundary_thickness must be >= 1");
    if (cfg.render.optics_min_pts < 2) throw ConfigError("render.optics_min_pts must be >= 2");
    if (!(cfg.render.optics_eps > 0.0)) throw ConfigError("render.optics_eps must be positive");
    if (cfg.synth.n_slides <= 0) throw ConfigError("synth.n_slides must be positive");
    if (!in01(cfg.synth.class_balance)) throw ConfigError("synth.class_balance must lie in [0,1]");
    if (cfg.synth.slide_width < kPatchSize || cfg.synth.slide_height < kPatchSize)
        throw ConfigError("synth slides must be at least one patch in each dimension");
    if (cfg.synth.roi_count_range[0] < 1 ||
        cfg.synth.roi_count_range[1] < cfg.synth.roi_count_range[0])
        throw ConfigError("synth.roi_count_range is not an ordered range starting at 1+");
    if (!(cfg.synth.roi_area_fraction_range[0] > 0.0) ||
        cfg.synth.roi_area_fraction_range[1] < cfg.synth.roi_area_fraction_range[0] ||
        cfg.synth.roi_area_fraction_range[1] > 1.0)
        throw ConfigError("synth.roi_area_fraction_range must be ordered within (0,1]");
    if (cfg.synth.class_separability < 0.0)
        throw ConfigError("synth.class_separability must be >= 0");
    if (!in01(cfg.synth.annotation_coverage))
        throw ConfigError("synth.annotation_coverage must lie in [0,1]");
}

} // namespace melroi
