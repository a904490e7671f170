#include "melroi/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "melroi/aggregate.hpp"
#include "melroi/annotations.hpp"
#include "melroi/classifier.hpp"
#include "melroi/dataset.hpp"
#include "melroi/grid.hpp"
#include "melroi/image_io.hpp"
#include "melroi/manifest.hpp"
#include "melroi/optics.hpp"
#include "melroi/parallel.hpp"
#include "melroi/patch_csv.hpp"
#include "melroi/render.hpp"
#include "melroi/rng.hpp"
#include "melroi/stain.hpp"
#include "melroi/synthgen.hpp"
#include "melroi/tissue.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace melroi {

namespace {

constexpr const char* kPatchesCsv = "patches.csv";
constexpr const char* kFeaturesCsv = "features.csv";
constexpr const char* kSplitJson = "split.json";
constexpr const char* kStainsJson = "stains.json";
constexpr const char* kSummaryJson = "extract_summary.json";
constexpr const char* kModelJson = "model.json";
constexpr const char* kScoresCsv = "scores.csv";
constexpr const char* kResultsJson = "slide_results.json";
constexpr const char* kEvalJson = "eval_report.json";
constexpr const char* kEvalTxt = "eval_report.txt";
constexpr const char* kRobustnessJson = "robustness.json";
constexpr const char* kRobustnessTxt = "robustness.txt";

std::string out_path(const PipelineConfig& cfg, const std::string& name) {
    return (fs::path(cfg.output_dir) / name).string();
}

std::string manifest_file(const PipelineConfig& cfg) {
    const fs::path p(cfg.manifest_path);
    if (p.is_absolute()) return cfg.manifest_path;
    return (fs::path(cfg.output_dir) / p).string();
}

void require_artifact(const std::string& path, const std::string& producer) {
    if (!fs::exists(path))
        throw MissingArtifact("missing artifact " + path + "; run `" + producer + "` first");
}

std::uint64_t slide_salt(const std::string& slide_id) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : slide_id) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---- features.csv ----

std::string feature_header() {
    std::string h = "slide_id,grid_x,grid_y";
    for (int i = 0; i < kFeatureCount; ++i) h += std::string(",") + kFeatureNames[i];
    return h;
}

struct FeatureRow {
    std::string slide_id;
    int grid_x = 0;
    int grid_y = 0;
    PatchFeatures features{};
};

void save_features_csv(const std::string& path, const std::vector<FeatureRow>& rows) {
    std::string out = feature_header();
    out.push_back('\n');
    for (const FeatureRow& r : rows) {
        out += r.slide_id + ',' + std::to_string(r.grid_x) + ',' + std::to_string(r.grid_y);
        for (double f : r.features) out += ',' + format_double(f);
        out.push_back('\n');
    }
    write_text_file(path, out);
}

std::vector<FeatureRow> load_features_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    std::vector<FeatureRow> rows;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != feature_header())
                throw ValidationError("features CSV: unexpected header");
            continue;
        }
        const std::vector<std::string> cols = split_csv_line(line);
        if (cols.size() != 3 + kFeatureCount)
            throw ValidationError("features CSV line " + std::to_string(line_no) +
                                  ": wrong column count");
        FeatureRow r;
        r.slide_id = cols[0];
        r.grid_x = std::stoi(cols[1]);
        r.grid_y = std::stoi(cols[2]);
        for (int i = 0; i < kFeatureCount; ++i) {
            const std::string& c = cols[3 + i];
            auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), r.features[i]);
            if (ec != std::errc() || ptr != c.data() + c.size())
                throw ValidationError("features CSV line " + std::to_string(line_no) +
                                      ": bad value '" + c + "'");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---- split.json ----

struct SplitArtifact {
    double fraction = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

void save_split(const std::string& path, const SplitArtifact& split) {
    json doc;
    doc["fraction"] = split.fraction;
    doc["seed"] = split.seed;
    doc["train"] = split.train_ids;
    doc["test"] = split.test_ids;
    write_text_file(path, doc.dump(2) + "\n");
}

SplitArtifact load_split(const std::string& path) {
    const json doc = json::parse(read_text_file(path));
    SplitArtifact split;
    split.fraction = doc.at("fraction").get<double>();
    split.seed = doc.at("seed").get<std::uint64_t>();
    split.train_ids = doc.at("train").get<std::vector<std::string>>();
    split.test_ids = doc.at("test").get<std::vector<std::string>>();
    return split;
}

// ---- model.json ----

void save_model(const std::string& path, const ClassifierModel& model) {
    json doc;
    json weights = json::array();
    for (const auto& row : model.weights) weights.push_back(row);
    doc["weights"] = weights;
    doc["training_meta"] = {{"epochs", model.training_meta.epochs_run},
                            {"learning_rate", model.training_meta.learning_rate},
                            {"batch_size", model.training_meta.batch_size},
                            {"seed", model.training_meta.seed},
                            {"loss_curve", model.training_meta.loss_curve},
                            {"feature_count", kFeatureCount}};
    write_text_file(path, doc.dump(2) + "\n");
}

ClassifierModel load_model(const std::string& path) {
    const json doc = json::parse(read_text_file(path));
    ClassifierModel model;
    const json& w = doc.at("weights");
    if (w.size() != kClassCount) throw ValidationError("model.json: expected 3 weight rows");
    for (int c = 0; c < kClassCount; ++c) {
        const auto row = w[c].get<std::vector<double>>();
        if (row.size() != kFeatureCount + 1)
            throw ValidationError("model.json: weight row has wrong length");
        std::copy(row.begin(), row.end(), model.weights[c].begin());
    }
    const json& meta = doc.at("training_meta");
    model.training_meta.epochs_run = meta.at("epochs").get<int>();
    model.training_meta.learning_rate = meta.at("learning_rate").get<double>();
    model.training_meta.batch_size = meta.at("batch_size").get<int>();
    model.training_meta.seed = meta.at("seed").get<std::uint64_t>();
    model.training_meta.loss_curve = meta.at("loss_curve").get<std::vector<double>>();
    return model;
}

// ---- grouped patch rows ----

struct SlideRows {
    std::string slide_id;
    std::vector<PatchCsvRow> rows;
};

std::vector<SlideRows> group_by_slide(const std::vector<PatchCsvRow>& rows) {
    std::map<std::string, std::vector<PatchCsvRow>> grouped;
    for (const PatchCsvRow& r : rows) grouped[r.slide_id].push_back(r);
    std::vector<SlideRows> out;
    for (auto& [id, rs] : grouped) out.push_back({id, std::move(rs)});
    return out;
}

PatchRecord record_of(const PatchCsvRow& row) {
    PatchRecord rec;
    rec.grid_x = row.grid_x;
    rec.grid_y = row.grid_y;
    rec.tissue = row.tissue;
    rec.label = row.label;
    rec.in_annotation = row.in_annotation;
    if (row.scores) {
        const auto& s = *row.scores;
        rec.scores = ScoreTriplet{s[0], s[1], s[2]};
    }
    return rec;
}

std::map<std::string, std::optional<SlideLabel>> label_index(const CohortManifest& manifest) {
    std::map<std::string, std::optional<SlideLabel>> out;
    for (const ManifestEntry& e : manifest.slides) out[e.slide_id] = e.label;
    return out;
}

// Scores every tissue row that has features; returns rows with scores set.
void apply_model_scores(std::vector<PatchCsvRow>& rows, const std::vector<FeatureRow>& features,
                        const ClassifierModel& model) {
    std::map<std::tuple<std::string, int, int>, const PatchFeatures*> index;
    for (const FeatureRow& f : features) index[{f.slide_id, f.grid_x, f.grid_y}] = &f.features;
    for (PatchCsvRow& row : rows) {
        if (!row.tissue) continue;
        const auto it = index.find({row.slide_id, row.grid_x, row.grid_y});
        if (it == index.end())
            throw MissingArtifact("no features for tissue patch " + row.slide_id + ":" +
                                  std::to_string(row.grid_x) + "," + std::to_string(row.grid_y) +
                                  "; re-run `extract`");
        const ScoreTriplet s = score(model, *it->second);
        row.scores = {{s.s_mel, s.s_nev, s.s_other}};
    }
}

std::vector<EvalSlideInput> build_eval_inputs(const std::vector<PatchCsvRow>& rows,
                                              const std::vector<std::string>& slide_ids,
                                              const CohortManifest& manifest) {
    const std::set<std::string> wanted(slide_ids.begin(), slide_ids.end());
    auto labels = label_index(manifest);
    std::vector<EvalSlideInput> inputs;
    for (auto& group : group_by_slide(rows)) {
        if (!wanted.count(group.slide_id)) continue;
        EvalSlideInput in;
        in.slide_id = group.slide_id;
        const auto it = labels.find(group.slide_id);
        if (it != labels.end()) in.true_label = it->second;
        for (const PatchCsvRow& r : group.rows) in.records.push_back(record_of(r));
        inputs.push_back(std::move(in));
    }
    return inputs;
}

json slide_eval_json(const PerSlideEval& s) {
    json j;
    j["slide_id"] = s.slide_id;
    j["true_label"] = s.true_label ? json(to_string(*s.true_label)) : json(nullptr);
    j["predicted_label"] = to_string(s.predicted_label);
    j["n_mel"] = s.n_mel;
    j["n_nev"] = s.n_nev;
    j["n_other"] = s.n_other;
    j["beta"] = s.beta;
    j["k"] = s.roi_size;
    j["iou"] = s.iou ? json(*s.iou) : json(nullptr);
    j["tie_flag"] = s.tie_flag;
    return j;
}

} // namespace

// ---------------------------------------------------------------------------

EvalReport evaluate_slides(std::vector<EvalSlideInput> slides, const EvalOptions& options) {
    std::sort(slides.begin(), slides.end(),
              [](const EvalSlideInput& a, const EvalSlideInput& b) { return a.slide_id < b.slide_id; });
    EvalReport report;
    report.split_fraction = options.split_fraction;
    report.seed = options.seed;
    long patch_correct = 0, patch_total = 0;
    long slide_correct = 0, slide_total = 0;
    double iou_sum = 0.0;
    std::vector<std::pair<SlideLabel, SlideLabel>> confusion_pairs;

    for (const EvalSlideInput& slide : slides) {
        const bool has_annotation =
            std::any_of(slide.records.begin(), slide.records.end(),
                        [](const PatchRecord& r) { return r.in_annotation; });
        if (!slide.true_label && !has_annotation) {
            report.warnings.push_back("slide " + slide.slide_id +
                                      " skipped: no label and no annotations");
            continue;
        }
        std::vector<const PatchRecord*> scored;
        for (const PatchRecord& r : slide.records)
            if (r.scores) scored.push_back(&r);
        if (scored.empty()) {
            report.warnings.push_back("slide " + slide.slide_id + " skipped: no scored patches");
            continue;
        }

        const auto [pred, votes] = classify_slide(slide.records);
        PerSlideEval entry;
        entry.slide_id = slide.slide_id;
        entry.true_label = slide.true_label;
        entry.predicted_label = pred;
        entry.n_mel = votes.n_mel;
        entry.n_nev = votes.n_nev;
        entry.n_other = votes.n_other;
        entry.tie_flag = votes.tie_flag;

        for (const PatchRecord& r : slide.records) {
            if (!r.label || !r.scores) continue;
            ++patch_total;
            if (r.scores->argmax() == *r.label) ++patch_correct;
        }
        if (slide.true_label) {
            ++slide_total;
            if (pred == *slide.true_label) ++slide_correct;
            confusion_pairs.emplace_back(*slide.true_label, pred);
        }

        entry.beta = options.beta_from_annotations ? annotated_ratio(slide.records)
                                                   : options.fixed_beta;
        const auto ranked = rank_patches(slide.records, pred);
        const std::set<PatchKey> roi = select_roi(ranked, entry.beta);
        entry.roi_size = static_cast<long>(roi.size());

        std::set<PatchKey> annotated;
        for (const PatchRecord& r : slide.records)
            if (r.tissue && r.in_annotation) annotated.emplace(r.grid_x, r.grid_y);
        if (!annotated.empty()) {
            entry.iou = patch_iou(annotated, roi);
            iou_sum += *entry.iou;
            ++report.slides_with_iou;
        } else {
            report.warnings.push_back("slide " + slide.slide_id +
                                      " has no annotated tissue patches; IoU skipped");
        }
        ++report.slides_evaluated;
        report.per_slide.push_back(std::move(entry));
    }

    report.patches_evaluated = patch_total;
    report.patch_accuracy =
        patch_total > 0 ? static_cast<double>(patch_correct) / static_cast<double>(patch_total) : 0.0;
    report.slide_accuracy =
        slide_total > 0 ? static_cast<double>(slide_correct) / static_cast<double>(slide_total) : 0.0;
    report.mean_iou = report.slides_with_iou > 0
                          ? iou_sum / static_cast<double>(report.slides_with_iou)
                          : 0.0;
    report.confusion = confusion_matrix(confusion_pairs);
    return report;
}

std::string format_eval_table(const EvalReport& report) {
    char buf[256];
    std::string out;
    out += "evaluation metric                 value\n";
    out += "--------------------------------  ------\n";
    std::snprintf(buf, sizeof(buf), "patch classification accuracy     %.4f\n",
                  report.patch_accuracy);
    out += buf;
    std::snprintf(buf, sizeof(buf), "slide classification accuracy     %.4f\n",
                  report.slide_accuracy);
    out += buf;
    std::snprintf(buf, sizeof(buf), "IoU                               %.4f\n", report.mean_iou);
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "(%ld slides, %ld labeled patches, %ld slides with IoU)\n",
                  report.slides_evaluated, report.patches_evaluated, report.slides_with_iou);
    out += buf;
    return out;
}

std::string format_robustness_table(const RobustnessSummary& summary) {
    char buf[256];
    std::string out;
    out += "split     patch accuracy                slide accuracy                IoU\n";
    out += "          mean    95% CI                mean    95% CI                mean    95% CI\n";
    for (const RobustnessRow& row : summary.rows) {
        std::snprintf(buf, sizeof(buf),
                      "%-9.2f %.4f  [%.4f, %.4f]      %.4f  [%.4f, %.4f]      %.4f  [%.4f, %.4f]\n",
                      row.fraction, row.patch_accuracy.mean, row.patch_accuracy.ci_low,
                      row.patch_accuracy.ci_high, row.slide_accuracy.mean,
                      row.slide_accuracy.ci_low, row.slide_accuracy.ci_high, row.iou.mean,
                      row.iou.ci_low, row.iou.ci_high);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "(%d repeats per split)\n", summary.n_repeats);
    out += buf;
    return out;
}

// ---------------------------------------------------------------------------

void stage_synth(const PipelineConfig& cfg) {
    const std::string manifest_path = manifest_file(cfg);
    const fs::path cohort_dir = fs::path(manifest_path).parent_path();
    fs::create_directories(cohort_dir / "slides");
    fs::create_directories(cohort_dir / "annotations");
    fs::create_directories(cohort_dir / "masks");

    const std::vector<SlidePlan> plans = plan_cohort(cfg.synth);

    // Test slides mirror the fully annotated test protocol: they receive
    // coverage 1.0, train slides the configured partial coverage. Geometry
    // is unaffected by coverage.
    std::set<std::string> test_ids;
    try {
        std::vector<SlideTag> tags;
        for (const SlidePlan& p : plans) tags.push_back({p.slide_id, p.label});
        const SplitResult split = stratified_split(tags, cfg.train_fraction, cfg.seed);
        test_ids.insert(split.test_ids.begin(), split.test_ids.end());
    } catch (const StratificationError&) {
        std::cerr << "synth: cohort too small to pre-assign a test split; "
                     "using uniform annotation coverage\n";
    }

    std::vector<ManifestEntry> entries(plans.size());
    parallel_for_index(plans.size(), cfg.workers, [&](std::size_t i) {
        const SlidePlan& plan = plans[i];
        const double coverage =
            test_ids.count(plan.slide_id) ? 1.0 : cfg.synth.annotation_coverage;
        const GeneratedSlide slide = generate_slide(cfg.synth, plan, i, coverage);
        const std::string slide_rel = "slides/" + plan.slide_id + ".png";
        const std::string xml_rel = "annotations/" + plan.slide_id + ".xml";
        const std::string mask_rel = "masks/" + plan.slide_id + ".png";
        write_png((cohort_dir / slide_rel).string(), slide.raster.pixels);
        write_png((cohort_dir / mask_rel).string(), slide.truth_mask);
        write_text_file((cohort_dir / xml_rel).string(),
                        serialize_annotation_xml(slide.annotations));
        entries[i] = {plan.slide_id, slide_rel, plan.label, xml_rel, mask_rel};
    });
    save_manifest(manifest_path, entries);

    long n_mel = 0;
    for (const SlidePlan& p : plans)
        if (p.label == SlideLabel::Melanoma) ++n_mel;
    json summary;
    summary["n_slides"] = plans.size();
    summary["n_melanoma"] = n_mel;
    summary["n_nevus"] = static_cast<long>(plans.size()) - n_mel;
    summary["seed"] = cfg.seed;
    write_text_file((cohort_dir / "cohort_summary.json").string(), summary.dump(2) + "\n");
}

namespace {

struct ExtractedSlide {
    std::vector<PatchCsvRow> rows;
    std::vector<FeatureRow> features;
    StainProfile stains;
    bool stain_fallback = false;
    std::vector<std::string> warnings;
};

ExtractedSlide extract_one(const PipelineConfig& cfg, const CohortManifest& manifest,
                           const ManifestEntry& entry) {
    ExtractedSlide out;
    const SlideRaster raster = load_slide(manifest, entry);
    const PatchGrid grid = build_grid(raster);

    std::vector<PatchRecord> records;
    std::vector<Planes8> patch_planes;
    records.reserve(grid.patch_count());
    patch_planes.reserve(grid.patch_count());
    for (int gy = 0; gy < grid.rows; ++gy) {
        for (int gx = 0; gx < grid.cols; ++gx) {
            PatchRecord rec;
            rec.grid_x = gx;
            rec.grid_y = gy;
            Planes8 planes = to_planes(patch_pixels(raster, gx, gy));
            rec.tissue = tissue_pixel_fraction(planes, cfg.tissue) > cfg.tissue.fraction;
            records.push_back(rec);
            patch_planes.push_back(std::move(planes));
        }
    }

    // Per-slide stain profile from an evenly spaced sample of tissue patches.
    std::vector<std::size_t> tissue_idx;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].tissue) tissue_idx.push_back(i);
    out.stains = cfg.reference_stains;
    if (!tissue_idx.empty()) {
        std::vector<std::size_t> sample_idx;
        const std::size_t want = std::min<std::size_t>(tissue_idx.size(),
                                                       static_cast<std::size_t>(cfg.stain_sample_patches));
        for (std::size_t i = 0; i < want; ++i)
            sample_idx.push_back(tissue_idx[i * tissue_idx.size() / want]);
        const std::size_t per_patch = static_cast<std::size_t>(kPatchSize) * kPatchSize;
        const std::size_t total = sample_idx.size() * per_patch;
        const std::size_t stride =
            std::max<std::size_t>(1, total / static_cast<std::size_t>(cfg.stain_sample_pixel_cap));
        Planes8 sample;
        sample.height = 1;
        for (std::size_t idx : sample_idx) {
            const Planes8& p = patch_planes[idx];
            for (std::size_t i = 0; i < per_patch; i += stride) {
                sample.r.push_back(p.r[i]);
                sample.g.push_back(p.g[i]);
                sample.b.push_back(p.b[i]);
            }
        }
        sample.width = static_cast<int>(sample.r.size());
        try {
            out.stains = estimate_stains(sample);
        } catch (const Error& e) {
            out.stain_fallback = true;
            out.warnings.push_back("slide " + entry.slide_id +
                                   ": stain estimation failed (" + e.what() +
                                   "); using reference profile");
        }
    }

    const auto annotations =
        load_annotations(manifest, entry, raster.pixels.width, raster.pixels.height);
    if (annotations) apply_membership(grid, *annotations, records);
    if (entry.label)
        label_patches(grid, records, *entry.label, cfg.labeling,
                      seed_for(cfg.seed, "label", slide_salt(entry.slide_id)));

    for (std::size_t i = 0; i < records.size(); ++i) {
        const PatchRecord& rec = records[i];
        PatchCsvRow row;
        row.slide_id = entry.slide_id;
        row.grid_x = rec.grid_x;
        row.grid_y = rec.grid_y;
        row.tissue = rec.tissue;
        row.label = rec.label;
        row.in_annotation = rec.in_annotation;
        out.rows.push_back(row);
        if (rec.tissue) {
            const Image8 normalized =
                normalize_patch(from_planes(patch_planes[i]), out.stains, cfg.reference_stains);
            FeatureRow fr;
            fr.slide_id = entry.slide_id;
            fr.grid_x = rec.grid_x;
            fr.grid_y = rec.grid_y;
            fr.features = extract_features(normalized, cfg.reference_stains, cfg.tissue);
            out.features.push_back(std::move(fr));
        }
    }
    return out;
}

} // namespace

void stage_extract(const PipelineConfig& cfg) {
    const std::string manifest_path = manifest_file(cfg);
    require_artifact(manifest_path, "synth (or provide a cohort manifest)");
    const CohortManifest manifest = load_manifest(manifest_path);
    if (manifest.slides.empty()) throw ValidationError("manifest lists no slides");
    fs::create_directories(cfg.output_dir);

    std::vector<ExtractedSlide> extracted(manifest.slides.size());
    parallel_for_index(manifest.slides.size(), cfg.workers, [&](std::size_t i) {
        extracted[i] = extract_one(cfg, manifest, manifest.slides[i]);
    });

    std::vector<PatchCsvRow> all_rows;
    std::vector<FeatureRow> all_features;
    json stains = json::object();
    std::vector<std::string> warnings;
    for (std::size_t i = 0; i < extracted.size(); ++i) {
        ExtractedSlide& ex = extracted[i];
        all_rows.insert(all_rows.end(), ex.rows.begin(), ex.rows.end());
        all_features.insert(all_features.end(), ex.features.begin(), ex.features.end());
        warnings.insert(warnings.end(), ex.warnings.begin(), ex.warnings.end());
        const StainProfile& p = ex.stains;
        stains[manifest.slides[i].slide_id] = {
            {"stain_matrix",
             {{p.stain_matrix[0], p.stain_matrix[2], p.stain_matrix[4]},
              {p.stain_matrix[1], p.stain_matrix[3], p.stain_matrix[5]}}},
            {"max_concentrations", {p.max_concentrations[0], p.max_concentrations[1]}},
            {"fallback", ex.stain_fallback}};
    }
    save_patch_csv(out_path(cfg, kPatchesCsv), all_rows);
    save_features_csv(out_path(cfg, kFeaturesCsv), all_features);
    write_text_file(out_path(cfg, kStainsJson), stains.dump(2) + "\n");

    std::vector<SlideTag> tags;
    for (const ManifestEntry& e : manifest.slides)
        if (e.label) tags.push_back({e.slide_id, *e.label});
    if (tags.empty()) throw ValidationError("no labeled slides; cannot build a split");
    const SplitResult split = stratified_split(tags, cfg.train_fraction, cfg.seed);
    SplitArtifact split_art{cfg.train_fraction, cfg.seed, split.train_ids, split.test_ids};
    save_split(out_path(cfg, kSplitJson), split_art);

    std::array<long, 3> class_counts{};
    const std::set<std::string> train_set(split.train_ids.begin(), split.train_ids.end());
    for (const PatchCsvRow& row : all_rows)
        if (row.label && train_set.count(row.slide_id))
            ++class_counts[static_cast<int>(*row.label)];
    json summary;
    summary["n_slides"] = manifest.slides.size();
    summary["class_counts"] = {{"melanoma", class_counts[0]},
                               {"nevus", class_counts[1]},
                               {"other", class_counts[2]}};
    summary["seed"] = cfg.seed;
    summary["fraction"] = cfg.train_fraction;
    summary["warnings"] = warnings;
    write_text_file(out_path(cfg, kSummaryJson), summary.dump(2) + "\n");
    for (const std::string& w : warnings) std::cerr << "extract: " << w << "\n";
}

namespace {

// Labeled training examples for the given slide ids.
std::pair<std::vector<PatchFeatures>, std::vector<PatchClass>> training_examples(
    const std::vector<PatchCsvRow>& rows, const std::vector<FeatureRow>& features,
    const std::set<std::string>& slide_ids) {
    std::map<std::tuple<std::string, int, int>, const PatchFeatures*> index;
    for (const FeatureRow& f : features) index[{f.slide_id, f.grid_x, f.grid_y}] = &f.features;
    std::vector<PatchFeatures> xs;
    std::vector<PatchClass> ys;
    for (const PatchCsvRow& row : rows) {
        if (!row.label || !slide_ids.count(row.slide_id)) continue;
        const auto it = index.find({row.slide_id, row.grid_x, row.grid_y});
        if (it == index.end())
            throw MissingArtifact("no features for labeled patch " + row.slide_id + ":" +
                                  std::to_string(row.grid_x) + "," + std::to_string(row.grid_y));
        xs.push_back(*it->second);
        ys.push_back(*row.label);
    }
    return {std::move(xs), std::move(ys)};
}

} // namespace

void stage_train(const PipelineConfig& cfg) {
    require_artifact(out_path(cfg, kPatchesCsv), "extract");
    require_artifact(out_path(cfg, kFeaturesCsv), "extract");
    require_artifact(out_path(cfg, kSplitJson), "extract");
    const auto rows = load_patch_csv(out_path(cfg, kPatchesCsv));
    const auto features = load_features_csv(out_path(cfg, kFeaturesCsv));
    const SplitArtifact split = load_split(out_path(cfg, kSplitJson));

    const std::set<std::string> train_ids(split.train_ids.begin(), split.train_ids.end());
    auto [xs, ys] = training_examples(rows, features, train_ids);
    TrainHyper hyper = cfg.scorer;
    hyper.seed = seed_for(cfg.seed, "train");
    const ClassifierModel model = train(xs, ys, hyper);
    save_model(out_path(cfg, kModelJson), model);
}

void stage_score(const PipelineConfig& cfg) {
    require_artifact(out_path(cfg, kPatchesCsv), "extract");
    std::vector<PatchCsvRow> rows = load_patch_csv(out_path(cfg, kPatchesCsv));
    if (!cfg.external_scores_path.empty()) {
        std::set<ExternalKey> keys;
        for (const PatchCsvRow& r : rows) keys.insert({r.slide_id, r.grid_x, r.grid_y});
        const auto scores = ingest_external_scores(read_text_file(cfg.external_scores_path), keys);
        for (PatchCsvRow& r : rows) {
            const auto it = scores.find({r.slide_id, r.grid_x, r.grid_y});
            if (it != scores.end())
                r.scores = {{it->second.s_mel, it->second.s_nev, it->second.s_other}};
        }
    } else {
        require_artifact(out_path(cfg, kFeaturesCsv), "extract");
        require_artifact(out_path(cfg, kModelJson), "train");
        const auto features = load_features_csv(out_path(cfg, kFeaturesCsv));
        const ClassifierModel model = load_model(out_path(cfg, kModelJson));
        apply_model_scores(rows, features, model);
    }
    save_patch_csv(out_path(cfg, kScoresCsv), rows);
}

void stage_classify(const PipelineConfig& cfg) {
    require_artifact(out_path(cfg, kScoresCsv), "score");
    const auto rows = load_patch_csv(out_path(cfg, kScoresCsv));
    json results = json::array();
    for (const auto& group : group_by_slide(rows)) {
        std::vector<PatchRecord> records;
        for (const PatchCsvRow& r : group.rows) records.push_back(record_of(r));
        const bool any_scored = std::any_of(records.begin(), records.end(),
                                            [](const PatchRecord& r) { return r.scores.has_value(); });
        if (!any_scored) {
            std::cerr << "classify: slide " << group.slide_id << " has no scored patches; skipped\n";
            continue;
        }
        const auto [pred, votes] = classify_slide(records);
        double beta = cfg.fixed_beta;
        if (cfg.beta_from_annotations) beta = annotated_ratio(records);
        const auto ranked = rank_patches(records, pred);
        const std::set<PatchKey> roi = select_roi(ranked, beta);
        json r;
        r["slide_id"] = group.slide_id;
        r["predicted_label"] = to_string(pred);
        r["n_mel"] = votes.n_mel;
        r["n_nev"] = votes.n_nev;
        r["n_other"] = votes.n_other;
        r["beta"] = beta;
        r["k"] = roi.size();
        json patches = json::array();
        for (const PatchKey& key : roi) patches.push_back({key.first, key.second});
        r["roi_patches"] = patches;
        r["tie_flag"] = votes.tie_flag;
        results.push_back(std::move(r));
    }
    json doc;
    doc["slides"] = results;
    write_text_file(out_path(cfg, kResultsJson), doc.dump(2) + "\n");
}

namespace {

// Rows for the test slides, scored from scores.csv when present, otherwise
// from the trained model.
std::vector<PatchCsvRow> scored_rows_for_eval(const PipelineConfig& cfg) {
    if (fs::exists(out_path(cfg, kScoresCsv))) return load_patch_csv(out_path(cfg, kScoresCsv));
    require_artifact(out_path(cfg, kPatchesCsv), "extract");
    require_artifact(out_path(cfg, kFeaturesCsv), "extract");
    if (!fs::exists(out_path(cfg, kModelJson)))
        throw MissingArtifact("missing " + out_path(cfg, kScoresCsv) + " and " +
                              out_path(cfg, kModelJson) + "; run `train` or `score` first");
    std::vector<PatchCsvRow> rows = load_patch_csv(out_path(cfg, kPatchesCsv));
    const auto features = load_features_csv(out_path(cfg, kFeaturesCsv));
    apply_model_scores(rows, features, load_model(out_path(cfg, kModelJson)));
    return rows;
}

json metric_summary_json(const MetricSummary& m) {
    return {{"mean", m.mean}, {"ci_low", m.ci_low}, {"ci_high", m.ci_high}};
}

} // namespace

EvalReport stage_evaluate(const PipelineConfig& cfg) {
    require_artifact(out_path(cfg, kSplitJson), "extract");
    const std::string manifest_path = manifest_file(cfg);
    require_artifact(manifest_path, "synth (or provide a cohort manifest)");
    const CohortManifest manifest = load_manifest(manifest_path);
    const SplitArtifact split = load_split(out_path(cfg, kSplitJson));
    const std::vector<PatchCsvRow> rows = scored_rows_for_eval(cfg);

    EvalOptions options;
    options.beta_from_annotations = cfg.beta_from_annotations;
    options.fixed_beta = cfg.fixed_beta;
    options.split_fraction = split.fraction;
    options.seed = cfg.seed;
    EvalReport report = evaluate_slides(build_eval_inputs(rows, split.test_ids, manifest), options);

    json doc;
    doc["patch_accuracy"] = report.patch_accuracy;
    doc["slide_accuracy"] = report.slide_accuracy;
    doc["mean_iou"] = report.mean_iou;
    doc["patches_evaluated"] = report.patches_evaluated;
    doc["slides_evaluated"] = report.slides_evaluated;
    doc["slides_with_iou"] = report.slides_with_iou;
    doc["split_fraction"] = report.split_fraction;
    doc["seed"] = report.seed;
    doc["confusion"] = {{report.confusion.counts[0][0], report.confusion.counts[0][1]},
                        {report.confusion.counts[1][0], report.confusion.counts[1][1]}};
    json per_slide = json::array();
    for (const PerSlideEval& s : report.per_slide) per_slide.push_back(slide_eval_json(s));
    doc["per_slide"] = per_slide;
    doc["warnings"] = report.warnings;
    write_text_file(out_path(cfg, kEvalJson), doc.dump(2) + "\n");

    const std::string table = format_eval_table(report);
    write_text_file(out_path(cfg, kEvalTxt), table);
    std::cout << table;
    return report;
}

RobustnessSummary stage_sweep(const PipelineConfig& cfg) {
    require_artifact(out_path(cfg, kPatchesCsv), "extract");
    require_artifact(out_path(cfg, kFeaturesCsv), "extract");
    require_artifact(out_path(cfg, kSplitJson), "extract");
    const std::string manifest_path = manifest_file(cfg);
    require_artifact(manifest_path, "synth (or provide a cohort manifest)");
    const CohortManifest manifest = load_manifest(manifest_path);
    const auto rows = load_patch_csv(out_path(cfg, kPatchesCsv));
    const auto features = load_features_csv(out_path(cfg, kFeaturesCsv));
    const SplitArtifact split = load_split(out_path(cfg, kSplitJson));

    auto labels = label_index(manifest);
    std::vector<SlideTag> train_tags;
    for (const std::string& id : split.train_ids) {
        const auto it = labels.find(id);
        if (it != labels.end() && it->second) train_tags.push_back({id, *it->second});
    }
    const std::vector<EvalSlideInput> test_inputs = build_eval_inputs(rows, split.test_ids, manifest);

    struct Task {
        std::size_t fraction_idx;
        int repeat;
    };
    std::vector<Task> tasks;
    for (std::size_t fi = 0; fi < cfg.sweep_fractions.size(); ++fi)
        for (int r = 0; r < cfg.sweep_repeats; ++r) tasks.push_back({fi, r});

    struct TaskResult {
        double patch_acc = 0.0, slide_acc = 0.0, iou = 0.0;
    };
    std::vector<TaskResult> results(tasks.size());
    parallel_for_index(tasks.size(), cfg.workers, [&](std::size_t t) {
        const Task& task = tasks[t];
        const double fraction = cfg.sweep_fractions[task.fraction_idx];
        const std::uint64_t task_seed =
            seed_for(cfg.seed, "sweep", task.fraction_idx * 1009 + static_cast<std::uint64_t>(task.repeat));
        const std::vector<std::string> picked = stratified_subsample(train_tags, fraction, task_seed);
        const std::set<std::string> picked_set(picked.begin(), picked.end());
        auto [xs, ys] = training_examples(rows, features, picked_set);
        TrainHyper hyper = cfg.scorer;
        hyper.seed = seed_for(task_seed, "sweep_train");
        const ClassifierModel model = train(xs, ys, hyper);

        std::map<std::tuple<std::string, int, int>, const PatchFeatures*> index;
        for (const FeatureRow& f : features) index[{f.slide_id, f.grid_x, f.grid_y}] = &f.features;
        std::vector<EvalSlideInput> inputs = test_inputs;
        for (EvalSlideInput& in : inputs) {
            for (PatchRecord& rec : in.records) {
                if (!rec.tissue) continue;
                const auto it = index.find({in.slide_id, rec.grid_x, rec.grid_y});
                if (it != index.end()) rec.scores = score(model, *it->second);
            }
        }
        EvalOptions options;
        options.beta_from_annotations = cfg.beta_from_annotations;
        options.fixed_beta = cfg.fixed_beta;
        options.split_fraction = fraction;
        options.seed = task_seed;
        const EvalReport rep = evaluate_slides(std::move(inputs), options);
        results[t] = {rep.patch_accuracy, rep.slide_accuracy, rep.mean_iou};
    });

    RobustnessSummary summary;
    summary.n_repeats = cfg.sweep_repeats;
    summary.base_seed = cfg.seed;
    for (std::size_t fi = 0; fi < cfg.sweep_fractions.size(); ++fi) {
        std::vector<double> pa, sa, iou;
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            if (tasks[t].fraction_idx != fi) continue;
            pa.push_back(results[t].patch_acc);
            sa.push_back(results[t].slide_acc);
            iou.push_back(results[t].iou);
        }
        RobustnessRow row;
        row.fraction = cfg.sweep_fractions[fi];
        row.patch_accuracy = summarize_repeats(pa);
        row.slide_accuracy = summarize_repeats(sa);
        row.iou = summarize_repeats(iou);
        summary.rows.push_back(row);
    }

    json doc;
    doc["n_repeats"] = summary.n_repeats;
    doc["base_seed"] = summary.base_seed;
    json rows_json = json::array();
    for (const RobustnessRow& row : summary.rows)
        rows_json.push_back({{"fraction", row.fraction},
                             {"patch_accuracy", metric_summary_json(row.patch_accuracy)},
                             {"slide_accuracy", metric_summary_json(row.slide_accuracy)},
                             {"iou", metric_summary_json(row.iou)}});
    doc["rows"] = rows_json;
    write_text_file(out_path(cfg, kRobustnessJson), doc.dump(2) + "\n");

    const std::string table = format_robustness_table(summary);
    write_text_file(out_path(cfg, kRobustnessTxt), table);
    std::cout << table;
    return summary;
}

void stage_visualize(const PipelineConfig& cfg) {
    require_artifact(out_path(cfg, kScoresCsv), "score");
    require_artifact(out_path(cfg, kResultsJson), "classify");
    const std::string manifest_path = manifest_file(cfg);
    require_artifact(manifest_path, "synth (or provide a cohort manifest)");
    const CohortManifest manifest = load_manifest(manifest_path);
    const auto rows = load_patch_csv(out_path(cfg, kScoresCsv));
    const json results = json::parse(read_text_file(out_path(cfg, kResultsJson)));

    std::map<std::string, const ManifestEntry*> entries;
    for (const ManifestEntry& e : manifest.slides) entries[e.slide_id] = &e;
    std::map<std::string, std::vector<PatchCsvRow>> by_slide;
    for (const PatchCsvRow& r : rows) by_slide[r.slide_id].push_back(r);

    const fs::path viz_dir = fs::path(cfg.output_dir) / "viz";
    fs::create_directories(viz_dir);

    const auto& slides = results.at("slides");
    parallel_for_index(slides.size(), cfg.workers, [&](std::size_t i) {
        const json& r = slides[static_cast<int>(i)];
        const std::string slide_id = r.at("slide_id").get<std::string>();
        const auto entry_it = entries.find(slide_id);
        if (entry_it == entries.end())
            throw MissingArtifact("slide " + slide_id + " from results is not in the manifest");

        SlideResult result;
        result.slide_id = slide_id;
        result.predicted_label =
            *slide_label_from_string(r.at("predicted_label").get<std::string>());
        result.n_mel = r.at("n_mel").get<long>();
        result.n_nev = r.at("n_nev").get<long>();
        result.beta = r.at("beta").get<double>();
        result.tie_flag = r.at("tie_flag").get<bool>();
        for (const auto& p : r.at("roi_patches"))
            result.roi_patches.emplace(p[0].get<int>(), p[1].get<int>());

        const SlideRaster raster = load_slide(manifest, *entry_it->second);
        PatchScoreMap score_map;
        const auto rows_it = by_slide.find(slide_id);
        if (rows_it != by_slide.end()) {
            for (const PatchCsvRow& row : rows_it->second) {
                if (!row.scores) continue;
                const double s = result.predicted_label == SlideLabel::Melanoma
                                     ? (*row.scores)[0]
                                     : (*row.scores)[1];
                score_map[{row.grid_x, row.grid_y}] = s;
            }
        }

        for (RenderMode mode : cfg.render_modes) {
            RenderSpec spec = cfg.render;
            spec.mode = mode;
            const Image8 img = render(raster, result, score_map, spec);
            const char* suffix = mode == RenderMode::Boundary
                                     ? "boundary"
                                     : (mode == RenderMode::Overlay ? "overlay" : "heatmap");
            write_png((viz_dir / (slide_id + "_" + suffix + ".png")).string(), img);
        }

        if (cfg.reachability_csv && !result.roi_patches.empty()) {
            std::vector<PatchKey> roi(result.roi_patches.begin(), result.roi_patches.end());
            std::sort(roi.begin(), roi.end(), [](const PatchKey& a, const PatchKey& b) {
                return std::pair(a.second, a.first) < std::pair(b.second, b.first);
            });
            std::vector<OpticsPoint> pts(roi.size());
            for (std::size_t j = 0; j < roi.size(); ++j)
                pts[j] = {static_cast<double>(roi[j].first), static_cast<double>(roi[j].second)};
            const ReachabilityPlot plot =
                optics_order(pts, cfg.render.optics_min_pts, cfg.render.optics_eps);
            std::string csv = "order_index,point_id,reachability\n";
            for (std::size_t j = 0; j < plot.ordering.size(); ++j) {
                csv += std::to_string(j) + ',' + std::to_string(plot.ordering[j]) + ',';
                csv += std::isinf(plot.reachability[j]) ? "inf" : format_double(plot.reachability[j]);
                csv.push_back('\n');
            }
            write_text_file((viz_dir / (slide_id + "_reachability.csv")).string(), csv);
        }
    });
}

} // namespace melroi
