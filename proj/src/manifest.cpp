#include "melroi/manifest.hpp"

#include <algorithm>
#include <filesystem>

#include <json.hpp>

#include "melroi/image_io.hpp"
#include "melroi/patch_csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace melroi {

CohortManifest load_manifest(const std::string& path) {
    if (!fs::exists(path)) throw MissingArtifact("cohort manifest not found: " + path);
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ValidationError("manifest " + path + ": " + e.what());
    }
    CohortManifest manifest;
    manifest.base_dir = fs::path(path).parent_path().string();
    if (!doc.contains("slides") || !doc["slides"].is_array())
        throw ValidationError("manifest " + path + ": missing 'slides' array");
    for (const json& s : doc["slides"]) {
        ManifestEntry e;
        e.slide_id = s.at("slide_id").get<std::string>();
        e.path = s.at("path").get<std::string>();
        if (s.contains("label") && !s["label"].is_null()) {
            const auto label = slide_label_from_string(s["label"].get<std::string>());
            if (!label)
                throw ValidationError("manifest: unknown label '" + s["label"].get<std::string>() +
                                      "' for " + e.slide_id);
            e.label = label;
        }
        if (s.contains("annotations") && !s["annotations"].is_null())
            e.annotation_path = s["annotations"].get<std::string>();
        if (s.contains("truth_mask") && !s["truth_mask"].is_null())
            e.truth_mask_path = s["truth_mask"].get<std::string>();
        manifest.slides.push_back(std::move(e));
    }
    std::sort(manifest.slides.begin(), manifest.slides.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.slide_id < b.slide_id; });
    for (std::size_t i = 1; i < manifest.slides.size(); ++i)
        if (manifest.slides[i].slide_id == manifest.slides[i - 1].slide_id)
            throw ValidationError("manifest: duplicate slide_id " + manifest.slides[i].slide_id);
    return manifest;
}

void save_manifest(const std::string& path, const std::vector<ManifestEntry>& slides) {
    json doc;
    doc["slides"] = json::array();
    for (const ManifestEntry& e : slides) {
        json s;
        s["slide_id"] = e.slide_id;
        s["path"] = e.path;
        if (e.label) s["label"] = to_string(*e.label);
        if (!e.annotation_path.empty()) s["annotations"] = e.annotation_path;
        if (!e.truth_mask_path.empty()) s["truth_mask"] = e.truth_mask_path;
        doc["slides"].push_back(std::move(s));
    }
    write_text_file(path, doc.dump(2) + "\n");
}

std::string resolve_path(const CohortManifest& manifest, const std::string& relative) {
    const fs::path p(relative);
    if (p.is_absolute() || manifest.base_dir.empty()) return relative;
    return (fs::path(manifest.base_dir) / p).string();
}

SlideRaster load_slide(const CohortManifest& manifest, const ManifestEntry& entry) {
    SlideRaster raster;
    raster.slide_id = entry.slide_id;
    raster.pixels = read_image(resolve_path(manifest, entry.path));
    raster.true_label = entry.label;
    return raster;
}

std::optional<AnnotationSet> load_annotations(const CohortManifest& manifest,
                                              const ManifestEntry& entry, int slide_width,
                                              int slide_height) {
    if (entry.annotation_path.empty()) return std::nullopt;
    const std::string path = resolve_path(manifest, entry.annotation_path);
    if (!fs::exists(path)) throw MissingArtifact("annotation file not found: " + path);
    AnnotationParse parsed = parse_annotation_xml(read_text_file(path));
    parsed.set.slide_id = entry.slide_id;
    clamp_vertices(parsed.set, static_cast<double>(slide_width), static_cast<double>(slide_height));
    return std::move(parsed.set);
}

} // namespace melroi
