#pragma once

#include <optional>
#include <string>
#include <vector>

#include "melroi/annotations.hpp"
#include "melroi/types.hpp"

namespace melroi {

struct ManifestEntry {
    std::string slide_id;
    std::string path;            // raster, relative to the manifest
    std::optional<SlideLabel> label;
    std::string annotation_path; // optional
    std::string truth_mask_path; // optional
};

struct CohortManifest {
    std::string base_dir; // directory containing the manifest file
    std::vector<ManifestEntry> slides; // sorted by slide_id
};

CohortManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const std::vector<ManifestEntry>& slides);

std::string resolve_path(const CohortManifest& manifest, const std::string& relative);

SlideRaster load_slide(const CohortManifest& manifest, const ManifestEntry& entry);

// Parsed, slide-bound and clamped annotations; nullopt when the entry has
// no annotation file.
std::optional<AnnotationSet> load_annotations(const CohortManifest& manifest,
                                              const ManifestEntry& entry, int slide_width,
                                              int slide_height);

} // namespace melroi
