#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "melroi/types.hpp"

namespace melroi {

// One row of the patch-record CSV schema:
//   slide_id,grid_x,grid_y,tissue,label,s_mel,s_nev,s_other,in_annotation
// Score columns are empty until a scorer has run; they are raw doubles here
// because external files may violate the sum-to-one invariant (ingestion
// validates them).
struct PatchCsvRow {
    std::string slide_id;
    int grid_x = 0;
    int grid_y = 0;
    bool tissue = false;
    std::optional<PatchClass> label;
    std::optional<std::array<double, 3>> scores;
    bool in_annotation = false;
};

std::string write_patch_csv(const std::vector<PatchCsvRow>& rows);
std::vector<PatchCsvRow> parse_patch_csv(const std::string& text);

void save_patch_csv(const std::string& path, const std::vector<PatchCsvRow>& rows);
std::vector<PatchCsvRow> load_patch_csv(const std::string& path);

// Shortest round-trip decimal form (std::to_chars).
std::string format_double(double v);

// Generic comma splitter used by the CSV readers; no quoting in any of our
// schemas (slide ids are word-like).
std::vector<std::string> split_csv_line(const std::string& line);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace melroi
