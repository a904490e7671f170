#include "melroi/patch_csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "melroi/errors.hpp"
#include "melroi/grid.hpp"

namespace melroi {

namespace {
constexpr const char* kHeader = "slide_id,grid_x,grid_y,tissue,label,s_mel,s_nev,s_other,in_annotation";

double parse_double(const std::string& s, const char* what, std::size_t line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ValidationError("patch CSV line " + std::to_string(line_no) + ": bad " + what +
                              " value '" + s + "'");
    return v;
}

long parse_long(const std::string& s, const char* what, std::size_t line_no) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ValidationError("patch CSV line " + std::to_string(line_no) + ": bad " + what +
                              " value '" + s + "'");
    return v;
}
} // namespace

std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string write_patch_csv(const std::vector<PatchCsvRow>& rows) {
    std::string out(kHeader);
    out.push_back('\n');
    for (const PatchCsvRow& r : rows) {
        out += r.slide_id;
        out += ',' + std::to_string(r.grid_x) + ',' + std::to_string(r.grid_y);
        out += r.tissue ? ",1," : ",0,";
        if (r.label) out += to_string(*r.label);
        if (r.scores) {
            for (double s : *r.scores) out += ',' + format_double(s);
        } else {
            out += ",,,";
        }
        out += r.in_annotation ? ",1\n" : ",0\n";
    }
    return out;
}

std::vector<PatchCsvRow> parse_patch_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<PatchCsvRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != kHeader)
                throw ValidationError("patch CSV: unexpected header '" + line + "'");
            continue;
        }
        const std::vector<std::string> cols = split_csv_line(line);
        if (cols.size() != 9)
            throw ValidationError("patch CSV line " + std::to_string(line_no) + ": expected 9 columns, got " +
                                  std::to_string(cols.size()));
        PatchCsvRow r;
        r.slide_id = cols[0];
        r.grid_x = static_cast<int>(parse_long(cols[1], "grid_x", line_no));
        r.grid_y = static_cast<int>(parse_long(cols[2], "grid_y", line_no));
        r.tissue = parse_long(cols[3], "tissue", line_no) != 0;
        if (!cols[4].empty()) {
            r.label = patch_class_from_string(cols[4]);
            if (!r.label)
                throw ValidationError("patch CSV line " + std::to_string(line_no) + ": unknown label '" +
                                      cols[4] + "'");
        }
        const bool any_score = !cols[5].empty() || !cols[6].empty() || !cols[7].empty();
        if (any_score) {
            if (cols[5].empty() || cols[6].empty() || cols[7].empty())
                throw ValidationError("patch CSV line " + std::to_string(line_no) +
                                      ": partial score triplet");
            r.scores = {{parse_double(cols[5], "s_mel", line_no),
                         parse_double(cols[6], "s_nev", line_no),
                         parse_double(cols[7], "s_other", line_no)}};
        }
        r.in_annotation = parse_long(cols[8], "in_annotation", line_no) != 0;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out << content;
    if (!out) throw IoError("short write: " + path);
}

void save_patch_csv(const std::string& path, const std::vector<PatchCsvRow>& rows) {
    write_text_file(path, write_patch_csv(rows));
}

std::vector<PatchCsvRow> load_patch_csv(const std::string& path) {
    return parse_patch_csv(read_text_file(path));
}

} // namespace melroi
