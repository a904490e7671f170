#pragma once

#include <string>

#include "melroi/image.hpp"

namespace melroi {

// Reads a PNG or PPM (P6) file; PNG palette/gray/alpha inputs are expanded
// to 8-bit RGB.
Image8 read_image(const std::string& path);

// Writes gray (1), RGB (3) or RGBA (4) PNG. Fixed zlib settings keep the
// output byte-stable across runs.
void write_png(const std::string& path, const Image8& img);

void write_ppm(const std::string& path, const Image8& img);

} // namespace melroi
