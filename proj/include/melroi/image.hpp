#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

#include "melroi/errors.hpp"

namespace melroi {

// Row-major interleaved raster. channels is 1 (gray), 3 (RGB) or 4 (RGBA).
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    Image8() = default;
    Image8(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    std::uint8_t* row(int y) { return data.data() + static_cast<std::size_t>(y) * width * channels; }
    const std::uint8_t* row(int y) const {
        return data.data() + static_cast<std::size_t>(y) * width * channels;
    }

    std::uint8_t* at(int x, int y) { return row(y) + static_cast<std::size_t>(x) * channels; }
    const std::uint8_t* at(int x, int y) const {
        return row(y) + static_cast<std::size_t>(x) * channels;
    }

    bool same_shape(const Image8& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }

    bool operator==(const Image8& o) const {
        return same_shape(o) && data == o.data;
    }
};

// Copies the w x h block with top-left corner (x0, y0).
inline Image8 crop(const Image8& img, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || x0 + w > img.width || y0 + h > img.height)
        throw IndexError("crop outside image bounds");
    Image8 out(w, h, img.channels);
    const std::size_t row_bytes = static_cast<std::size_t>(w) * img.channels;
    for (int y = 0; y < h; ++y)
        std::memcpy(out.row(y), img.at(x0, y0 + y), row_bytes);
    return out;
}

// Planar split of an RGB image; the kernel API works on channel planes.
struct Planes8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> r, g, b;

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

inline Planes8 to_planes(const Image8& img) {
    Planes8 p;
    p.width = img.width;
    p.height = img.height;
    const std::size_t n = img.pixel_count();
    p.r.resize(n);
    p.g.resize(n);
    p.b.resize(n);
    const std::uint8_t* src = img.data.data();
    for (std::size_t i = 0; i < n; ++i) {
        p.r[i] = src[i * 3 + 0];
        p.g[i] = src[i * 3 + 1];
        p.b[i] = src[i * 3 + 2];
    }
    return p;
}

inline Image8 from_planes(const Planes8& p) {
    Image8 img(p.width, p.height, 3);
    std::uint8_t* dst = img.data.data();
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        dst[i * 3 + 0] = p.r[i];
        dst[i * 3 + 1] = p.g[i];
        dst[i * 3 + 2] = p.b[i];
    }
    return img;
}

inline Image8 hflip(const Image8& img) {
    Image8 out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const std::uint8_t* src = img.at(img.width - 1 - x, y);
            std::uint8_t* dst = out.at(x, y);
            for (int c = 0; c < img.channels; ++c) dst[c] = src[c];
        }
    }
    return out;
}

} // namespace melroi
