#include "melroi/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "melroi/errors.hpp"

namespace melroi {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image8 read_png_file(std::FILE* fp, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode PNG: " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    Image8 img(static_cast<int>(png_get_image_width(png, info)),
               static_cast<int>(png_get_image_height(png, info)), 3);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = img.row(y);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

Image8 read_ppm_file(std::FILE* fp, const std::string& path) {
    auto next_token = [&]() -> std::string {
        std::string tok;
        int c;
        for (;;) {
            c = std::fgetc(fp);
            if (c == EOF) throw IoError("truncated PPM header: " + path);
            if (c == '#') {
                while (c != EOF && c != '\n') c = std::fgetc(fp);
                continue;
            }
            if (!std::isspace(c)) break;
        }
        while (c != EOF && !std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            c = std::fgetc(fp);
        }
        return tok;
    };
    if (next_token() != "P6") throw IoError("unsupported PPM variant (want P6): " + path);
    const int w = std::atoi(next_token().c_str());
    const int h = std::atoi(next_token().c_str());
    const int maxval = std::atoi(next_token().c_str());
    if (w <= 0 || h <= 0 || maxval != 255)
        throw IoError("unsupported PPM geometry (need maxval 255): " + path);
    Image8 img(w, h, 3);
    if (std::fread(img.data.data(), 1, img.data.size(), fp) != img.data.size())
        throw IoError("truncated PPM payload: " + path);
    return img;
}

} // namespace

Image8 read_image(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open image: " + path);
    unsigned char magic[8] = {0};
    const std::size_t got = std::fread(magic, 1, sizeof(magic), fp.get());
    std::rewind(fp.get());
    if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) return read_png_file(fp.get(), path);
    if (got >= 2 && magic[0] == 'P' && magic[1] == '6') return read_ppm_file(fp.get(), path);
    throw IoError("unrecognized image format (PNG or P6 PPM expected): " + path);
}

void write_png(const std::string& path, const Image8& img) {
    int color_type;
    switch (img.channels) {
        case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
        case 3: color_type = PNG_COLOR_TYPE_RGB; break;
        case 4: color_type = PNG_COLOR_TYPE_RGBA; break;
        default: throw IoError("write_png: unsupported channel count");
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write image: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.row(y));
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_ppm(const std::string& path, const Image8& img) {
    if (img.channels != 3) throw IoError("write_ppm expects RGB");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write image: " + path);
    std::fprintf(fp.get(), "P6\n%d %d\n255\n", img.width, img.height);
    if (std::fwrite(img.data.data(), 1, img.data.size(), fp.get()) != img.data.size())
        throw IoError("short write: " + path);
}

} // namespace melroi
