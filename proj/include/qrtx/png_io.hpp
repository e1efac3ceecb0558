// 8-bit RGB/RGBA PNG ingestion and RGB/grayscale writing via libpng.
#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrtx/image.hpp"
#include "qrtx/matrix.hpp"

namespace qrtx {

struct PngError : std::runtime_error {
    explicit PngError(const std::string& msg) : std::runtime_error("png: " + msg) {}
};

namespace detail {

struct FileCloser {
    FILE* f = nullptr;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

}  // namespace detail

// Samples map to [0,1] as v/255; alpha, when present, is discarded.
inline RgbImage load_png(const std::string& path) {
    detail::FileCloser fc;
    fc.f = std::fopen(path.c_str(), "rb");
    if (!fc.f) throw PngError("cannot open: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw PngError("read struct allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw PngError("info struct allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw PngError("decode failed: " + path);
    }
    png_init_io(png, fc.f);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);

    if (bit_depth != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw PngError("unsupported bit depth (want 8-bit): " + path);
    }
    if (color_type != PNG_COLOR_TYPE_RGB && color_type != PNG_COLOR_TYPE_RGBA) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw PngError("unsupported colortype (want RGB or RGBA): " + path);
    }

    const int channels = color_type == PNG_COLOR_TYPE_RGBA ? 4 : 3;
    std::vector<unsigned char> raster(static_cast<size_t>(width) * height * channels);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 r = 0; r < height; ++r)
        rows[r] = raster.data() + static_cast<size_t>(r) * width * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    RgbImage img(static_cast<int>(height), static_cast<int>(width));
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const unsigned char* px = raster.data() + (static_cast<size_t>(r) * width + c) * channels;
            img.r.at(r, c) = px[0] / 255.0;
            img.g.at(r, c) = px[1] / 255.0;
            img.b.at(r, c) = px[2] / 255.0;
        }
    return img;
}

namespace detail {

inline unsigned char quantize(double v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline void write_png_raster(const std::string& path, const std::vector<unsigned char>& raster, int height,
                             int width, int color_type) {
    FileCloser fc;
    fc.f = std::fopen(path.c_str(), "wb");
    if (!fc.f) throw PngError("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw PngError("write struct allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw PngError("info struct allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw PngError("encode failed: " + path);
    }
    png_init_io(png, fc.f);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    for (int r = 0; r < height; ++r)
        png_write_row(png, const_cast<png_bytep>(raster.data() + static_cast<size_t>(r) * width * channels));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace detail

// Values are clamped to [0,1] and quantized to 8 bits.
inline void save_png(const RgbImage& img, const std::string& path) {
    std::vector<unsigned char> raster(static_cast<size_t>(img.height) * img.width * 3);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            unsigned char* px = raster.data() + (static_cast<size_t>(r) * img.width + c) * 3;
            px[0] = detail::quantize(img.r.at(r, c));
            px[1] = detail::quantize(img.g.at(r, c));
            px[2] = detail::quantize(img.b.at(r, c));
        }
    detail::write_png_raster(path, raster, img.height, img.width, PNG_COLOR_TYPE_RGB);
}

inline void save_png_gray(const Matrix& m, const std::string& path) {
    std::vector<unsigned char> raster(m.size());
    for (size_t i = 0; i < m.size(); ++i) raster[i] = detail::quantize(m.data[i]);
    detail::write_png_raster(path, raster, m.rows, m.cols, PNG_COLOR_TYPE_GRAY);
}

}  // namespace qrtx
