// RGB images, quaternion-valued image fields, and the embeddings between them.
#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "qrtx/matrix.hpp"
#include "qrtx/quaternion.hpp"

namespace qrtx {

// Three real planes. Ingested images hold samples in [0,1]; unclamped
// reconstructions reuse the same type and may leave that range.
struct RgbImage {
    int height = 0;
    int width = 0;
    Matrix r, g, b;

    RgbImage() = default;
    RgbImage(int h, int w) : height(h), width(w), r(h, w), g(h, w), b(h, w) {}

    bool same_dims(const RgbImage& o) const { return height == o.height && width == o.width; }
    const Matrix& plane(int c) const { return c == 0 ? r : (c == 1 ? g : b); }
    Matrix& plane(int c) { return c == 0 ? r : (c == 1 ? g : b); }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// H x W grid of quaternions, row-major.
struct QuaternionField {
    int height = 0;
    int width = 0;
    std::vector<Quaternion> data;

    QuaternionField() = default;
    QuaternionField(int h, int w) : height(h), width(w), data(static_cast<size_t>(h) * w) {
        if (h <= 0 || w <= 0) throw std::invalid_argument("field dimensions must be positive");
    }

    Quaternion& at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
    const Quaternion& at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }

    bool same_dims(const QuaternionField& o) const { return height == o.height && width == o.width; }

    friend bool operator==(const QuaternionField&, const QuaternionField&) = default;
};

// Reflectance/illumination pairing produced by any decomposer.
struct DecompositionPair {
    QuaternionField q_r;  // reflectance
    QuaternionField q_i;  // illumination
};

// Pixel (R,G,B) -> purely imaginary quaternion (0,R,G,B).
inline QuaternionField embed_rgb(const RgbImage& img) {
    QuaternionField f(img.height, img.width);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            f.at(r, c) = {0.0, img.r.at(r, c), img.g.at(r, c), img.b.at(r, c)};
    return f;
}

// Imaginary parts as RGB planes; the real part is discarded.
inline RgbImage extract_rgb_unclamped(const QuaternionField& f) {
    RgbImage img(f.height, f.width);
    for (int r = 0; r < f.height; ++r)
        for (int c = 0; c < f.width; ++c) {
            const Quaternion& q = f.at(r, c);
            img.r.at(r, c) = q.x;
            img.g.at(r, c) = q.y;
            img.b.at(r, c) = q.z;
        }
    return img;
}

// Display variant: samples clamped to [0,1].
inline RgbImage extract_rgb(const QuaternionField& f) {
    RgbImage img = extract_rgb_unclamped(f);
    for (int c = 0; c < 3; ++c)
        for (double& v : img.plane(c).data) v = std::clamp(v, 0.0, 1.0);
    return img;
}

// Element-wise Hamilton product of two fields.
inline QuaternionField map_hamilton(const QuaternionField& a, const QuaternionField& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("map_hamilton: field dimension mismatch");
    QuaternionField out(a.height, a.width);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = hamilton(a.data[i], b.data[i]);
    return out;
}

// Imaginary part of the element-wise product, as an image. Shared by the
// reconstruction path and every loss term built on it.
inline RgbImage hamilton_imag_image(const QuaternionField& a, const QuaternionField& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("hamilton_imag_image: field dimension mismatch");
    RgbImage img(a.height, a.width);
    for (int r = 0; r < a.height; ++r)
        for (int c = 0; c < a.width; ++c) {
            Quaternion q = hamilton(a.at(r, c), b.at(r, c));
            img.r.at(r, c) = q.x;
            img.g.at(r, c) = q.y;
            img.b.at(r, c) = q.z;
        }
    return img;
}

}  // namespace qrtx
