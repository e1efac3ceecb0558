// Single-level orthonormal 2-D Haar transform and the 16-channel packing of a
// quaternion field into per-component subbands.
#pragma once

#include <stdexcept>
#include <vector>

#include "qrtx/image.hpp"
#include "qrtx/matrix.hpp"

namespace qrtx {

struct SubbandSet {
    Matrix ll, lh, hl, hh;
};

namespace detail {

// Extend a plane to even dimensions by repeating the last row/column.
inline Matrix pad_edge_even(const Matrix& m) {
    const int rows = m.rows + (m.rows % 2);
    const int cols = m.cols + (m.cols % 2);
    if (rows == m.rows && cols == m.cols) return m;
    Matrix out(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            out.at(r, c) = m.at(std::min(r, m.rows - 1), std::min(c, m.cols - 1));
    return out;
}

inline Matrix pad_zero_even(const Matrix& m) {
    const int rows = m.rows + (m.rows % 2);
    const int cols = m.cols + (m.cols % 2);
    if (rows == m.rows && cols == m.cols) return m;
    Matrix out(rows, cols);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) out.at(r, c) = m.at(r, c);
    return out;
}

// Orthonormal single-level transform of an even-dimension plane.
inline SubbandSet dwt2_even(const Matrix& p) {
    const int hr = p.rows / 2;
    const int hc = p.cols / 2;
    SubbandSet s{Matrix(hr, hc), Matrix(hr, hc), Matrix(hr, hc), Matrix(hr, hc)};
    for (int r = 0; r < hr; ++r)
        for (int c = 0; c < hc; ++c) {
            const double a = p.at(2 * r, 2 * c);
            const double b = p.at(2 * r, 2 * c + 1);
            const double cc = p.at(2 * r + 1, 2 * c);
            const double d = p.at(2 * r + 1, 2 * c + 1);
            s.ll.at(r, c) = (a + b + cc + d) / 2.0;
            s.hl.at(r, c) = (a - b + cc - d) / 2.0;
            s.lh.at(r, c) = (a + b - cc - d) / 2.0;
            s.hh.at(r, c) = (a - b - cc + d) / 2.0;
        }
    return s;
}

}  // namespace detail

// Odd dimensions are edge-padded to even before the 2x2 block transform.
inline SubbandSet dwt2_haar(const Matrix& plane) {
    if (plane.rows <= 0 || plane.cols <= 0) throw std::invalid_argument("dwt2_haar: empty plane");
    return detail::dwt2_even(detail::pad_edge_even(plane));
}

// Exact inverse; original_rows/cols select the crop of the padded grid.
inline Matrix idwt2_haar(const SubbandSet& s, int original_rows, int original_cols) {
    if (original_rows <= 0 || original_cols <= 0) throw std::invalid_argument("idwt2_haar: empty target");
    const int hr = (original_rows + 1) / 2;
    const int hc = (original_cols + 1) / 2;
    if (s.ll.rows != hr || s.ll.cols != hc || !s.ll.same_dims(s.lh) || !s.ll.same_dims(s.hl) ||
        !s.ll.same_dims(s.hh))
        throw std::invalid_argument("idwt2_haar: subband dimensions inconsistent with target");
    Matrix out(original_rows, original_cols);
    for (int r = 0; r < hr; ++r)
        for (int c = 0; c < hc; ++c) {
            const double ll = s.ll.at(r, c), hl = s.hl.at(r, c);
            const double lh = s.lh.at(r, c), hh = s.hh.at(r, c);
            const double a = (ll + hl + lh + hh) / 2.0;
            const double b = (ll - hl + lh - hh) / 2.0;
            const double cc = (ll + hl - lh - hh) / 2.0;
            const double d = (ll - hl - lh + hh) / 2.0;
            if (2 * r < original_rows && 2 * c < original_cols) out.at(2 * r, 2 * c) = a;
            if (2 * r < original_rows && 2 * c + 1 < original_cols) out.at(2 * r, 2 * c + 1) = b;
            if (2 * r + 1 < original_rows && 2 * c < original_cols) out.at(2 * r + 1, 2 * c) = cc;
            if (2 * r + 1 < original_rows && 2 * c + 1 < original_cols) out.at(2 * r + 1, 2 * c + 1) = d;
        }
    return out;
}

// 16 channels in the fixed order (w,x,y,z) x (LL,LH,HL,HH). This ordering is
// part of the on-disk and network channel contract.
struct PackedSubbands {
    std::vector<Matrix> channels;
    int orig_height = 0;
    int orig_width = 0;
};

inline PackedSubbands pack_quaternion(const QuaternionField& f) {
    PackedSubbands p;
    p.orig_height = f.height;
    p.orig_width = f.width;
    p.channels.reserve(16);
    for (int comp = 0; comp < 4; ++comp) {
        Matrix plane(f.height, f.width);
        for (int r = 0; r < f.height; ++r)
            for (int c = 0; c < f.width; ++c) {
                const Quaternion& q = f.at(r, c);
                plane.at(r, c) = comp == 0 ? q.w : (comp == 1 ? q.x : (comp == 2 ? q.y : q.z));
            }
        SubbandSet s = dwt2_haar(plane);
        p.channels.push_back(std::move(s.ll));
        p.channels.push_back(std::move(s.lh));
        p.channels.push_back(std::move(s.hl));
        p.channels.push_back(std::move(s.hh));
    }
    return p;
}

inline QuaternionField unpack_quaternion(const PackedSubbands& p) {
    if (p.channels.size() != 16) throw std::invalid_argument("unpack_quaternion: expected 16 channels");
    QuaternionField f(p.orig_height, p.orig_width);
    for (int comp = 0; comp < 4; ++comp) {
        SubbandSet s{p.channels[4 * comp + 0], p.channels[4 * comp + 1], p.channels[4 * comp + 2],
                     p.channels[4 * comp + 3]};
        Matrix plane = idwt2_haar(s, p.orig_height, p.orig_width);
        for (int r = 0; r < p.orig_height; ++r)
            for (int c = 0; c < p.orig_width; ++c) {
                Quaternion& q = f.at(r, c);
                const double v = plane.at(r, c);
                if (comp == 0) q.w = v;
                else if (comp == 1) q.x = v;
                else if (comp == 2) q.y = v;
                else q.z = v;
            }
    }
    return f;
}

// Adjoint of unpack_quaternion: maps a pixel-domain gradient onto subband
// coefficients. The crop adjoint is zero padding, and the orthonormal
// inverse's adjoint is the forward transform.
inline PackedSubbands pack_gradient(const QuaternionField& grad) {
    PackedSubbands p;
    p.orig_height = grad.height;
    p.orig_width = grad.width;
    p.channels.reserve(16);
    for (int comp = 0; comp < 4; ++comp) {
        Matrix plane(grad.height, grad.width);
        for (int r = 0; r < grad.height; ++r)
            for (int c = 0; c < grad.width; ++c) {
                const Quaternion& q = grad.at(r, c);
                plane.at(r, c) = comp == 0 ? q.w : (comp == 1 ? q.x : (comp == 2 ? q.y : q.z));
            }
        SubbandSet s = detail::dwt2_even(detail::pad_zero_even(plane));
        p.channels.push_back(std::move(s.ll));
        p.channels.push_back(std::move(s.lh));
        p.channels.push_back(std::move(s.hl));
        p.channels.push_back(std::move(s.hh));
    }
    return p;
}

}  // namespace qrtx
