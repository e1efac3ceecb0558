#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qrtx {

// Dense row-major real matrix; the representation for image planes,
// wavelet subbands and feature channels.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {
        if (r <= 0 || c <= 0) throw std::invalid_argument("matrix dimensions must be positive");
    }

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return data.size(); }
    bool same_dims(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline Matrix operator+(const Matrix& a, const Matrix& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("matrix dimension mismatch");
    Matrix out(a.rows, a.cols);
    for (size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("matrix dimension mismatch");
    Matrix out(a.rows, a.cols);
    for (size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] - b.data[i];
    return out;
}

inline Matrix operator*(double s, const Matrix& m) {
    Matrix out = m;
    for (double& v : out.data) v *= s;
    return out;
}

inline double max_abs(const Matrix& m) {
    double best = 0.0;
    for (double v : m.data) best = std::max(best, std::abs(v));
    return best;
}

}  // namespace qrtx
