// Fidelity metrics and the Reflectance Consistency Index: worst-case
// per-pixel variance of reflectance across an illumination interpolation
// sweep, normalized by the maximum variance of [0,1]-valued samples.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qrtx/image.hpp"
#include "qrtx/matrix.hpp"

namespace qrtx {

inline double mse(const RgbImage& a, const RgbImage& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("mse: image dimension mismatch");
    double acc = 0.0;
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < a.plane(c).size(); ++i) {
            const double d = a.plane(c).data[i] - b.plane(c).data[i];
            acc += d * d;
        }
    return acc / (3.0 * a.height * a.width);
}

// Dynamic range 1.0; +infinity for identical images.
inline double psnr(const RgbImage& a, const RgbImage& b) {
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / m);
}

// Single-scale SSIM, 11x11 Gaussian window sigma 1.5, K1=0.01, K2=0.03,
// L=1, valid-window positions, averaged over channels.
inline double ssim(const RgbImage& a, const RgbImage& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("ssim: image dimension mismatch");
    constexpr int kWin = 11;
    if (a.height < kWin || a.width < kWin)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    double window[kWin][kWin];
    double wsum = 0.0;
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
            const double di = i - kWin / 2, dj = j - kWin / 2;
            window[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
            wsum += window[i][j];
        }
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) window[i][j] /= wsum;

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        const Matrix& pa = a.plane(ch);
        const Matrix& pb = b.plane(ch);
        double acc = 0.0;
        long count = 0;
        for (int r = 0; r + kWin <= a.height; ++r)
            for (int c = 0; c + kWin <= a.width; ++c) {
                double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
                for (int i = 0; i < kWin; ++i)
                    for (int j = 0; j < kWin; ++j) {
                        const double wv = window[i][j];
                        const double va = pa.at(r + i, c + j);
                        const double vb = pb.at(r + i, c + j);
                        mu_a += wv * va;
                        mu_b += wv * vb;
                        aa += wv * va * va;
                        bb += wv * vb * vb;
                        ab += wv * va * vb;
                    }
                const double var_a = aa - mu_a * mu_a;
                const double var_b = bb - mu_b * mu_b;
                const double cov = ab - mu_a * mu_b;
                acc += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                       ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                ++count;
            }
        total += acc / count;
    }
    return total / 3.0;
}

// A decomposer maps an image to a stack of reflectance planes (four
// quaternion components, or three scalar channels for the baseline).
using ReflectanceDecomposer = std::function<std::vector<Matrix>(const RgbImage&)>;

struct RciReport {
    std::vector<double> alphas;
    std::vector<Matrix> variance_map;  // one plane per reflectance component
    double sup_variance = 0.0;
    double rci = 0.0;
};

// Population variance of each pixel component across the interpolation
// sweep; reflectance samples are clamped to [0,1] first.
inline RciReport rci(const ReflectanceDecomposer& decomposer, const RgbImage& s_low,
                     const RgbImage& s_normal, const std::vector<double>& alphas) {
    if (!s_low.same_dims(s_normal)) throw std::invalid_argument("rci: image dimension mismatch");
    if (alphas.empty()) throw std::invalid_argument("rci: alphas must be nonempty");
    for (double a : alphas)
        if (a < 0.0 || a > 1.0) throw std::invalid_argument("rci: alphas must lie in [0,1]");

    RciReport report;
    report.alphas = alphas;

    std::vector<std::vector<Matrix>> sweep;  // per alpha, per component
    sweep.reserve(alphas.size());
    for (double alpha : alphas) {
        RgbImage s(s_low.height, s_low.width);
        for (int c = 0; c < 3; ++c)
            for (size_t i = 0; i < s.plane(c).size(); ++i)
                s.plane(c).data[i] = (1.0 - alpha) * s_low.plane(c).data[i] + alpha * s_normal.plane(c).data[i];
        std::vector<Matrix> refl = decomposer(s);
        if (!sweep.empty() && refl.size() != sweep.front().size())
            throw std::invalid_argument("rci: decomposer changed component count");
        for (Matrix& m : refl) {
            if (m.rows != s_low.height || m.cols != s_low.width)
                throw std::invalid_argument("rci: decomposer output dimension mismatch");
            for (double& v : m.data) v = std::clamp(v, 0.0, 1.0);
        }
        sweep.push_back(std::move(refl));
    }

    const size_t comps = sweep.front().size();
    const size_t n = sweep.size();
    report.variance_map.assign(comps, Matrix(s_low.height, s_low.width));
    report.sup_variance = 0.0;
    for (size_t comp = 0; comp < comps; ++comp)
        for (size_t i = 0; i < report.variance_map[comp].size(); ++i) {
            double lo = sweep[0][comp].data[i], hi = lo;
            for (size_t k = 1; k < n; ++k) {
                lo = std::min(lo, sweep[k][comp].data[i]);
                hi = std::max(hi, sweep[k][comp].data[i]);
            }
            double var = 0.0;
            if (hi > lo) {  // identical samples have exactly zero variance
                double mean = 0.0;
                for (size_t k = 0; k < n; ++k) mean += sweep[k][comp].data[i];
                mean /= static_cast<double>(n);
                for (size_t k = 0; k < n; ++k) {
                    const double d = sweep[k][comp].data[i] - mean;
                    var += d * d;
                }
                var /= static_cast<double>(n);
            }
            report.variance_map[comp].data[i] = var;
            report.sup_variance = std::max(report.sup_variance, var);
        }
    report.rci = 1.0 - report.sup_variance / 0.25;
    return report;
}

// 0.0, 0.1, ..., 1.0
inline std::vector<double> default_alphas() {
    std::vector<double> a(11);
    for (int i = 0; i <= 10; ++i) a[i] = i / 10.0;
    return a;
}

}  // namespace qrtx
