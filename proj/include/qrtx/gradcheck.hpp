// Finite-difference verification of the analytic gradients, plus a direct
// O(N^4) DFT reference for the spectral term. The slow paths here share no
// code with the fast implementations they check.
#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "qrtx/losses.hpp"

namespace qrtx {

struct TermCheck {
    std::string name;
    double max_rel_err = 0.0;
    int checked = 0;
    int skipped = 0;
    bool pass = false;
};

struct GradCheckReport {
    std::vector<TermCheck> terms;
    double freq_value_vs_oracle = 0.0;     // relative
    double freq_gradient_vs_oracle = 0.0;  // relative, elementwise max
    bool pass = false;
};

namespace oracle {

// Direct unnormalized 2-D DFT, no FFT, no padding logic shared with fft.hpp.
inline std::vector<std::complex<double>> dft2_slow(const Matrix& m) {
    std::vector<std::complex<double>> out(static_cast<size_t>(m.rows) * m.cols);
    for (int u = 0; u < m.rows; ++u)
        for (int v = 0; v < m.cols; ++v) {
            std::complex<double> acc(0.0, 0.0);
            for (int x = 0; x < m.rows; ++x)
                for (int y = 0; y < m.cols; ++y) {
                    const double ang =
                        -2.0 * M_PI * (static_cast<double>(u) * x / m.rows + static_cast<double>(v) * y / m.cols);
                    acc += m.at(x, y) * std::complex<double>(std::cos(ang), std::sin(ang));
                }
            out[static_cast<size_t>(u) * m.cols + v] = acc;
        }
    return out;
}

inline bool hf_masked(int u, int v, int rows, int cols) {
    const int uc = u < rows / 2 ? u : u - rows;
    const int vc = v < cols / 2 ? v : v - cols;
    return std::max(std::abs(uc) / static_cast<double>(rows), std::abs(vc) / static_cast<double>(cols)) > 0.25;
}

// freq term of one image on its own (unpadded) grid.
inline double freq_image_term_slow(const RgbImage& img) {
    long count = 0;
    for (int u = 0; u < img.height; ++u)
        for (int v = 0; v < img.width; ++v)
            if (hf_masked(u, v, img.height, img.width)) ++count;
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) {
        auto f = dft2_slow(img.plane(c));
        double ch = 0.0;
        for (int u = 0; u < img.height; ++u)
            for (int v = 0; v < img.width; ++v)
                if (hf_masked(u, v, img.height, img.width))
                    ch += std::abs(f[static_cast<size_t>(u) * img.width + v]);
        acc += ch / count;
    }
    return acc;
}

inline double freq_reg_slow(const RgbImage& recon_low, const RgbImage& recon_high, double gamma) {
    return gamma * (freq_image_term_slow(recon_low) + freq_image_term_slow(recon_high));
}

// d(freq term)/d(pixel), evaluated by the defining sums.
inline RgbImage freq_term_grad_slow(const RgbImage& img, double scale) {
    long count = 0;
    for (int u = 0; u < img.height; ++u)
        for (int v = 0; v < img.width; ++v)
            if (hf_masked(u, v, img.height, img.width)) ++count;
    RgbImage grad(img.height, img.width);
    for (int c = 0; c < 3; ++c) {
        auto f = dft2_slow(img.plane(c));
        for (int x = 0; x < img.height; ++x)
            for (int y = 0; y < img.width; ++y) {
                double acc = 0.0;
                for (int u = 0; u < img.height; ++u)
                    for (int v = 0; v < img.width; ++v) {
                        if (!hf_masked(u, v, img.height, img.width)) continue;
                        const std::complex<double> fv = f[static_cast<size_t>(u) * img.width + v];
                        const double mag = std::abs(fv);
                        if (mag == 0.0) continue;
                        const double ang = -2.0 * M_PI * (static_cast<double>(u) * x / img.height +
                                                          static_cast<double>(v) * y / img.width);
                        acc += (std::conj(fv / mag) * std::complex<double>(std::cos(ang), std::sin(ang))).real();
                    }
                grad.plane(c).at(x, y) = scale * acc / count;
            }
    }
    return grad;
}

}  // namespace oracle

namespace detail {

struct GradCheckState {
    DecompositionPair pair_low, pair_high;
    RgbImage s_low, s_high;
};

inline GradCheckState random_gradcheck_state(int h, int w, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> comp(-0.9, 0.9);
    std::uniform_real_distribution<double> pix(0.05, 0.95);
    GradCheckState st;
    auto field = [&] {
        QuaternionField f(h, w);
        for (auto& q : f.data) q = {comp(rng), comp(rng), comp(rng), comp(rng)};
        return f;
    };
    st.pair_low = {field(), field()};
    st.pair_high = {field(), field()};
    st.s_low = RgbImage(h, w);
    st.s_high = RgbImage(h, w);
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < st.s_low.plane(c).size(); ++i) {
            st.s_low.plane(c).data[i] = pix(rng);
            st.s_high.plane(c).data[i] = pix(rng);
        }
    return st;
}

// A coordinate is skipped when either probe point sits essentially on an L1
// kink or the +/- evaluations straddle one (any absolute-value argument
// changes sign between them).
inline bool kink_crossed(const std::vector<double>& a, const std::vector<double>& b) {
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i]) < 1e-9 || std::abs(b[i]) < 1e-9) return true;
        if ((a[i] > 0.0) != (b[i] > 0.0)) return true;
    }
    return false;
}

inline TermCheck check_weights(const GradCheckState& st0, const LossWeights& w, const std::string& name,
                               double tolerance, double h_step) {
    GradCheckState st = st0;
    const PairGradient g = gradient(st.pair_low, st.pair_high, st.s_low, st.s_high, w);

    TermCheck res;
    res.name = name;

    QuaternionField* fields[4] = {&st.pair_low.q_r, &st.pair_low.q_i, &st.pair_high.q_r, &st.pair_high.q_i};
    const QuaternionField* grads[4] = {&g.d_qr_low, &g.d_qi_low, &g.d_qr_high, &g.d_qi_high};

    std::vector<double> kp, km;
    for (int fi = 0; fi < 4; ++fi) {
        for (size_t i = 0; i < fields[fi]->data.size(); ++i) {
            double* comps[4] = {&fields[fi]->data[i].w, &fields[fi]->data[i].x, &fields[fi]->data[i].y,
                                &fields[fi]->data[i].z};
            const Quaternion& gq = grads[fi]->data[i];
            const double gvals[4] = {gq.w, gq.x, gq.y, gq.z};
            for (int ci = 0; ci < 4; ++ci) {
                const double saved = *comps[ci];
                kp.clear();
                km.clear();
                *comps[ci] = saved + h_step;
                const double fp =
                    evaluate(st.pair_low, st.pair_high, st.s_low, st.s_high, w, false, &kp).total;
                *comps[ci] = saved - h_step;
                const double fm =
                    evaluate(st.pair_low, st.pair_high, st.s_low, st.s_high, w, false, &km).total;
                *comps[ci] = saved;
                if (kink_crossed(kp, km)) {
                    ++res.skipped;
                    continue;
                }
                const double fd = (fp - fm) / (2.0 * h_step);
                const double denom = std::max(std::abs(fd), std::abs(gvals[ci]));
                const double rel = denom < 1e-10 ? 0.0 : std::abs(fd - gvals[ci]) / denom;
                res.max_rel_err = std::max(res.max_rel_err, rel);
                ++res.checked;
            }
        }
    }
    res.pass = res.max_rel_err < tolerance;
    return res;
}

}  // namespace detail

// Compares analytic gradients against central finite differences for every
// term in isolation and for the weighted total; the spectral term is also
// checked against the direct DFT reference.
inline GradCheckReport grad_check(int height, int width, uint64_t seed, double tolerance = 1e-4,
                                  double fd_step = 1e-6) {
    if (height <= 0 || width <= 0 || height > 16 || width > 16)
        throw std::invalid_argument("grad_check: dims must be within 16x16");
    const detail::GradCheckState st = detail::random_gradcheck_state(height, width, seed);

    GradCheckReport report;
    const LossWeights defaults;
    auto isolated = [&](auto setter, const std::string& name) {
        LossWeights w;
        w.w_recon_low = w.w_recon_high = w.w_mutual_low = w.w_mutual_high = 0.0;
        w.w_smooth = w.w_equal_r = w.w_freq = 0.0;
        setter(w);
        report.terms.push_back(detail::check_weights(st, w, name, tolerance, fd_step));
    };
    isolated([&](LossWeights& w) { w.w_recon_low = defaults.w_recon_low; }, "recon_low");
    isolated([&](LossWeights& w) { w.w_recon_high = defaults.w_recon_high; }, "recon_high");
    isolated([&](LossWeights& w) { w.w_mutual_low = defaults.w_mutual_low; }, "mutual_low");
    isolated([&](LossWeights& w) { w.w_mutual_high = defaults.w_mutual_high; }, "mutual_high");
    isolated([&](LossWeights& w) { w.w_smooth = defaults.w_smooth; }, "smooth");
    isolated([&](LossWeights& w) { w.w_equal_r = defaults.w_equal_r; }, "equal_r");
    isolated([&](LossWeights& w) { w.w_freq = defaults.w_freq; }, "freq");
    report.terms.push_back(detail::check_weights(st, defaults, "total", tolerance, fd_step));

    // Spectral term and its gradient against the slow reference (valid as an
    // apples-to-apples comparison on power-of-two dims, where padding is a
    // no-op).
    if (is_pow2(height) && is_pow2(width)) {
        const RgbImage recon_low = hamilton_imag_image(st.pair_low.q_r, st.pair_low.q_i);
        const RgbImage recon_high = hamilton_imag_image(st.pair_high.q_r, st.pair_high.q_i);
        const double fast = freq_reg(recon_low, recon_high, defaults.gamma);
        const double slow = oracle::freq_reg_slow(recon_low, recon_high, defaults.gamma);
        report.freq_value_vs_oracle = std::abs(fast - slow) / std::max(std::abs(slow), 1e-300);

        const RgbImage gf = detail::freq_term_grad_image(recon_low, 1.0);
        const RgbImage gs = oracle::freq_term_grad_slow(recon_low, 1.0);
        double worst = 0.0;
        for (int c = 0; c < 3; ++c)
            for (size_t i = 0; i < gf.plane(c).size(); ++i) {
                const double a = gf.plane(c).data[i], b = gs.plane(c).data[i];
                const double denom = std::max({std::abs(a), std::abs(b), 1e-12});
                worst = std::max(worst, std::abs(a - b) / denom);
            }
        report.freq_gradient_vs_oracle = worst;
    }

    report.pass = report.freq_value_vs_oracle < 1e-9 && report.freq_gradient_vs_oracle < 1e-9;
    for (const TermCheck& t : report.terms) report.pass = report.pass && t.pass;
    return report;
}

}  // namespace qrtx
