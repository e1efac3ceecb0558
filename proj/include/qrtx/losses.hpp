// The seven-term decomposition objective and its analytic gradients with
// respect to the four quaternion fields.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qrtx/fft.hpp"
#include "qrtx/image.hpp"

namespace qrtx {

struct LossWeights {
    double w_recon_low = 1.0;
    double w_recon_high = 1.0;
    double w_mutual_low = 0.01;
    double w_mutual_high = 0.01;
    double w_smooth = 0.05;
    double w_equal_r = 0.01;
    double w_freq = 0.01;
    double gamma = 0.01;             // factor inside the spectral term
    double smooth_sharpness = 10.0;  // exponent constant of the edge mask
};

// Unweighted term values plus the weighted total.
struct LossBreakdown {
    double recon_low = 0.0;
    double recon_high = 0.0;
    double mutual_low = 0.0;
    double mutual_high = 0.0;
    double smooth = 0.0;
    double equal_r = 0.0;
    double freq = 0.0;
    double total = 0.0;
};

struct PairGradient {
    QuaternionField d_qr_low, d_qi_low, d_qr_high, d_qi_high;
};

namespace detail {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline void require_same_dims(const RgbImage& a, const RgbImage& b, const char* who) {
    if (!a.same_dims(b)) throw std::invalid_argument(std::string(who) + ": image dimension mismatch");
}

inline double l1_mean(const RgbImage& a, const RgbImage& b, std::vector<double>* kinks) {
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) {
        const Matrix& pa = a.plane(c);
        const Matrix& pb = b.plane(c);
        for (size_t i = 0; i < pa.size(); ++i) {
            const double e = pa.data[i] - pb.data[i];
            if (kinks) kinks->push_back(e);
            acc += std::abs(e);
        }
    }
    return acc / (3.0 * a.height * a.width);
}

inline Matrix gray_imag(const QuaternionField& f) {
    Matrix m(f.height, f.width);
    for (int r = 0; r < f.height; ++r)
        for (int c = 0; c < f.width; ++c) {
            const Quaternion& q = f.at(r, c);
            m.at(r, c) = (q.x + q.y + q.z) / 3.0;
        }
    return m;
}

// SM over both finite-difference directions. Forward differences with
// replicated boundary: the last row/column contributes zero.
inline double smoothness_impl(const QuaternionField& q_i, const QuaternionField& q_r, double sharpness,
                              std::vector<double>* kinks) {
    if (!q_i.same_dims(q_r)) throw std::invalid_argument("smoothness: field dimension mismatch");
    const Matrix gi = gray_imag(q_i);
    const Matrix gr = gray_imag(q_r);
    const double n = static_cast<double>(gi.rows) * gi.cols;
    double total = 0.0;
    // vertical then horizontal differences
    for (int dir = 0; dir < 2; ++dir) {
        double acc = 0.0;
        const int rmax = dir == 0 ? gi.rows - 1 : gi.rows;
        const int cmax = dir == 0 ? gi.cols : gi.cols - 1;
        for (int r = 0; r < rmax; ++r)
            for (int c = 0; c < cmax; ++c) {
                const int rn = dir == 0 ? r + 1 : r;
                const int cn = dir == 0 ? c : c + 1;
                const double di = gi.at(rn, cn) - gi.at(r, c);
                const double dr = gr.at(rn, cn) - gr.at(r, c);
                if (kinks) {
                    kinks->push_back(di);
                    kinks->push_back(dr);
                }
                acc += std::abs(di) * std::exp(-sharpness * std::abs(dr));
            }
        total += acc / n;
    }
    return total;
}

inline bool hf_masked(int u, int v, int rows, int cols) {
    const int uc = u < rows / 2 ? u : u - rows;
    const int vc = v < cols / 2 ? v : v - cols;
    const double fu = std::abs(uc) / static_cast<double>(rows);
    const double fv = std::abs(vc) / static_cast<double>(cols);
    return std::max(fu, fv) > 0.25;
}

inline long hf_mask_count(int rows, int cols) {
    long n = 0;
    for (int u = 0; u < rows; ++u)
        for (int v = 0; v < cols; ++v)
            if (hf_masked(u, v, rows, cols)) ++n;
    return n;
}

// Per-channel mean of masked spectrum magnitudes, summed over channels.
inline double freq_image_term(const RgbImage& img, std::vector<double>* kinks) {
    const int rows2 = next_pow2(img.height);
    const int cols2 = next_pow2(img.width);
    const double count = static_cast<double>(hf_mask_count(rows2, cols2));
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) {
        Spectrum s = dft2_pow2(img.plane(c), rows2, cols2);
        double ch = 0.0;
        for (int u = 0; u < rows2; ++u)
            for (int v = 0; v < cols2; ++v)
                if (hf_masked(u, v, rows2, cols2)) {
                    const double mag = std::abs(s.at(u, v));
                    if (kinks) kinks->push_back(mag);
                    ch += mag;
                }
        acc += ch / count;
    }
    return acc;
}

}  // namespace detail

// Mean absolute difference over all pixels and channels.
inline double l1_recon(const RgbImage& recon, const RgbImage& target) {
    detail::require_same_dims(recon, target, "l1_recon");
    return detail::l1_mean(recon, target, nullptr);
}

// Cross-pairing: the high reflectance re-lit by the low illumination must
// reproduce the low image, and vice versa.
inline std::pair<double, double> mutual_recon(const DecompositionPair& pair_low,
                                              const DecompositionPair& pair_high, const RgbImage& s_low,
                                              const RgbImage& s_high) {
    RgbImage m_low = hamilton_imag_image(pair_high.q_r, pair_low.q_i);
    RgbImage m_high = hamilton_imag_image(pair_low.q_r, pair_high.q_i);
    return {l1_recon(m_low, s_low), l1_recon(m_high, s_high)};
}

// Illumination smoothness masked by reflectance edges, for one pair.
inline double smoothness(const QuaternionField& q_i, const QuaternionField& q_r, double sharpness = 10.0) {
    return detail::smoothness_impl(q_i, q_r, sharpness, nullptr);
}

// Mean absolute componentwise difference over all four components.
inline double equal_r(const QuaternionField& q_r_low, const QuaternionField& q_r_high) {
    if (!q_r_low.same_dims(q_r_high)) throw std::invalid_argument("equal_r: field dimension mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < q_r_low.data.size(); ++i) {
        const Quaternion d = q_r_low.data[i] - q_r_high.data[i];
        acc += std::abs(d.w) + std::abs(d.x) + std::abs(d.y) + std::abs(d.z);
    }
    return acc / (4.0 * q_r_low.data.size());
}

// Spectral penalty on high-frequency content of both reconstructions.
// Dimensions are zero-padded up to powers of two; the mask lives on the
// padded grid; DC is never masked.
inline double freq_reg(const RgbImage& recon_low, const RgbImage& recon_high, double gamma) {
    detail::require_same_dims(recon_low, recon_high, "freq_reg");
    return gamma * (detail::freq_image_term(recon_low, nullptr) + detail::freq_image_term(recon_high, nullptr));
}

namespace detail {

// split2, when given, receives the weighted contributions attributable to
// the low and high pairs respectively. The attribution is only meaningful
// when the coupling terms (mutual, equal_r) carry zero weight.
inline LossBreakdown evaluate(const DecompositionPair& pair_low, const DecompositionPair& pair_high,
                              const RgbImage& s_low, const RgbImage& s_high, const LossWeights& w,
                              bool all_terms, std::vector<double>* kinks, double* split2 = nullptr) {
    require_same_dims(s_low, s_high, "total_loss");
    if (!pair_low.q_r.same_dims(pair_low.q_i) || pair_low.q_r.height != s_low.height ||
        pair_low.q_r.width != s_low.width || !pair_high.q_r.same_dims(pair_high.q_i) ||
        pair_high.q_r.height != s_high.height || pair_high.q_r.width != s_high.width)
        throw std::invalid_argument("total_loss: field/image dimension mismatch");

    LossBreakdown b;
    if (split2) split2[0] = split2[1] = 0.0;
    const RgbImage recon_low = hamilton_imag_image(pair_low.q_r, pair_low.q_i);
    const RgbImage recon_high = hamilton_imag_image(pair_high.q_r, pair_high.q_i);

    auto want = [&](double weight) { return all_terms || weight != 0.0; };

    if (want(w.w_recon_low)) {
        b.recon_low = l1_mean(recon_low, s_low, w.w_recon_low != 0.0 ? kinks : nullptr);
        if (split2) split2[0] += w.w_recon_low * b.recon_low;
    }
    if (want(w.w_recon_high)) {
        b.recon_high = l1_mean(recon_high, s_high, w.w_recon_high != 0.0 ? kinks : nullptr);
        if (split2) split2[1] += w.w_recon_high * b.recon_high;
    }
    if (want(w.w_mutual_low)) {
        RgbImage m = hamilton_imag_image(pair_high.q_r, pair_low.q_i);
        b.mutual_low = l1_mean(m, s_low, w.w_mutual_low != 0.0 ? kinks : nullptr);
        if (split2) split2[0] += w.w_mutual_low * b.mutual_low;
    }
    if (want(w.w_mutual_high)) {
        RgbImage m = hamilton_imag_image(pair_low.q_r, pair_high.q_i);
        b.mutual_high = l1_mean(m, s_high, w.w_mutual_high != 0.0 ? kinks : nullptr);
        if (split2) split2[1] += w.w_mutual_high * b.mutual_high;
    }
    if (want(w.w_smooth)) {
        std::vector<double>* k = w.w_smooth != 0.0 ? kinks : nullptr;
        const double sm_low = smoothness_impl(pair_low.q_i, pair_low.q_r, w.smooth_sharpness, k);
        const double sm_high = smoothness_impl(pair_high.q_i, pair_high.q_r, w.smooth_sharpness, k);
        b.smooth = sm_low + sm_high;
        if (split2) {
            split2[0] += w.w_smooth * sm_low;
            split2[1] += w.w_smooth * sm_high;
        }
    }
    if (want(w.w_equal_r)) {
        b.equal_r = equal_r(pair_low.q_r, pair_high.q_r);
        if (split2) split2[0] += w.w_equal_r * b.equal_r;
        if (kinks && w.w_equal_r != 0.0)
            for (size_t i = 0; i < pair_low.q_r.data.size(); ++i) {
                const Quaternion d = pair_low.q_r.data[i] - pair_high.q_r.data[i];
                kinks->push_back(d.w);
                kinks->push_back(d.x);
                kinks->push_back(d.y);
                kinks->push_back(d.z);
            }
    }
    if (want(w.w_freq)) {
        std::vector<double>* k = w.w_freq != 0.0 ? kinks : nullptr;
        const double f_low = freq_image_term(recon_low, k);
        const double f_high = freq_image_term(recon_high, k);
        b.freq = w.gamma * (f_low + f_high);
        if (split2) {
            split2[0] += w.w_freq * w.gamma * f_low;
            split2[1] += w.w_freq * w.gamma * f_high;
        }
    }
    b.total = w.w_recon_low * b.recon_low + w.w_recon_high * b.recon_high + w.w_mutual_low * b.mutual_low +
              w.w_mutual_high * b.mutual_high + w.w_smooth * b.smooth + w.w_equal_r * b.equal_r +
              w.w_freq * b.freq;
    return b;
}

// dL/dp and dL/dq of weight * mean|imag(p (x) q) - target| via the bilinear
// adjoints: dp = G (x) conj(q), dq = conj(p) (x) G.
inline void add_l1_hamilton_grad(const QuaternionField& p, const QuaternionField& q, const RgbImage& recon,
                                 const RgbImage& target, double weight, QuaternionField& dp,
                                 QuaternionField& dq) {
    if (weight == 0.0) return;
    const double scale = weight / (3.0 * recon.height * recon.width);
    for (int r = 0; r < recon.height; ++r)
        for (int c = 0; c < recon.width; ++c) {
            const Quaternion g{0.0, scale * sign(recon.r.at(r, c) - target.r.at(r, c)),
                               scale * sign(recon.g.at(r, c) - target.g.at(r, c)),
                               scale * sign(recon.b.at(r, c) - target.b.at(r, c))};
            dp.at(r, c) = dp.at(r, c) + hamilton(g, conjugate(q.at(r, c)));
            dq.at(r, c) = dq.at(r, c) + hamilton(conjugate(p.at(r, c)), g);
        }
}

inline void add_smoothness_grad(const QuaternionField& q_i, const QuaternionField& q_r, double sharpness,
                                double weight, QuaternionField& d_qi, QuaternionField& d_qr) {
    if (weight == 0.0) return;
    const Matrix gi = gray_imag(q_i);
    const Matrix gr = gray_imag(q_r);
    const double n = static_cast<double>(gi.rows) * gi.cols;
    Matrix di_grad(gi.rows, gi.cols), dr_grad(gi.rows, gi.cols);
    for (int dir = 0; dir < 2; ++dir) {
        const int rmax = dir == 0 ? gi.rows - 1 : gi.rows;
        const int cmax = dir == 0 ? gi.cols : gi.cols - 1;
        for (int r = 0; r < rmax; ++r)
            for (int c = 0; c < cmax; ++c) {
                const int rn = dir == 0 ? r + 1 : r;
                const int cn = dir == 0 ? c : c + 1;
                const double di = gi.at(rn, cn) - gi.at(r, c);
                const double dr = gr.at(rn, cn) - gr.at(r, c);
                const double mask = std::exp(-sharpness * std::abs(dr));
                const double g_di = weight * sign(di) * mask / n;
                const double g_dr = -weight * sharpness * sign(dr) * std::abs(di) * mask / n;
                di_grad.at(rn, cn) += g_di;
                di_grad.at(r, c) -= g_di;
                dr_grad.at(rn, cn) += g_dr;
                dr_grad.at(r, c) -= g_dr;
            }
    }
    // gray = mean of the three imaginary components
    for (int r = 0; r < gi.rows; ++r)
        for (int c = 0; c < gi.cols; ++c) {
            Quaternion& qi = d_qi.at(r, c);
            const double gv = di_grad.at(r, c) / 3.0;
            qi.x += gv;
            qi.y += gv;
            qi.z += gv;
            Quaternion& qr = d_qr.at(r, c);
            const double rv = dr_grad.at(r, c) / 3.0;
            qr.x += rv;
            qr.y += rv;
            qr.z += rv;
        }
}

// Gradient image of freq_image_term: the real part of the unnormalized
// inverse transform of the masked phase factors F/|F|, cropped back.
inline RgbImage freq_term_grad_image(const RgbImage& img, double scale) {
    const int rows2 = next_pow2(img.height);
    const int cols2 = next_pow2(img.width);
    const double count = static_cast<double>(hf_mask_count(rows2, cols2));
    RgbImage grad(img.height, img.width);
    for (int c = 0; c < 3; ++c) {
        Spectrum s = dft2_pow2(img.plane(c), rows2, cols2);
        Spectrum p;
        p.rows = rows2;
        p.cols = cols2;
        p.v.assign(s.v.size(), {0.0, 0.0});
        for (int u = 0; u < rows2; ++u)
            for (int v = 0; v < cols2; ++v)
                if (hf_masked(u, v, rows2, cols2)) {
                    const std::complex<double> f = s.at(u, v);
                    const double mag = std::abs(f);
                    if (mag > 0.0) p.at(u, v) = f / mag;  // subgradient 0 at the origin
                }
        idft2_pow2_unnormalized(p);
        for (int r = 0; r < img.height; ++r)
            for (int cc = 0; cc < img.width; ++cc)
                grad.plane(c).at(r, cc) = scale * p.at(r, cc).real() / count;
    }
    return grad;
}

inline void add_image_grad_through_hamilton(const QuaternionField& p, const QuaternionField& q,
                                            const RgbImage& gimg, QuaternionField& dp, QuaternionField& dq) {
    for (int r = 0; r < gimg.height; ++r)
        for (int c = 0; c < gimg.width; ++c) {
            const Quaternion g{0.0, gimg.r.at(r, c), gimg.g.at(r, c), gimg.b.at(r, c)};
            dp.at(r, c) = dp.at(r, c) + hamilton(g, conjugate(q.at(r, c)));
            dq.at(r, c) = dq.at(r, c) + hamilton(conjugate(p.at(r, c)), g);
        }
}

}  // namespace detail

// All seven terms plus the weighted total.
inline LossBreakdown total_loss(const DecompositionPair& pair_low, const DecompositionPair& pair_high,
                                const RgbImage& s_low, const RgbImage& s_high, const LossWeights& w) {
    return detail::evaluate(pair_low, pair_high, s_low, s_high, w, true, nullptr);
}

// Exact subgradients of total_loss with respect to every component of the
// four fields. sign(0) = 0 on the L1 kinks.
inline PairGradient gradient(const DecompositionPair& pair_low, const DecompositionPair& pair_high,
                             const RgbImage& s_low, const RgbImage& s_high, const LossWeights& w) {
    detail::require_same_dims(s_low, s_high, "gradient");
    const int h = s_low.height, wd = s_low.width;
    PairGradient g{QuaternionField(h, wd), QuaternionField(h, wd), QuaternionField(h, wd),
                   QuaternionField(h, wd)};

    const RgbImage recon_low = hamilton_imag_image(pair_low.q_r, pair_low.q_i);
    const RgbImage recon_high = hamilton_imag_image(pair_high.q_r, pair_high.q_i);

    detail::add_l1_hamilton_grad(pair_low.q_r, pair_low.q_i, recon_low, s_low, w.w_recon_low, g.d_qr_low,
                                 g.d_qi_low);
    detail::add_l1_hamilton_grad(pair_high.q_r, pair_high.q_i, recon_high, s_high, w.w_recon_high,
                                 g.d_qr_high, g.d_qi_high);
    if (w.w_mutual_low != 0.0) {
        RgbImage m = hamilton_imag_image(pair_high.q_r, pair_low.q_i);
        detail::add_l1_hamilton_grad(pair_high.q_r, pair_low.q_i, m, s_low, w.w_mutual_low, g.d_qr_high,
                                     g.d_qi_low);
    }
    if (w.w_mutual_high != 0.0) {
        RgbImage m = hamilton_imag_image(pair_low.q_r, pair_high.q_i);
        detail::add_l1_hamilton_grad(pair_low.q_r, pair_high.q_i, m, s_high, w.w_mutual_high, g.d_qr_low,
                                     g.d_qi_high);
    }
    detail::add_smoothness_grad(pair_low.q_i, pair_low.q_r, w.smooth_sharpness, w.w_smooth, g.d_qi_low,
                                g.d_qr_low);
    detail::add_smoothness_grad(pair_high.q_i, pair_high.q_r, w.smooth_sharpness, w.w_smooth, g.d_qi_high,
                                g.d_qr_high);
    if (w.w_equal_r != 0.0) {
        const double scale = w.w_equal_r / (4.0 * pair_low.q_r.data.size());
        for (size_t i = 0; i < pair_low.q_r.data.size(); ++i) {
            const Quaternion d = pair_low.q_r.data[i] - pair_high.q_r.data[i];
            const Quaternion s{scale * detail::sign(d.w), scale * detail::sign(d.x),
                               scale * detail::sign(d.y), scale * detail::sign(d.z)};
            g.d_qr_low.data[i] = g.d_qr_low.data[i] + s;
            g.d_qr_high.data[i] = g.d_qr_high.data[i] - s;
        }
    }
    if (w.w_freq != 0.0) {
        RgbImage gl = detail::freq_term_grad_image(recon_low, w.w_freq * w.gamma);
        RgbImage gh = detail::freq_term_grad_image(recon_high, w.w_freq * w.gamma);
        detail::add_image_grad_through_hamilton(pair_low.q_r, pair_low.q_i, gl, g.d_qr_low, g.d_qi_low);
        detail::add_image_grad_through_hamilton(pair_high.q_r, pair_high.q_i, gh, g.d_qr_high, g.d_qi_high);
    }
    return g;
}

}  // namespace qrtx
