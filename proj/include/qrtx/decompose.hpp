// Reflectance/illumination decomposers: the normalized-ratio and raw-magnitude
// initializers, the exact scalar-illumination factorization, a per-image
// variational solver over the decomposition loss, and a single-scale
// center/surround baseline.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qrtx/image.hpp"
#include "qrtx/losses.hpp"
#include "qrtx/wavelet.hpp"

namespace qrtx {

// Normalized color ratios: (0, R/M, G/M, B/M) with M = max(R,G,B).
// Pixels with M below epsilon_black map to zero instead of dividing.
inline QuaternionField init_reflectance(const RgbImage& img, double epsilon_black = 1e-4) {
    if (epsilon_black <= 0.0) throw std::invalid_argument("init_reflectance: epsilon_black must be > 0");
    QuaternionField f(img.height, img.width);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const double rr = img.r.at(r, c), gg = img.g.at(r, c), bb = img.b.at(r, c);
            const double m = std::max({rr, gg, bb});
            if (m >= epsilon_black) f.at(r, c) = {0.0, rr / m, gg / m, bb / m};
        }
    return f;
}

// Raw magnitudes: identical to the pure-imaginary pixel embedding.
inline QuaternionField init_illumination(const RgbImage& img) { return embed_rgb(img); }

// Ratio reflectance paired with the pure-real scalar field M. A real scalar
// times a pure-imaginary quaternion scales it, so the element-wise product
// reproduces the image exactly wherever M >= epsilon_black.
inline DecompositionPair analytic_exact_init(const RgbImage& img, double epsilon_black = 1e-4) {
    DecompositionPair pair{init_reflectance(img, epsilon_black), QuaternionField(img.height, img.width)};
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const double m = std::max({img.r.at(r, c), img.g.at(r, c), img.b.at(r, c)});
            if (m >= epsilon_black) pair.q_i.at(r, c) = {m, 0.0, 0.0, 0.0};
        }
    return pair;
}

struct ReconResult {
    RgbImage image;  // unclamped imaginary parts
    double mean_abs_real = 0.0;
    double max_abs_real = 0.0;
};

inline ReconResult reconstruct(const DecompositionPair& pair) {
    QuaternionField prod = map_hamilton(pair.q_r, pair.q_i);
    ReconResult res;
    res.image = extract_rgb_unclamped(prod);
    for (const Quaternion& q : prod.data) {
        res.mean_abs_real += std::abs(q.w);
        res.max_abs_real = std::max(res.max_abs_real, std::abs(q.w));
    }
    res.mean_abs_real /= static_cast<double>(prod.data.size());
    return res;
}

// ---------------------------------------------------------------------------
// Single-scale center/surround baseline

namespace detail {

// Gaussian blur with per-pixel renormalization over the in-bounds support,
// so a very wide kernel tends to the plane mean.
inline Matrix gaussian_blur(const Matrix& m, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_blur: sigma must be > 0");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * static_cast<size_t>(radius) + 1);
    for (int i = -radius; i <= radius; ++i)
        kernel[i + radius] = std::exp(-0.5 * (static_cast<double>(i) * i) / (sigma * sigma));

    auto pass = [&](const Matrix& in, bool rows_dir) {
        Matrix out(in.rows, in.cols);
        const int n = rows_dir ? in.rows : in.cols;
        const int other = rows_dir ? in.cols : in.rows;
        for (int o = 0; o < other; ++o)
            for (int i = 0; i < n; ++i) {
                double acc = 0.0, wsum = 0.0;
                const int lo = std::max(0, i - radius), hi = std::min(n - 1, i + radius);
                for (int j = lo; j <= hi; ++j) {
                    const double k = kernel[j - i + radius];
                    acc += k * (rows_dir ? in.at(j, o) : in.at(o, j));
                    wsum += k;
                }
                (rows_dir ? out.at(i, o) : out.at(o, i)) = acc / wsum;
            }
        return out;
    };
    return pass(pass(m, false), true);
}

}  // namespace detail

struct SsrResult {
    RgbImage reflectance;   // log-ratio, min-max normalized to [0,1] per image
    RgbImage illumination;  // Gaussian-blurred channels
};

inline SsrResult ssr_baseline(const RgbImage& img, double sigma, double log_epsilon = 1e-6) {
    SsrResult res{RgbImage(img.height, img.width), RgbImage(img.height, img.width)};
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < 3; ++c) {
        res.illumination.plane(c) = detail::gaussian_blur(img.plane(c), sigma);
        Matrix& refl = res.reflectance.plane(c);
        for (size_t i = 0; i < refl.size(); ++i) {
            refl.data[i] =
                std::log(img.plane(c).data[i] + log_epsilon) - std::log(res.illumination.plane(c).data[i] + log_epsilon);
            lo = std::min(lo, refl.data[i]);
            hi = std::max(hi, refl.data[i]);
        }
    }
    for (int c = 0; c < 3; ++c)
        for (double& v : res.reflectance.plane(c).data)
            v = hi > lo ? (v - lo) / (hi - lo) : 0.5;  // constant input degenerates to mid-gray
    return res;
}

// ---------------------------------------------------------------------------
// Variational solver

struct SolverConfig {
    int max_iters = 2000;
    double step_size = 1e-2;
    LossWeights weights;
    double epsilon_black = 1e-4;
    bool use_wavelet_domain = true;   // WT: optimize subband coefficients instead of pixels
    bool use_cross_attention = true;  // CA: consumed by the forward network only
    bool use_freq_reg = true;         // FR: gate on the spectral term
    uint64_t seed = 0;
    double convergence_tol = 1e-7;  // relative best-loss change over 20 iterations; 0 disables

    // Adam moment constants for the coefficient updates.
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    // Recorded training-schedule constants; the per-image solver takes plain
    // steps of step_size and does not use them.
    double warmup_start_lr = 3e-4;
    int warmup_epochs = 10;
    double cosine_final_lr = 1e-7;
    int cosine_epochs = 1000;

    void validate() const {
        if (max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
        if (step_size <= 0.0) throw std::invalid_argument("solver: step_size must be > 0");
        if (epsilon_black <= 0.0) throw std::invalid_argument("solver: epsilon_black must be > 0");
    }
};

struct SolveResult {
    DecompositionPair low, high;
    std::vector<LossBreakdown> trace;  // one entry per evaluated iteration
    std::vector<double> best_trace;    // running minimum of the total
    double best_total = 0.0;
    int iterations = 0;
    bool diverged = false;
};

namespace detail {

// Flat parameter view over the four fields, either as subband coefficients
// or raw pixel components.
struct SolverParams {
    bool wavelet = false;
    int height = 0, width = 0;
    std::vector<double> v;

    static SolverParams from_pairs(const DecompositionPair& low, const DecompositionPair& high,
                                   bool wavelet) {
        SolverParams p;
        p.wavelet = wavelet;
        p.height = low.q_r.height;
        p.width = low.q_r.width;
        const QuaternionField* fields[4] = {&low.q_r, &low.q_i, &high.q_r, &high.q_i};
        for (const QuaternionField* f : fields) {
            if (wavelet) {
                PackedSubbands ps = pack_quaternion(*f);
                for (const Matrix& ch : ps.channels) p.v.insert(p.v.end(), ch.data.begin(), ch.data.end());
            } else {
                for (const Quaternion& q : f->data) {
                    p.v.push_back(q.w);
                    p.v.push_back(q.x);
                    p.v.push_back(q.y);
                    p.v.push_back(q.z);
                }
            }
        }
        return p;
    }

    QuaternionField decode_field(size_t block) const {
        const size_t block_len = v.size() / 4;
        const size_t base = block * block_len;
        if (wavelet) {
            PackedSubbands ps;
            ps.orig_height = height;
            ps.orig_width = width;
            const int hr = (height + 1) / 2, hc = (width + 1) / 2;
            size_t off = base;
            for (int ch = 0; ch < 16; ++ch) {
                Matrix m(hr, hc);
                std::copy(v.begin() + off, v.begin() + off + m.size(), m.data.begin());
                off += m.size();
                ps.channels.push_back(std::move(m));
            }
            return unpack_quaternion(ps);
        }
        QuaternionField f(height, width);
        size_t off = base;
        for (Quaternion& q : f.data) {
            q.w = v[off++];
            q.x = v[off++];
            q.y = v[off++];
            q.z = v[off++];
        }
        return f;
    }

    // Gradient of the objective in parameter space from per-pixel gradients.
    std::vector<double> encode_gradient(const PairGradient& g) const {
        std::vector<double> out;
        out.reserve(v.size());
        const QuaternionField* fields[4] = {&g.d_qr_low, &g.d_qi_low, &g.d_qr_high, &g.d_qi_high};
        for (const QuaternionField* f : fields) {
            if (wavelet) {
                PackedSubbands ps = pack_gradient(*f);
                for (const Matrix& ch : ps.channels) out.insert(out.end(), ch.data.begin(), ch.data.end());
            } else {
                for (const Quaternion& q : f->data) {
                    out.push_back(q.w);
                    out.push_back(q.x);
                    out.push_back(q.y);
                    out.push_back(q.z);
                }
            }
        }
        return out;
    }
};

}  // namespace detail

// Minimizes the decomposition loss over both pairs by Adam steps on the
// analytic gradient, starting from the exact factorizations. Returns the
// best-so-far pairs by total loss.
inline SolveResult variational_decompose(const RgbImage& s_low, const RgbImage& s_high,
                                         const SolverConfig& cfg) {
    if (!s_low.same_dims(s_high))
        throw std::invalid_argument("variational_decompose: image dimension mismatch");
    cfg.validate();

    LossWeights w = cfg.weights;
    if (!cfg.use_freq_reg) w.w_freq = 0.0;

    DecompositionPair init_low = analytic_exact_init(s_low, cfg.epsilon_black);
    DecompositionPair init_high = analytic_exact_init(s_high, cfg.epsilon_black);

    detail::SolverParams params =
        detail::SolverParams::from_pairs(init_low, init_high, cfg.use_wavelet_domain);
    std::vector<double> m(params.v.size(), 0.0), vv(params.v.size(), 0.0);

    // When neither mutual term nor equal_r couples the pairs, the objective
    // separates and each pair keeps its own running minimum; pair_low is
    // then exactly independent of s_high.
    const bool separable = w.w_mutual_low == 0.0 && w.w_mutual_high == 0.0 && w.w_equal_r == 0.0;
    const size_t half = params.v.size() / 2;
    std::vector<double> best_low(params.v.begin(), params.v.begin() + half);
    std::vector<double> best_high(params.v.begin() + half, params.v.end());
    double best_low_val = std::numeric_limits<double>::infinity();
    double best_high_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_joint = params.v;

    SolveResult res;
    res.best_total = std::numeric_limits<double>::infinity();
    double b1t = 1.0, b2t = 1.0;

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        DecompositionPair pl{params.decode_field(0), params.decode_field(1)};
        DecompositionPair ph{params.decode_field(2), params.decode_field(3)};
        double split[2] = {0.0, 0.0};
        LossBreakdown b = detail::evaluate(pl, ph, s_low, s_high, w, true, nullptr, split);
        if (!std::isfinite(b.total)) {
            res.diverged = true;
            break;
        }
        res.trace.push_back(b);
        if (separable) {
            if (split[0] < best_low_val) {
                best_low_val = split[0];
                std::copy(params.v.begin(), params.v.begin() + half, best_low.begin());
            }
            if (split[1] < best_high_val) {
                best_high_val = split[1];
                std::copy(params.v.begin() + half, params.v.end(), best_high.begin());
            }
            res.best_total = best_low_val + best_high_val;
        } else if (b.total < res.best_total) {
            res.best_total = b.total;
            best_joint = params.v;
        }
        res.best_trace.push_back(res.best_total);
        res.iterations = iter + 1;

        if (cfg.convergence_tol > 0.0 && iter >= 20) {
            const double prev = res.best_trace[iter - 20];
            const double rel = (prev - res.best_total) / std::max(std::abs(prev), 1e-300);
            if (rel < cfg.convergence_tol) break;
        }

        PairGradient g = gradient(pl, ph, s_low, s_high, w);
        std::vector<double> gp = params.encode_gradient(g);
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        for (size_t i = 0; i < params.v.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gp[i];
            vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * gp[i] * gp[i];
            const double mhat = m[i] / (1.0 - b1t);
            const double vhat = vv[i] / (1.0 - b2t);
            params.v[i] -= cfg.step_size * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
    }

    if (separable) {
        std::copy(best_low.begin(), best_low.end(), params.v.begin());
        std::copy(best_high.begin(), best_high.end(), params.v.begin() + half);
    } else {
        params.v = best_joint;
    }
    res.low = {params.decode_field(0), params.decode_field(1)};
    res.high = {params.decode_field(2), params.decode_field(3)};
    return res;
}

}  // namespace qrtx
