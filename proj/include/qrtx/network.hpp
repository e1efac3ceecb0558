// Forward-only decomposition network: subband packing of both initializer
// quaternions, per-branch convolutions, symmetric cross-attention, fusion
// with a residual onto the packed input, Laplacian sharpening, inverse
// transform and a smoothing block.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qrtx/decompose.hpp"
#include "qrtx/image.hpp"
#include "qrtx/matrix.hpp"
#include "qrtx/wavelet.hpp"

namespace qrtx {

using ChannelStack = std::vector<Matrix>;

// Dense convolution kernel, out_ch x in_ch x k x k, replicate boundary.
struct Conv2D {
    int out_ch = 0;
    int in_ch = 0;
    int ksize = 1;
    std::vector<double> w;

    Conv2D() = default;
    Conv2D(int out, int in, int k)
        : out_ch(out), in_ch(in), ksize(k), w(static_cast<size_t>(out) * in * k * k, 0.0) {}

    double& at(int o, int i, int kr, int kc) {
        return w[((static_cast<size_t>(o) * in_ch + i) * ksize + kr) * ksize + kc];
    }
    double at(int o, int i, int kr, int kc) const {
        return w[((static_cast<size_t>(o) * in_ch + i) * ksize + kr) * ksize + kc];
    }

    ChannelStack apply(const ChannelStack& in) const {
        if (static_cast<int>(in.size()) != in_ch) throw std::invalid_argument("conv: channel count mismatch");
        const int rows = in[0].rows, cols = in[0].cols;
        const int r0 = ksize / 2;
        ChannelStack out(out_ch, Matrix(rows, cols));
        for (int o = 0; o < out_ch; ++o)
            for (int i = 0; i < in_ch; ++i)
                for (int kr = 0; kr < ksize; ++kr)
                    for (int kc = 0; kc < ksize; ++kc) {
                        const double k = at(o, i, kr, kc);
                        if (k == 0.0) continue;
                        for (int r = 0; r < rows; ++r) {
                            const int rr = std::clamp(r + kr - r0, 0, rows - 1);
                            for (int c = 0; c < cols; ++c) {
                                const int cc = std::clamp(c + kc - r0, 0, cols - 1);
                                out[o].at(r, c) += k * in[i].at(rr, cc);
                            }
                        }
                    }
        return out;
    }
};

struct AttentionWeights {
    Conv2D w_qr, w_ki, w_vi;  // reflectance branch projections
    Conv2D w_qi, w_kr, w_vr;  // illumination branch projections
    Conv2D w_o;               // shared output consolidation
};

struct NetworkPlan {
    int branch_in = 16;   // packed channels per quaternion
    int width = 32;       // branch feature channels
    int heads = 4;
    double sharpen_gain = 0.1;
};

struct NetworkWeights {
    NetworkPlan plan;
    Conv2D conv1_r, conv2_r;  // 3x3 branch convolutions, rectifier between
    Conv2D conv1_i, conv2_i;
    AttentionWeights attn;    // 1x1 projections
    Conv2D fusion;            // 1x1, 2*width -> 32
    uint64_t seed = 0;

    void validate() const {
        if (plan.width <= 0 || plan.heads <= 0 || plan.width % plan.heads != 0)
            throw std::invalid_argument("network: head count must divide channel width");
        auto expect = [](const Conv2D& c, int out, int in, int k, const char* who) {
            if (c.out_ch != out || c.in_ch != in || c.ksize != k)
                throw std::invalid_argument(std::string("network: kernel shape mismatch for ") + who);
        };
        expect(conv1_r, plan.width, plan.branch_in, 3, "conv1_r");
        expect(conv2_r, plan.width, plan.width, 3, "conv2_r");
        expect(conv1_i, plan.width, plan.branch_in, 3, "conv1_i");
        expect(conv2_i, plan.width, plan.width, 3, "conv2_i");
        for (const Conv2D* p : {&attn.w_qr, &attn.w_ki, &attn.w_vi, &attn.w_qi, &attn.w_kr, &attn.w_vr,
                                &attn.w_o})
            expect(*p, plan.width, plan.width, 1, "attention projection");
        expect(fusion, 2 * plan.branch_in, 2 * plan.width, 1, "fusion");
    }

    static NetworkWeights randomized(const NetworkPlan& plan, uint64_t seed) {
        NetworkWeights nw;
        nw.plan = plan;
        nw.seed = seed;
        std::mt19937_64 rng(seed);
        auto make = [&rng](int out, int in, int k) {
            Conv2D c(out, in, k);
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (static_cast<double>(in) * k * k)));
            for (double& v : c.w) v = dist(rng);
            return c;
        };
        nw.conv1_r = make(plan.width, plan.branch_in, 3);
        nw.conv2_r = make(plan.width, plan.width, 3);
        nw.conv1_i = make(plan.width, plan.branch_in, 3);
        nw.conv2_i = make(plan.width, plan.width, 3);
        nw.attn.w_qr = make(plan.width, plan.width, 1);
        nw.attn.w_ki = make(plan.width, plan.width, 1);
        nw.attn.w_vi = make(plan.width, plan.width, 1);
        nw.attn.w_qi = make(plan.width, plan.width, 1);
        nw.attn.w_kr = make(plan.width, plan.width, 1);
        nw.attn.w_vr = make(plan.width, plan.width, 1);
        nw.attn.w_o = make(plan.width, plan.width, 1);
        nw.fusion = make(2 * plan.branch_in, 2 * plan.width, 1);
        return nw;
    }
};

// Row-softmax(Q K^T / sqrt(d)) over flattened spatial positions.
// Q and K are N x d; the result is N x N with rows summing to one.
inline Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, int d) {
    if (q.cols != k.cols || d <= 0) throw std::invalid_argument("attention: projection dims mismatch");
    const int n = q.rows;
    Matrix a(n, k.rows);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    for (int i = 0; i < n; ++i) {
        double row_max = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < k.rows; ++j) {
            double dot = 0.0;
            for (int e = 0; e < q.cols; ++e) dot += q.at(i, e) * k.at(j, e);
            a.at(i, j) = dot * inv_sqrt_d;
            row_max = std::max(row_max, a.at(i, j));
        }
        double denom = 0.0;
        for (int j = 0; j < k.rows; ++j) {
            a.at(i, j) = std::exp(a.at(i, j) - row_max);
            denom += a.at(i, j);
        }
        for (int j = 0; j < k.rows; ++j) a.at(i, j) /= denom;
    }
    return a;
}

namespace detail {

// C x H x W stack flattened to (H*W) x C.
inline Matrix flatten_stack(const ChannelStack& s) {
    const int n = s[0].rows * s[0].cols;
    Matrix m(n, static_cast<int>(s.size()));
    for (int c = 0; c < static_cast<int>(s.size()); ++c)
        for (int i = 0; i < n; ++i) m.at(i, c) = s[c].data[i];
    return m;
}

inline ChannelStack unflatten_stack(const Matrix& m, int rows, int cols) {
    ChannelStack s(m.cols, Matrix(rows, cols));
    for (int c = 0; c < m.cols; ++c)
        for (int i = 0; i < rows * cols; ++i) s[c].data[i] = m.at(i, c);
    return s;
}

// One direction of the symmetric module: target attends to source.
inline ChannelStack attend(const ChannelStack& target, const ChannelStack& source, const Conv2D& w_q,
                           const Conv2D& w_k, const Conv2D& w_v, const Conv2D& w_o, int heads) {
    const int rows = target[0].rows, cols = target[0].cols;
    const int c_width = static_cast<int>(target.size());
    const int d = c_width / heads;
    const Matrix q = flatten_stack(w_q.apply(target));
    const Matrix k = flatten_stack(w_k.apply(source));
    const Matrix v = flatten_stack(w_v.apply(source));
    const int n = q.rows;

    Matrix cross(n, c_width);
    for (int h = 0; h < heads; ++h) {
        Matrix qh(n, d), kh(n, d), vh(n, d);
        for (int i = 0; i < n; ++i)
            for (int e = 0; e < d; ++e) {
                qh.at(i, e) = q.at(i, h * d + e);
                kh.at(i, e) = k.at(i, h * d + e);
                vh.at(i, e) = v.at(i, h * d + e);
            }
        Matrix a = scaled_dot_attention(qh, kh, d);
        for (int i = 0; i < n; ++i)
            for (int e = 0; e < d; ++e) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) acc += a.at(i, j) * vh.at(j, e);
                cross.at(i, h * d + e) = acc;
            }
    }
    ChannelStack consolidated = w_o.apply(unflatten_stack(cross, rows, cols));
    ChannelStack out = target;
    for (int c = 0; c < c_width; ++c)
        for (size_t i = 0; i < out[c].size(); ++i) out[c].data[i] += consolidated[c].data[i];
    return out;
}

inline void laplacian_sharpen(ChannelStack& s, double gain) {
    for (Matrix& m : s) {
        Matrix lap(m.rows, m.cols);
        for (int r = 0; r < m.rows; ++r)
            for (int c = 0; c < m.cols; ++c) {
                const double up = m.at(std::max(r - 1, 0), c);
                const double down = m.at(std::min(r + 1, m.rows - 1), c);
                const double left = m.at(r, std::max(c - 1, 0));
                const double right = m.at(r, std::min(c + 1, m.cols - 1));
                lap.at(r, c) = 4.0 * m.at(r, c) - up - down - left - right;
            }
        for (size_t i = 0; i < m.size(); ++i) m.data[i] += gain * lap.data[i];
    }
}

inline QuaternionField box_smooth(const QuaternionField& f) {
    QuaternionField out(f.height, f.width);
    for (int r = 0; r < f.height; ++r)
        for (int c = 0; c < f.width; ++c) {
            Quaternion acc;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = std::clamp(r + dr, 0, f.height - 1);
                    const int cc = std::clamp(c + dc, 0, f.width - 1);
                    acc = acc + f.at(rr, cc);
                }
            out.at(r, c) = (1.0 / 9.0) * acc;
        }
    return out;
}

}  // namespace detail

// Symmetric refinement: each branch queries the other and keeps a residual.
inline std::pair<ChannelStack, ChannelStack> cross_attention(const ChannelStack& feat_r,
                                                             const ChannelStack& feat_i,
                                                             const AttentionWeights& w, int heads) {
    if (feat_r.size() != feat_i.size() || feat_r.empty())
        throw std::invalid_argument("cross_attention: feature stack mismatch");
    if (!feat_r[0].same_dims(feat_i[0]))
        throw std::invalid_argument("cross_attention: spatial dimension mismatch");
    const int c_width = static_cast<int>(feat_r.size());
    if (heads <= 0 || c_width % heads != 0)
        throw std::invalid_argument("cross_attention: head count must divide channel width");
    ChannelStack refined_r = detail::attend(feat_r, feat_i, w.w_qr, w.w_ki, w.w_vi, w.w_o, heads);
    ChannelStack refined_i = detail::attend(feat_i, feat_r, w.w_qi, w.w_kr, w.w_vr, w.w_o, heads);
    return {std::move(refined_r), std::move(refined_i)};
}

// Optional inspection of intermediate widths.
struct ForwardTrace {
    int packed_channels = 0;   // concatenated subband representation
    int branch_channels = 0;   // per-branch feature width
    int fused_channels = 0;    // pre-inverse-transform width
    int subband_rows = 0, subband_cols = 0;
};

inline DecompositionPair network_forward(const RgbImage& img, const NetworkWeights& nw,
                                         bool use_cross_attention = true, double epsilon_black = 1e-4,
                                         ForwardTrace* trace = nullptr) {
    nw.validate();

    PackedSubbands packed_r = pack_quaternion(init_reflectance(img, epsilon_black));
    PackedSubbands packed_i = pack_quaternion(init_illumination(img));

    ChannelStack packed;  // 32 channels: reflectance block then illumination block
    packed.reserve(32);
    for (const Matrix& m : packed_r.channels) packed.push_back(m);
    for (const Matrix& m : packed_i.channels) packed.push_back(m);

    auto branch = [](const ChannelStack& in, const Conv2D& c1, const Conv2D& c2) {
        ChannelStack f = c1.apply(in);
        for (Matrix& m : f)
            for (double& v : m.data) v = std::max(v, 0.0);
        return c2.apply(f);
    };
    ChannelStack feat_r = branch(packed_r.channels, nw.conv1_r, nw.conv2_r);
    ChannelStack feat_i = branch(packed_i.channels, nw.conv1_i, nw.conv2_i);

    if (use_cross_attention) {
        auto refined = cross_attention(feat_r, feat_i, nw.attn, nw.plan.heads);
        feat_r = std::move(refined.first);
        feat_i = std::move(refined.second);
    }

    ChannelStack concat;
    concat.reserve(feat_r.size() + feat_i.size());
    for (Matrix& m : feat_r) concat.push_back(std::move(m));
    for (Matrix& m : feat_i) concat.push_back(std::move(m));
    ChannelStack fused = nw.fusion.apply(concat);

    // Residual onto the packed input keeps the untouched initializers as the
    // zero-weight behavior of the whole network.
    for (size_t c = 0; c < fused.size(); ++c)
        for (size_t i = 0; i < fused[c].size(); ++i) fused[c].data[i] += packed[c].data[i];

    detail::laplacian_sharpen(fused, nw.plan.sharpen_gain);

    if (trace) {
        trace->packed_channels = static_cast<int>(packed.size());
        trace->branch_channels = nw.plan.width;
        trace->fused_channels = static_cast<int>(fused.size());
        trace->subband_rows = fused[0].rows;
        trace->subband_cols = fused[0].cols;
    }

    PackedSubbands out_r, out_i;
    out_r.orig_height = out_i.orig_height = img.height;
    out_r.orig_width = out_i.orig_width = img.width;
    out_r.channels.assign(fused.begin(), fused.begin() + 16);
    out_i.channels.assign(fused.begin() + 16, fused.end());

    DecompositionPair pair{unpack_quaternion(out_r), unpack_quaternion(out_i)};
    pair.q_r = detail::box_smooth(pair.q_r);
    pair.q_i = detail::box_smooth(pair.q_i);
    return pair;
}

}  // namespace qrtx
