#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qrtx/decompose.hpp"
#include "qrtx/gradcheck.hpp"
#include "qrtx/losses.hpp"

using namespace qrtx;

namespace {

RgbImage random_image(int h, int w, uint64_t seed, double lo = 0.05, double hi = 0.95) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    RgbImage img(h, w);
    for (int c = 0; c < 3; ++c)
        for (double& v : img.plane(c).data) v = d(rng);
    return img;
}

RgbImage constant_image(int h, int w, double r, double g, double b) {
    RgbImage img(h, w);
    for (double& v : img.r.data) v = r;
    for (double& v : img.g.data) v = g;
    for (double& v : img.b.data) v = b;
    return img;
}

}  // namespace

TEST_CASE("l1_recon", "[losses]") {
    RgbImage a = random_image(3, 4, 1);
    CHECK(l1_recon(a, a) == 0.0);

    RgbImage shifted = a;
    for (int c = 0; c < 3; ++c)
        for (double& v : shifted.plane(c).data) v += 0.1;
    CHECK_THAT(l1_recon(shifted, a), Catch::Matchers::WithinAbs(0.1, 1e-12));

    RgbImage b = constant_image(2, 2, 0.5, 0.5, 0.5);
    RgbImage b2 = b;
    b2.g.at(1, 0) += 0.3;  // one channel of one pixel, 12 samples total
    CHECK_THAT(l1_recon(b2, b), Catch::Matchers::WithinAbs(0.3 / 12.0, 1e-15));

    RgbImage wrong(2, 3);
    CHECK_THROWS_AS(l1_recon(a, wrong), std::invalid_argument);
}

TEST_CASE("mutual_recon", "[losses]") {
    RgbImage s = random_image(4, 4, 2, 0.2, 0.9);
    DecompositionPair pair = analytic_exact_init(s);

    // identical pairs degenerate to the plain reconstruction terms
    auto [ml, mh] = mutual_recon(pair, pair, s, s);
    CHECK(ml <= 1e-12);
    CHECK(mh <= 1e-12);

    // two constant gray images with the illuminations swapped between the
    // pair slots: each mutual reconstruction reproduces the wrong image
    const double ga = 0.3, gb = 0.8;
    RgbImage img_a = constant_image(4, 4, ga, ga, ga);
    RgbImage img_b = constant_image(4, 4, gb, gb, gb);
    DecompositionPair pa = analytic_exact_init(img_a);
    DecompositionPair pb = analytic_exact_init(img_b);
    DecompositionPair swapped_low{pa.q_r, pb.q_i};
    DecompositionPair swapped_high{pb.q_r, pa.q_i};
    auto [m1, m2] = mutual_recon(swapped_low, swapped_high, img_a, img_b);
    CHECK_THAT(m1, Catch::Matchers::WithinAbs(gb - ga, 1e-12));  // sees img_b against img_a
    CHECK_THAT(m2, Catch::Matchers::WithinAbs(gb - ga, 1e-12));

    // zero illumination: mutual losses reduce to mean|target|
    DecompositionPair zero_low{pa.q_r, QuaternionField(4, 4)};
    DecompositionPair zero_high{pb.q_r, QuaternionField(4, 4)};
    auto [z1, z2] = mutual_recon(zero_low, zero_high, img_a, img_b);
    CHECK_THAT(z1, Catch::Matchers::WithinAbs(ga, 1e-12));
    CHECK_THAT(z2, Catch::Matchers::WithinAbs(gb, 1e-12));
}

TEST_CASE("smoothness", "[losses]") {
    const int h = 4, w = 6;
    QuaternionField flat(h, w);
    for (auto& q : flat.data) q = {0, 0.5, 0.5, 0.5};

    QuaternionField const_illum(h, w);
    for (auto& q : const_illum.data) q = {0, 0.2, 0.2, 0.2};
    CHECK(smoothness(const_illum, flat) == 0.0);

    // unit illumination step between columns 2 and 3, flat reflectance:
    // h edges of weight exp(0)=1, mean over h*w pixels, one direction
    QuaternionField step(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double v = c >= 3 ? 1.0 : 0.0;
            step.at(r, c) = {0, v, v, v};
        }
    CHECK_THAT(smoothness(step, flat), Catch::Matchers::WithinRel(1.0 / w, 1e-12));

    // the same step in the reflectance masks the edge by exp(-10)
    CHECK_THAT(smoothness(step, step), Catch::Matchers::WithinRel(std::exp(-10.0) / w, 1e-12));
}

TEST_CASE("equal_r", "[losses]") {
    QuaternionField a(3, 3), b(3, 3);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (auto& q : a.data) q = {d(rng), d(rng), d(rng), d(rng)};
    CHECK(equal_r(a, a) == 0.0);

    b = a;
    for (auto& q : b.data) q = q + Quaternion{0.2, 0.2, 0.2, 0.2};
    CHECK_THAT(equal_r(a, b), Catch::Matchers::WithinAbs(0.2, 1e-12));
    CHECK(equal_r(a, b) == equal_r(b, a));

    // ratio reflectance is invariant to halving the image (exact: scaling
    // numerator and denominator by a power of two preserves the quotient)
    RgbImage img = random_image(5, 5, 10, 0.1, 0.9);
    RgbImage half = img;
    for (int c = 0; c < 3; ++c)
        for (double& v : half.plane(c).data) v *= 0.5;
    CHECK(equal_r(init_reflectance(img), init_reflectance(half)) == 0.0);
}

TEST_CASE("freq_reg basics", "[losses]") {
    RgbImage zero(8, 8);
    CHECK(freq_reg(zero, zero, 0.01) == 0.0);

    RgbImage flat = constant_image(8, 8, 0.4, 0.6, 0.2);
    CHECK(freq_reg(flat, flat, 0.01) == 0.0);  // only DC is populated, DC is unmasked
}

TEST_CASE("freq_reg checkerboard against the direct DFT", "[losses]") {
    // +-1 checkerboard in one channel: the whole spectrum sits on the
    // Nyquist coefficient |F| = 64, inside the mask of 39 coefficients
    RgbImage board(8, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) board.r.at(r, c) = ((r + c) % 2 == 0) ? 1.0 : -1.0;
    RgbImage zero(8, 8);

    const double gamma = 0.01;
    const double expected_hand = gamma * 64.0 / 39.0;
    const double fast = freq_reg(board, zero, gamma);
    const double slow = oracle::freq_reg_slow(board, zero, gamma);
    CHECK_THAT(fast, Catch::Matchers::WithinRel(expected_hand, 1e-12));
    CHECK_THAT(slow, Catch::Matchers::WithinRel(expected_hand, 1e-9));
}

TEST_CASE("freq_reg equals the direct DFT on power-of-two dims", "[losses]") {
    for (int n : {8, 16}) {
        RgbImage a = random_image(n, n, 50 + n);
        RgbImage B = random_image(n, n, 60 + n);
        const double fast = freq_reg(a, B, 0.01);
        const double slow = oracle::freq_reg_slow(a, B, 0.01);
        CHECK_THAT(fast, Catch::Matchers::WithinRel(slow, 1e-9));
    }
}

TEST_CASE("total_loss", "[losses]") {
    // constant mid-gray: every term vanishes
    RgbImage gray = constant_image(8, 8, 0.5, 0.5, 0.5);
    DecompositionPair p = analytic_exact_init(gray);
    LossWeights w;
    LossBreakdown b = total_loss(p, p, gray, gray, w);
    CHECK(b.recon_low <= 1e-15);
    CHECK(b.recon_high <= 1e-15);
    CHECK(b.mutual_low <= 1e-15);
    CHECK(b.mutual_high <= 1e-15);
    CHECK(b.smooth == 0.0);
    CHECK(b.equal_r == 0.0);
    CHECK(b.freq <= 1e-12);
    CHECK(b.total <= 1e-12);

    // zero weights null the total but keep the term fields
    RgbImage s_low = random_image(8, 8, 70);
    RgbImage s_high = random_image(8, 8, 71);
    DecompositionPair pl = analytic_exact_init(s_low);
    DecompositionPair ph = analytic_exact_init(s_high);
    LossWeights zero_w;
    zero_w.w_recon_low = zero_w.w_recon_high = zero_w.w_mutual_low = zero_w.w_mutual_high = 0.0;
    zero_w.w_smooth = zero_w.w_equal_r = zero_w.w_freq = 0.0;
    LossBreakdown bz = total_loss(pl, ph, s_low, s_high, zero_w);
    CHECK(bz.total == 0.0);
    CHECK(bz.equal_r > 0.0);
    CHECK(bz.freq > 0.0);

    // total equals the weight/term dot product
    LossBreakdown br = total_loss(pl, ph, s_low, s_high, w);
    const double dot = w.w_recon_low * br.recon_low + w.w_recon_high * br.recon_high +
                       w.w_mutual_low * br.mutual_low + w.w_mutual_high * br.mutual_high +
                       w.w_smooth * br.smooth + w.w_equal_r * br.equal_r + w.w_freq * br.freq;
    CHECK_THAT(br.total, Catch::Matchers::WithinRel(dot, 1e-12));

    // every unweighted term is nonnegative
    for (double t : {br.recon_low, br.recon_high, br.mutual_low, br.mutual_high, br.smooth, br.equal_r,
                     br.freq})
        CHECK(t >= 0.0);

    // linear in the weights
    LossWeights scaled = w;
    const double alpha = 3.5;
    scaled.w_recon_low *= alpha;
    scaled.w_recon_high *= alpha;
    scaled.w_mutual_low *= alpha;
    scaled.w_mutual_high *= alpha;
    scaled.w_smooth *= alpha;
    scaled.w_equal_r *= alpha;
    scaled.w_freq *= alpha;
    LossBreakdown bs = total_loss(pl, ph, s_low, s_high, scaled);
    CHECK_THAT(bs.total, Catch::Matchers::WithinRel(alpha * br.total, 1e-12));
}

TEST_CASE("smoothness edge masking is monotone", "[losses]") {
    // increasing the reflectance step never increases the contribution
    const int h = 2, w = 2;
    QuaternionField illum(h, w);
    illum.at(0, 0) = {0, 0, 0, 0};
    illum.at(0, 1) = {0, 1, 1, 1};
    illum.at(1, 0) = {0, 0, 0, 0};
    illum.at(1, 1) = {0, 1, 1, 1};

    double prev = std::numeric_limits<double>::infinity();
    for (double edge : {0.0, 0.1, 0.5, 1.0, 2.0}) {
        QuaternionField refl(h, w);
        refl.at(0, 1) = {0, edge, edge, edge};
        refl.at(1, 1) = {0, edge, edge, edge};
        const double sm = smoothness(illum, refl);
        CHECK(sm <= prev);
        prev = sm;
    }
}
