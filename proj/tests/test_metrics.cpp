#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qrtx/decompose.hpp"
#include "qrtx/metrics.hpp"

using namespace qrtx;

namespace {

RgbImage random_image(int h, int w, uint64_t seed, double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    RgbImage img(h, w);
    for (int c = 0; c < 3; ++c)
        for (double& v : img.plane(c).data) v = d(rng);
    return img;
}

RgbImage constant_image(int h, int w, double v) {
    RgbImage img(h, w);
    for (int c = 0; c < 3; ++c)
        for (double& s : img.plane(c).data) s = v;
    return img;
}

// four reflectance planes from the ratio initializer
std::vector<Matrix> exact_reflectance_planes(const RgbImage& img) {
    QuaternionField f = init_reflectance(img);
    std::vector<Matrix> planes(4, Matrix(img.height, img.width));
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const Quaternion& q = f.at(r, c);
            planes[0].at(r, c) = q.w;
            planes[1].at(r, c) = q.x;
            planes[2].at(r, c) = q.y;
            planes[3].at(r, c) = q.z;
        }
    return planes;
}

}  // namespace

TEST_CASE("mse", "[metrics]") {
    RgbImage a = random_image(4, 4, 1);
    CHECK(mse(a, a) == 0.0);

    RgbImage b = a;
    for (int c = 0; c < 3; ++c)
        for (double& v : b.plane(c).data) v += 0.1;
    CHECK_THAT(mse(a, b), Catch::Matchers::WithinRel(0.01, 1e-12));
    CHECK(mse(a, b) == mse(b, a));

    RgbImage wrong(4, 5);
    CHECK_THROWS_AS(mse(a, wrong), std::invalid_argument);
}

TEST_CASE("mse and psnr against a direct re-evaluation", "[metrics]") {
    RgbImage a = random_image(8, 8, 2);
    RgbImage b = random_image(8, 8, 3);
    double acc = 0.0;
    long n = 0;
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 8; ++r)
            for (int cc = 0; cc < 8; ++cc) {
                const double d = a.plane(c).at(r, cc) - b.plane(c).at(r, cc);
                acc += d * d;
                ++n;
            }
    const double expected_mse = acc / n;
    CHECK_THAT(mse(a, b), Catch::Matchers::WithinRel(expected_mse, 1e-12));
    CHECK_THAT(psnr(a, b), Catch::Matchers::WithinRel(10.0 * std::log10(1.0 / expected_mse), 1e-12));
}

TEST_CASE("psnr distinguished values", "[metrics]") {
    RgbImage a = random_image(4, 4, 5);
    CHECK(std::isinf(psnr(a, a)));

    // constant offset 0.1 -> mse 0.01 -> 20 dB
    RgbImage b = a;
    for (int c = 0; c < 3; ++c)
        for (double& v : b.plane(c).data) v += 0.1;
    CHECK_THAT(psnr(a, b), Catch::Matchers::WithinRel(20.0, 1e-10));

    // unit error at unit range -> 0 dB
    RgbImage zero(4, 4);
    RgbImage one = constant_image(4, 4, 1.0);
    CHECK_THAT(psnr(zero, one), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("ssim", "[metrics]") {
    RgbImage a = random_image(16, 16, 7);
    CHECK_THAT(ssim(a, a), Catch::Matchers::WithinAbs(1.0, 1e-12));

    RgbImage inv(16, 16);
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < inv.plane(c).size(); ++i) inv.plane(c).data[i] = 1.0 - a.plane(c).data[i];
    CHECK(ssim(a, inv) < 1.0);

    // constant patches: only the luminance factor differs from 1
    RgbImage c25 = constant_image(16, 16, 0.25);
    RgbImage c75 = constant_image(16, 16, 0.75);
    const double c1 = 1e-4;
    const double expected = (2.0 * 0.25 * 0.75 + c1) / (0.25 * 0.25 + 0.75 * 0.75 + c1);
    CHECK_THAT(ssim(c25, c75), Catch::Matchers::WithinRel(expected, 1e-12));
    CHECK_THAT(expected, Catch::Matchers::WithinAbs(0.60007, 1e-5));

    RgbImage tiny(8, 8);
    CHECK_THROWS_AS(ssim(tiny, tiny), std::invalid_argument);
}

TEST_CASE("ssim against a direct re-evaluation", "[metrics]") {
    // independent single-window implementation on a 11x11 image (one valid
    // window position per channel)
    RgbImage a = random_image(11, 11, 8);
    RgbImage b = random_image(11, 11, 9);

    double win[11][11];
    double wsum = 0.0;
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
            const double di = i - 5, dj = j - 5;
            win[i][j] = std::exp(-(di * di + dj * dj) / 4.5);
            wsum += win[i][j];
        }
    double expected = 0.0;
    for (int c = 0; c < 3; ++c) {
        double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
        for (int i = 0; i < 11; ++i)
            for (int j = 0; j < 11; ++j) {
                const double wv = win[i][j] / wsum;
                const double va = a.plane(c).at(i, j), vb = b.plane(c).at(i, j);
                mu_a += wv * va;
                mu_b += wv * vb;
                aa += wv * va * va;
                bb += wv * vb * vb;
                ab += wv * va * vb;
            }
        const double c1 = 1e-4, c2 = 9e-4;
        expected += ((2 * mu_a * mu_b + c1) * (2 * (ab - mu_a * mu_b) + c2)) /
                    ((mu_a * mu_a + mu_b * mu_b + c1) * ((aa - mu_a * mu_a) + (bb - mu_b * mu_b) + c2));
    }
    expected /= 3.0;
    CHECK_THAT(ssim(a, b), Catch::Matchers::WithinRel(expected, 1e-12));
}

TEST_CASE("rci oracle values", "[metrics]") {
    RgbImage s_low = constant_image(2, 2, 0.2);
    RgbImage s_high = constant_image(2, 2, 0.9);

    // constant decomposer: zero variance, RCI exactly one
    auto fixed = [](const RgbImage& img) {
        return std::vector<Matrix>{Matrix(img.height, img.width, 0.375)};
    };
    RciReport r1 = rci(fixed, s_low, s_high, default_alphas());
    CHECK(r1.sup_variance == 0.0);
    CHECK(r1.rci == 1.0);

    // one pixel flipping 0 -> 1 over two alphas: variance 0.25, RCI zero
    auto flip = [&](const RgbImage& img) {
        Matrix m(img.height, img.width, 0.0);
        m.at(0, 0) = img.r.at(0, 0) > 0.5 ? 1.0 : 0.0;
        return std::vector<Matrix>{m};
    };
    RciReport r2 = rci(flip, s_low, s_high, {0.0, 1.0});
    CHECK(r2.sup_variance == 0.25);
    CHECK(r2.rci == 0.0);

    // linear ramp over the 11-step sweep: population variance 0.10
    auto ramp = [&](const RgbImage& img) {
        // recover alpha from the interpolated constant input
        const double alpha = (img.r.at(0, 0) - 0.2) / 0.7;
        Matrix m(img.height, img.width, 0.0);
        m.at(0, 0) = alpha;
        return std::vector<Matrix>{m};
    };
    RciReport r3 = rci(ramp, s_low, s_high, default_alphas());
    // brute force: mean of squares via sum k^2 = 385 over k=0..10
    double mean = 0.0, mean_sq = 0.0;
    for (int k = 0; k <= 10; ++k) {
        mean += k / 10.0;
        mean_sq += (k / 10.0) * (k / 10.0);
    }
    mean /= 11.0;
    mean_sq /= 11.0;
    const double expected_var = mean_sq - mean * mean;
    CHECK_THAT(expected_var, Catch::Matchers::WithinAbs(0.10, 1e-12));
    CHECK_THAT(r3.sup_variance, Catch::Matchers::WithinAbs(expected_var, 1e-12));
    CHECK_THAT(r3.rci, Catch::Matchers::WithinAbs(0.60, 1e-12));
}

TEST_CASE("rci of the exact decomposer on a relit pair", "[metrics]") {
    RgbImage s_high = random_image(8, 8, 11, 0.2, 0.95);
    RgbImage s_low(8, 8);
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < s_low.plane(c).size(); ++i)
            s_low.plane(c).data[i] = 0.2 * s_high.plane(c).data[i];

    RciReport r = rci(exact_reflectance_planes, s_low, s_high, default_alphas());
    CHECK(std::abs(r.rci - 1.0) <= 1e-9);
}

TEST_CASE("rci is permutation invariant and monotone in the sweep", "[metrics]") {
    RgbImage s_low = constant_image(3, 3, 0.1);
    RgbImage s_high = constant_image(3, 3, 0.8);
    auto dec = [](const RgbImage& img) {
        Matrix m(img.height, img.width);
        for (size_t i = 0; i < m.size(); ++i) m.data[i] = img.g.data[i] * img.g.data[i];
        return std::vector<Matrix>{m};
    };
    std::vector<double> forward = default_alphas();
    std::vector<double> reversed(forward.rbegin(), forward.rend());
    RciReport a = rci(dec, s_low, s_high, forward);
    RciReport b = rci(dec, s_low, s_high, reversed);
    CHECK(std::abs(a.rci - b.rci) <= 1e-12);

    // adding a pixel whose reflectance varies across alpha never raises RCI
    auto dec_worse = [&](const RgbImage& img) {
        std::vector<Matrix> planes = dec(img);
        planes[0].at(0, 0) = img.g.at(0, 0) > 0.4 ? 1.0 : 0.0;  // high-variance pixel
        return planes;
    };
    RciReport c = rci(dec_worse, s_low, s_high, forward);
    CHECK(c.rci <= a.rci);
}

TEST_CASE("rci input validation", "[metrics]") {
    RgbImage a = constant_image(2, 2, 0.5);
    auto fixed = [](const RgbImage& img) {
        return std::vector<Matrix>{Matrix(img.height, img.width, 0.5)};
    };
    CHECK_THROWS_AS(rci(fixed, a, a, {}), std::invalid_argument);
    CHECK_THROWS_AS(rci(fixed, a, a, {0.0, 1.5}), std::invalid_argument);
    auto bad_dims = [](const RgbImage&) { return std::vector<Matrix>{Matrix(1, 1, 0.5)}; };
    CHECK_THROWS_AS(rci(bad_dims, a, a, {0.0, 1.0}), std::invalid_argument);
}
