#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qrtx/wavelet.hpp"

using namespace qrtx;

namespace {

QuaternionField random_field(int h, int w, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    QuaternionField f(h, w);
    for (auto& q : f.data) q = {d(rng), d(rng), d(rng), d(rng)};
    return f;
}

double field_max_abs_diff(const QuaternionField& a, const QuaternionField& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const Quaternion d = a.data[i] - b.data[i];
        worst = std::max({worst, std::abs(d.w), std::abs(d.x), std::abs(d.y), std::abs(d.z)});
    }
    return worst;
}

}  // namespace

TEST_CASE("dwt2 on a constant block", "[wavelet]") {
    const double c = 0.7;
    Matrix m(2, 2, c);
    SubbandSet s = dwt2_haar(m);
    CHECK(s.ll.at(0, 0) == 2.0 * c);
    CHECK(s.lh.at(0, 0) == 0.0);
    CHECK(s.hl.at(0, 0) == 0.0);
    CHECK(s.hh.at(0, 0) == 0.0);
}

TEST_CASE("dwt2 frozen 2x2 example and its energy", "[wavelet]") {
    Matrix m(2, 2);
    m.at(0, 0) = 1;
    m.at(0, 1) = 2;
    m.at(1, 0) = 3;
    m.at(1, 1) = 4;
    SubbandSet s = dwt2_haar(m);
    CHECK(s.ll.at(0, 0) == 5.0);
    CHECK(s.hl.at(0, 0) == -1.0);
    CHECK(s.lh.at(0, 0) == -2.0);
    CHECK(s.hh.at(0, 0) == 0.0);

    // orthonormality: 1+4+9+16 = 25+1+4+0
    const double in_energy = 1 + 4 + 9 + 16;
    const double out_energy = 25 + 1 + 4 + 0;
    CHECK(in_energy == out_energy);

    Matrix back = idwt2_haar(s, 2, 2);
    CHECK(back == m);
}

TEST_CASE("idwt2 is the exact inverse", "[wavelet]") {
    SubbandSet s{Matrix(1, 1), Matrix(1, 1), Matrix(1, 1), Matrix(1, 1)};
    s.ll.at(0, 0) = 5;
    s.hl.at(0, 0) = -1;
    s.lh.at(0, 0) = -2;
    s.hh.at(0, 0) = 0;
    Matrix m = idwt2_haar(s, 2, 2);
    CHECK(m.at(0, 0) == 1.0);
    CHECK(m.at(0, 1) == 2.0);
    CHECK(m.at(1, 0) == 3.0);
    CHECK(m.at(1, 1) == 4.0);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Matrix p(8, 8);
    for (double& v : p.data) v = d(rng);
    Matrix round = idwt2_haar(dwt2_haar(p), 8, 8);
    for (size_t i = 0; i < p.size(); ++i) CHECK(std::abs(round.data[i] - p.data[i]) <= 1e-12);

    SubbandSet zero{Matrix(2, 2), Matrix(2, 2), Matrix(2, 2), Matrix(2, 2)};
    Matrix z = idwt2_haar(zero, 4, 4);
    for (double v : z.data) CHECK(v == 0.0);

    CHECK_THROWS_AS(idwt2_haar(zero, 9, 9), std::invalid_argument);
}

TEST_CASE("pack_quaternion channel layout", "[wavelet]") {
    QuaternionField zero(4, 4);
    PackedSubbands pz = pack_quaternion(zero);
    REQUIRE(pz.channels.size() == 16);
    for (const Matrix& m : pz.channels) {
        CHECK(m.rows == 2);
        CHECK(m.cols == 2);
        for (double v : m.data) CHECK(v == 0.0);
    }

    QuaternionField wonly(4, 4);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (auto& q : wonly.data) q = {d(rng), 0, 0, 0};
    PackedSubbands pw = pack_quaternion(wonly);
    for (int ch = 0; ch < 4; ++ch) CHECK(max_abs(pw.channels[ch]) > 0.0);
    for (int ch = 4; ch < 16; ++ch)
        for (double v : pw.channels[ch].data) CHECK(v == 0.0);
}

TEST_CASE("unpack inverts pack", "[wavelet]") {
    for (auto [h, w] : {std::pair{6, 10}, std::pair{5, 7}, std::pair{2, 2}}) {
        QuaternionField f = random_field(h, w, 100 + h * w);
        QuaternionField back = unpack_quaternion(pack_quaternion(f));
        CHECK(back.height == h);
        CHECK(back.width == w);
        CHECK(field_max_abs_diff(f, back) <= 1e-12);
    }

    PackedSubbands bad;
    bad.orig_height = bad.orig_width = 2;
    bad.channels.assign(15, Matrix(1, 1));
    CHECK_THROWS_AS(unpack_quaternion(bad), std::invalid_argument);

    PackedSubbands zero;
    zero.orig_height = zero.orig_width = 4;
    zero.channels.assign(16, Matrix(2, 2));
    QuaternionField zf = unpack_quaternion(zero);
    for (const Quaternion& q : zf.data) CHECK(q == Quaternion{0, 0, 0, 0});
}

TEST_CASE("packing is linear", "[wavelet]") {
    const int h = 7, w = 9;
    QuaternionField f = random_field(h, w, 1);
    QuaternionField g = random_field(h, w, 2);
    const double alpha = 0.37, beta = -1.25;
    QuaternionField combo(h, w);
    for (size_t i = 0; i < combo.data.size(); ++i)
        combo.data[i] = alpha * f.data[i] + beta * g.data[i];

    PackedSubbands pc = pack_quaternion(combo);
    PackedSubbands pf = pack_quaternion(f);
    PackedSubbands pg = pack_quaternion(g);
    for (int ch = 0; ch < 16; ++ch)
        for (size_t i = 0; i < pc.channels[ch].size(); ++i) {
            const double expected = alpha * pf.channels[ch].data[i] + beta * pg.channels[ch].data[i];
            CHECK(std::abs(pc.channels[ch].data[i] - expected) <= 1e-12);
        }
}

TEST_CASE("Parseval on even dimensions", "[wavelet]") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Matrix m(16, 12);
    for (double& v : m.data) v = d(rng);
    double in_energy = 0.0;
    for (double v : m.data) in_energy += v * v;
    SubbandSet s = dwt2_haar(m);
    double out_energy = 0.0;
    for (const Matrix* sb : {&s.ll, &s.lh, &s.hl, &s.hh})
        for (double v : sb->data) out_energy += v * v;
    CHECK(std::abs(in_energy - out_energy) <= 1e-9 * in_energy);
}

TEST_CASE("constant field has exactly zero detail channels", "[wavelet]") {
    QuaternionField f(6, 6);
    for (auto& q : f.data) q = {0.3, 0.6, 0.1, 0.9};
    PackedSubbands p = pack_quaternion(f);
    for (int comp = 0; comp < 4; ++comp)
        for (int sb = 1; sb < 4; ++sb)  // LH, HL, HH
            for (double v : p.channels[4 * comp + sb].data) CHECK(v == 0.0);
}

TEST_CASE("empty plane is rejected", "[wavelet]") {
    Matrix empty;
    CHECK_THROWS_AS(dwt2_haar(empty), std::invalid_argument);
}
