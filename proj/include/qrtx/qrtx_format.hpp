// QRTX binary quaternion-field format.
//
// Layout, all little-endian:
//   bytes 0-3    magic "QRTX"
//   bytes 4-7    version, u32 = 1
//   bytes 8-11   height, u32
//   bytes 12-15  width, u32
//   byte  16     channel count, u8 = 4
//   then         4 * height * width f32 samples, plane-ordered w,x,y,z,
//                each plane row-major
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrtx/image.hpp"

namespace qrtx {

struct QrtxError : std::runtime_error {
    explicit QrtxError(const std::string& msg) : std::runtime_error("qrtx: " + msg) {}
};

namespace detail {

inline void put_u32_le(std::vector<unsigned char>& out, uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

inline uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::vector<unsigned char> encode_qrtx(const QuaternionField& f) {
    std::vector<unsigned char> out;
    out.reserve(17 + static_cast<size_t>(f.height) * f.width * 16);
    out.push_back('Q');
    out.push_back('R');
    out.push_back('T');
    out.push_back('X');
    detail::put_u32_le(out, 1u);
    detail::put_u32_le(out, static_cast<uint32_t>(f.height));
    detail::put_u32_le(out, static_cast<uint32_t>(f.width));
    out.push_back(4u);
    for (int comp = 0; comp < 4; ++comp)
        for (const Quaternion& q : f.data) {
            const double dv = comp == 0 ? q.w : (comp == 1 ? q.x : (comp == 2 ? q.y : q.z));
            const uint32_t bits = std::bit_cast<uint32_t>(static_cast<float>(dv));
            detail::put_u32_le(out, bits);
        }
    return out;
}

inline QuaternionField decode_qrtx(const std::vector<unsigned char>& buf) {
    if (buf.size() < 17) throw QrtxError("short file");
    if (std::memcmp(buf.data(), "QRTX", 4) != 0) throw QrtxError("bad magic");
    const uint32_t version = detail::get_u32_le(buf.data() + 4);
    if (version != 1u) throw QrtxError("version mismatch");
    const uint32_t height = detail::get_u32_le(buf.data() + 8);
    const uint32_t width = detail::get_u32_le(buf.data() + 12);
    if (height == 0 || width == 0) throw QrtxError("empty field dimensions");
    if (buf[16] != 4u) throw QrtxError("unsupported channel count");
    const size_t expected = static_cast<size_t>(height) * width * 4 * 4;
    if (buf.size() - 17 != expected) throw QrtxError("payload length mismatch");

    QuaternionField f(static_cast<int>(height), static_cast<int>(width));
    const unsigned char* p = buf.data() + 17;
    for (int comp = 0; comp < 4; ++comp)
        for (Quaternion& q : f.data) {
            const float v = std::bit_cast<float>(detail::get_u32_le(p));
            p += 4;
            if (comp == 0) q.w = v;
            else if (comp == 1) q.x = v;
            else if (comp == 2) q.y = v;
            else q.z = v;
        }
    return f;
}

inline void save_qrtx(const QuaternionField& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw QrtxError("cannot open for writing: " + path);
    const std::vector<unsigned char> buf = encode_qrtx(f);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw QrtxError("write failed: " + path);
}

inline QuaternionField load_qrtx(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw QrtxError("cannot open: " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_qrtx(buf);
}

}  // namespace qrtx
