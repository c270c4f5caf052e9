#pragma once

// Little-endian primitives shared by the file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "scatter/error.hpp"

namespace scatter::io {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

inline void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

inline void write_f32(std::ostream& os, float v) { os.write(reinterpret_cast<const char*>(&v), 4); }

inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4)) throw InvalidInput("truncated file (u32)");
    return v;
}

inline float read_f32(std::istream& is) {
    float v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4)) throw InvalidInput("truncated file (float payload)");
    return v;
}

inline void expect_magic(std::istream& is, const char (&magic)[5], const std::string& what) {
    char buf[4] = {};
    if (!is.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
        throw InvalidInput(what + ": bad magic, expected '" + std::string(magic) + "'");
}

}  // namespace scatter::io
