#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "secnn/errors.hpp"

// Little-endian stream primitives shared by the file formats.

namespace secnn::binio {

inline void put_u8(std::ostream& os, std::uint8_t v) {
    os.put(static_cast<char>(v));
}

inline void put_u16(std::ostream& os, std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    os.write(b, 2);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}

inline void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

inline void read_exact(std::istream& is, char* dst, std::size_t count, const char* what) {
    is.read(dst, static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(is.gcount()) != count) {
        throw corruption_error(std::string(what) + ": file truncated");
    }
}

inline std::uint8_t get_u8(std::istream& is, const char* what) {
    char b;
    read_exact(is, &b, 1, what);
    return static_cast<std::uint8_t>(b);
}

inline std::uint16_t get_u16(std::istream& is, const char* what) {
    unsigned char b[2];
    read_exact(is, reinterpret_cast<char*>(b), 2, what);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline std::uint32_t get_u32(std::istream& is, const char* what) {
    unsigned char b[4];
    read_exact(is, reinterpret_cast<char*>(b), 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline float get_f32(std::istream& is, const char* what) {
    const std::uint32_t bits = get_u32(is, what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

// The payload blocks are bulk float32; on a little-endian host the memory
// image is already the wire image.
inline bool host_is_little_endian() {
    const std::uint16_t probe = 1;
    std::uint8_t first;
    std::memcpy(&first, &probe, 1);
    return first == 1;
}

inline void put_f32_block(std::ostream& os, const float* v, std::size_t count) {
    if (host_is_little_endian()) {
        os.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(count * 4));
        return;
    }
    for (std::size_t i = 0; i < count; ++i) put_f32(os, v[i]);
}

inline void get_f32_block(std::istream& is, float* v, std::size_t count, const char* what) {
    if (host_is_little_endian()) {
        read_exact(is, reinterpret_cast<char*>(v), count * 4, what);
        return;
    }
    for (std::size_t i = 0; i < count; ++i) v[i] = get_f32(is, what);
}

inline void require_at_end(std::istream& is, const char* what) {
    is.peek();
    if (!is.eof()) {
        throw corruption_error(std::string(what) + ": trailing bytes after payload");
    }
}

}  // namespace secnn::binio
