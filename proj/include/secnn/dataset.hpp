#pragma once

#include <zlib.h>

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "secnn/binio.hpp"
#include "secnn/tensor.hpp"

// Dataset container, bit-exact layout:
//
//   magic    "SEDF"                     4 bytes
//   version  u32 LE = 1
//   N        u32 LE                     sample count
//   S        u32 LE                     side length
//   channels u32 LE = 3
//   payload  N*S*S*3 float32 LE, values in [0,1]
//   labels   N bytes, 0 = fake, 1 = real
//   crc      u32 LE, CRC32 of payload bytes followed by label bytes

namespace secnn {

inline constexpr char kDatasetMagic[4] = {'S', 'E', 'D', 'F'};
inline constexpr std::uint32_t kDatasetVersion = 1;

struct DatasetContainer {
    Tensor<float> images;  // [N,S,S,3]
    std::vector<std::uint8_t> labels;
    std::string provenance;

    std::size_t count() const { return labels.size(); }
    std::size_t side() const { return images.extent(1); }

    void validate() const {
        require_rank(images, 4, "dataset images");
        if (images.extent(0) != labels.size()) {
            throw argument_error("dataset: " + std::to_string(images.extent(0)) +
                                 " images vs " + std::to_string(labels.size()) + " labels");
        }
        if (images.extent(1) != images.extent(2) || images.extent(3) != 3) {
            throw argument_error("dataset: images must be square with 3 channels, got " +
                                 shape_to_string(images.shape()));
        }
        for (const float v : images.values()) {
            if (!(v >= 0.0f && v <= 1.0f)) {
                throw argument_error("dataset: pixel value outside [0,1]");
            }
        }
        for (const std::uint8_t y : labels) {
            if (y > 1) throw argument_error("dataset: label outside {0,1}");
        }
    }
};

inline void write_container(const DatasetContainer& ds, const std::string& path) {
    ds.validate();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw io_error("cannot open " + path + " for writing");
    os.write(kDatasetMagic, 4);
    binio::put_u32(os, kDatasetVersion);
    binio::put_u32(os, static_cast<std::uint32_t>(ds.count()));
    binio::put_u32(os, static_cast<std::uint32_t>(ds.side()));
    binio::put_u32(os, 3);

    uLong crc = crc32(0L, Z_NULL, 0);
    const float* px = ds.images.data();
    const std::size_t total = ds.images.size();
    const std::size_t chunk = 1 << 20;
    std::vector<unsigned char> buf;
    for (std::size_t at = 0; at < total; at += chunk) {
        const std::size_t n = std::min(chunk, total - at);
        buf.resize(n * 4);
        if (binio::host_is_little_endian()) {
            std::memcpy(buf.data(), px + at, n * 4);
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                std::uint32_t bits;
                std::memcpy(&bits, px + at + i, 4);
                buf[i * 4 + 0] = static_cast<unsigned char>(bits & 0xff);
                buf[i * 4 + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
                buf[i * 4 + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
                buf[i * 4 + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
            }
        }
        crc = crc32(crc, buf.data(), static_cast<uInt>(buf.size()));
        os.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size()));
    }
    if (!ds.labels.empty()) {
        crc = crc32(crc, ds.labels.data(), static_cast<uInt>(ds.labels.size()));
        os.write(reinterpret_cast<const char*>(ds.labels.data()),
                 static_cast<std::streamsize>(ds.labels.size()));
    }
    binio::put_u32(os, static_cast<std::uint32_t>(crc));
    if (!os) throw io_error("write failed for " + path);
}

inline DatasetContainer read_container(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open " + path);
    char magic[4];
    binio::read_exact(is, magic, 4, "dataset container");
    if (std::memcmp(magic, kDatasetMagic, 4) != 0) {
        throw format_error("dataset container: bad magic bytes");
    }
    const std::uint32_t version = binio::get_u32(is, "dataset container");
    if (version != kDatasetVersion) {
        throw format_error("dataset container: unsupported version " + std::to_string(version));
    }
    const std::uint32_t n = binio::get_u32(is, "dataset container");
    const std::uint32_t side = binio::get_u32(is, "dataset container");
    const std::uint32_t channels = binio::get_u32(is, "dataset container");
    if (channels != 3) {
        throw format_error("dataset container: expected 3 channels, got " +
                           std::to_string(channels));
    }

    const std::size_t total = static_cast<std::size_t>(n) * side * side * 3;
    std::vector<float> pixels(total);
    uLong crc = crc32(0L, Z_NULL, 0);
    const std::size_t chunk = 1 << 20;
    std::vector<unsigned char> buf;
    for (std::size_t at = 0; at < total; at += chunk) {
        const std::size_t c = std::min(chunk, total - at);
        buf.resize(c * 4);
        binio::read_exact(is, reinterpret_cast<char*>(buf.data()), c * 4,
                          "dataset container payload");
        crc = crc32(crc, buf.data(), static_cast<uInt>(buf.size()));
        if (binio::host_is_little_endian()) {
            std::memcpy(pixels.data() + at, buf.data(), c * 4);
        } else {
            for (std::size_t i = 0; i < c; ++i) {
                const std::uint32_t bits = static_cast<std::uint32_t>(buf[i * 4]) |
                                           (static_cast<std::uint32_t>(buf[i * 4 + 1]) << 8) |
                                           (static_cast<std::uint32_t>(buf[i * 4 + 2]) << 16) |
                                           (static_cast<std::uint32_t>(buf[i * 4 + 3]) << 24);
                std::memcpy(pixels.data() + at + i, &bits, 4);
            }
        }
    }
    std::vector<std::uint8_t> labels(n);
    if (n > 0) {
        binio::read_exact(is, reinterpret_cast<char*>(labels.data()), n,
                          "dataset container labels");
        crc = crc32(crc, labels.data(), static_cast<uInt>(labels.size()));
    }
    const std::uint32_t stored = binio::get_u32(is, "dataset container checksum");
    if (stored != static_cast<std::uint32_t>(crc)) {
        throw corruption_error("dataset container: CRC mismatch");
    }
    binio::require_at_end(is, "dataset container");

    DatasetContainer ds{Tensor<float>({n, side, side, 3}, std::move(pixels)), std::move(labels),
                        path};
    for (const float v : ds.images.values()) {
        if (!(v >= 0.0f && v <= 1.0f)) {
            throw format_error("dataset container: pixel value outside [0,1]");
        }
    }
    for (const std::uint8_t y : ds.labels) {
        if (y > 1) throw format_error("dataset container: label outside {0,1}");
    }
    return ds;
}

// Batch assembly for the training loop: selected images cast to the
// training precision, and one-hot rows for the matching labels.
template <typename T>
Tensor<T> gather_images(const DatasetContainer& ds, std::span<const std::size_t> indices) {
    const std::size_t side = ds.side();
    const std::size_t per = side * side * 3;
    Tensor<T> out({indices.size(), side, side, 3});
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const float* src = ds.images.data() + indices[b] * per;
        T* dst = out.data() + b * per;
        for (std::size_t i = 0; i < per; ++i) dst[i] = static_cast<T>(src[i]);
    }
    return out;
}

template <typename T>
Tensor<T> one_hot_labels(const DatasetContainer& ds, std::span<const std::size_t> indices,
                         std::size_t classes) {
    Tensor<T> out({indices.size(), classes});
    for (std::size_t b = 0; b < indices.size(); ++b) {
        out(b, static_cast<std::size_t>(ds.labels[indices[b]])) = T{1};
    }
    return out;
}

}  // namespace secnn
