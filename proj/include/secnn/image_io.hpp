#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "secnn/dataset.hpp"
#include "secnn/tensor.hpp"

namespace secnn {

// Decodes a PNG to an [H,W,3] tensor of raw byte values (0..255).
inline Tensor<float> read_png(const std::string& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw io_error("cannot decode " + path + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw io_error("cannot decode " + path + ": " + image.message);
    }
    const std::size_t height = image.height, width = image.width;
    Tensor<float> out({height, width, 3});
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(buffer[i]);
    return out;
}

// Writes an [H,W,3] tensor with values in [0,1] as an 8-bit RGB PNG.
inline void write_png(const std::string& path, const Tensor<float>& pixels) {
    require_rank(pixels, 3, "write_png pixels");
    if (pixels.extent(2) != 3) {
        throw argument_error("write_png: expected 3 channels, got " +
                             shape_to_string(pixels.shape()));
    }
    std::vector<std::uint8_t> buffer(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const float v = std::clamp(pixels[i], 0.0f, 1.0f);
        buffer[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(pixels.extent(1));
    image.height = static_cast<png_uint_32>(pixels.extent(0));
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
        throw io_error("cannot write " + path + ": " + image.message);
    }
}

// Bilinear resize with half-pixel sample centers: the source coordinate for
// output index i is (i + 0.5) * in/out - 0.5, clamped at the borders. An
// identity resize reproduces the input exactly.
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& image, std::size_t target) {
    require_rank(image, 3, "resize input");
    const std::size_t height = image.extent(0), width = image.extent(1),
                      channels = image.extent(2);
    if (target < 1) throw argument_error("resize: target side must be >= 1");
    if (height < 2 || width < 2) {
        throw argument_error("resize: input must be at least 2x2, got " +
                             shape_to_string(image.shape()));
    }

    struct AxisSample {
        std::size_t lo, hi;
        T frac;
    };
    auto plan_axis = [&](std::size_t in) {
        std::vector<AxisSample> plan(target);
        const double scale = static_cast<double>(in) / static_cast<double>(target);
        for (std::size_t i = 0; i < target; ++i) {
            double pos = (static_cast<double>(i) + 0.5) * scale - 0.5;
            pos = std::clamp(pos, 0.0, static_cast<double>(in - 1));
            const std::size_t lo = static_cast<std::size_t>(pos);
            plan[i] = {lo, std::min(lo + 1, in - 1), static_cast<T>(pos - static_cast<double>(lo))};
        }
        return plan;
    };
    const auto rows = plan_axis(height);
    const auto cols = plan_axis(width);

    Tensor<T> out({target, target, channels});
    const T* src = image.data();
    T* dst = out.data();
    for (std::size_t i = 0; i < target; ++i) {
        const auto& r = rows[i];
        for (std::size_t j = 0; j < target; ++j) {
            const auto& c = cols[j];
            const T* p00 = src + (r.lo * width + c.lo) * channels;
            const T* p01 = src + (r.lo * width + c.hi) * channels;
            const T* p10 = src + (r.hi * width + c.lo) * channels;
            const T* p11 = src + (r.hi * width + c.hi) * channels;
            T* o = dst + (i * target + j) * channels;
            for (std::size_t ch = 0; ch < channels; ++ch) {
                const T top = p00[ch] + (p01[ch] - p00[ch]) * c.frac;
                const T bot = p10[ch] + (p11[ch] - p10[ch]) * c.frac;
                o[ch] = top + (bot - top) * r.frac;
            }
        }
    }
    return out;
}

struct IngestResult {
    DatasetContainer dataset;
    std::vector<std::pair<std::string, std::string>> skipped;  // path, reason
    std::size_t fake_count = 0;
    std::size_t real_count = 0;
};

// Reads <root>/fake and <root>/real, resizes every decodable image to
// side x side, rescales byte values by 1/255 and labels by subdirectory.
// Files are visited in lexicographic order; decode failures are collected,
// an entirely undecodable class is fatal.
inline IngestResult ingest_directory(const std::string& root, std::size_t side) {
    namespace fs = std::filesystem;
    if (side < 1) throw argument_error("ingest: target side must be >= 1");
    const std::array<std::pair<std::string, std::uint8_t>, 2> classes = {
        std::pair<std::string, std::uint8_t>{"fake", 0},
        std::pair<std::string, std::uint8_t>{"real", 1}};

    IngestResult result;
    std::vector<float> pixels;
    std::vector<std::uint8_t> labels;
    const std::size_t per = side * side * 3;

    for (const auto& [sub, label] : classes) {
        const fs::path dir = fs::path(root) / sub;
        if (!fs::is_directory(dir)) {
            throw io_error("ingest: missing class directory " + dir.string());
        }
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end(),
                  [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
        std::size_t loaded = 0;
        for (const auto& file : files) {
            Tensor<float> raw;
            try {
                raw = read_png(file.string());
            } catch (const error& e) {
                result.skipped.emplace_back(file.string(), e.what());
                continue;
            }
            Tensor<float> resized = resize_bilinear(raw, side);
            const std::size_t at = pixels.size();
            pixels.resize(at + per);
            for (std::size_t i = 0; i < per; ++i) pixels[at + i] = resized[i] / 255.0f;
            labels.push_back(label);
            ++loaded;
        }
        if (loaded == 0) {
            throw io_error("ingest: class '" + sub + "' has no decodable images");
        }
        (label == 0 ? result.fake_count : result.real_count) = loaded;
    }

    const std::size_t n = labels.size();
    result.dataset = DatasetContainer{Tensor<float>({n, side, side, 3}, std::move(pixels)),
                                      std::move(labels), root};
    return result;
}

}  // namespace secnn
