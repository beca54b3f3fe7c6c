#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "secnn/binio.hpp"
#include "secnn/model.hpp"

// Weight archive, bit-exact layout:
//
//   magic   "SEW1"                       4 bytes
//   version u32 LE = 1
//   count   u32 LE                       number of parameter records
//   per record:
//     u16 LE name length, name bytes
//     u8 rank, u32 LE extent per axis
//   payload: float32 LE per record, concatenated in manifest order
//
// Loading checks the manifest against the target model and rejects any
// disagreement before touching the payload.

namespace secnn {

inline constexpr char kWeightsMagic[4] = {'S', 'E', 'W', '1'};
inline constexpr std::uint32_t kWeightsVersion = 1;

template <typename T>
std::size_t weights_header_bytes(const SequentialModel<T>& model) {
    std::size_t bytes = 4 + 4 + 4;
    for (const auto& slot : model.params()) {
        bytes += 2 + slot.name.size() + 1 + 4 * slot.value->rank();
    }
    return bytes;
}

// 4 bytes per parameter.
template <typename T>
std::size_t weights_payload_bytes(const SequentialModel<T>& model) {
    return 4 * model.param_count();
}

template <typename T>
std::size_t serialized_size_bytes(const SequentialModel<T>& model) {
    return weights_header_bytes(model) + weights_payload_bytes(model);
}

template <typename T>
void save_weights(const SequentialModel<T>& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw io_error("cannot open " + path + " for writing");
    os.write(kWeightsMagic, 4);
    binio::put_u32(os, kWeightsVersion);
    binio::put_u32(os, static_cast<std::uint32_t>(model.params().size()));
    for (const auto& slot : model.params()) {
        binio::put_u16(os, static_cast<std::uint16_t>(slot.name.size()));
        os.write(slot.name.data(), static_cast<std::streamsize>(slot.name.size()));
        binio::put_u8(os, static_cast<std::uint8_t>(slot.value->rank()));
        for (std::size_t e : slot.value->shape()) {
            binio::put_u32(os, static_cast<std::uint32_t>(e));
        }
    }
    std::vector<float> buffer;
    for (const auto& slot : model.params()) {
        buffer.resize(slot.value->size());
        for (std::size_t i = 0; i < buffer.size(); ++i) {
            buffer[i] = static_cast<float>((*slot.value)[i]);
        }
        binio::put_f32_block(os, buffer.data(), buffer.size());
    }
    if (!os) throw io_error("write failed for " + path);
}

template <typename T>
void load_weights(SequentialModel<T>& model, const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open " + path);
    char magic[4];
    binio::read_exact(is, magic, 4, "weight archive");
    if (std::memcmp(magic, kWeightsMagic, 4) != 0) {
        throw format_error("weight archive: bad magic bytes");
    }
    const std::uint32_t version = binio::get_u32(is, "weight archive");
    if (version != kWeightsVersion) {
        throw format_error("weight archive: unsupported version " + std::to_string(version));
    }
    const std::uint32_t count = binio::get_u32(is, "weight archive");
    auto& slots = model.params();
    if (count != slots.size()) {
        throw incompatible_archive_error("weight archive holds " + std::to_string(count) +
                                         " tensors, model expects " +
                                         std::to_string(slots.size()));
    }
    for (const auto& slot : slots) {
        const std::uint16_t name_len = binio::get_u16(is, "weight archive");
        std::string name(name_len, '\0');
        binio::read_exact(is, name.data(), name_len, "weight archive");
        const std::uint8_t rank = binio::get_u8(is, "weight archive");
        std::vector<std::size_t> extents(rank);
        for (auto& e : extents) e = binio::get_u32(is, "weight archive");
        if (name != slot.name || extents != slot.value->shape()) {
            throw incompatible_archive_error("weight archive tensor '" + name +
                                             "' does not match model tensor '" + slot.name +
                                             "' " + shape_to_string(slot.value->shape()));
        }
    }
    std::vector<float> buffer;
    for (auto& slot : slots) {
        buffer.resize(slot.value->size());
        binio::get_f32_block(is, buffer.data(), buffer.size(), "weight archive payload");
        for (std::size_t i = 0; i < buffer.size(); ++i) {
            (*slot.value)[i] = static_cast<T>(buffer[i]);
        }
    }
    binio::require_at_end(is, "weight archive");
}

}  // namespace secnn
