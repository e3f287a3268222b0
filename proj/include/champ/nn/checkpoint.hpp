#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "champ/nn/serialize.hpp"

namespace champ::nn {

// Checkpoint: little-endian "CHMP", u32 version, u32 K, K float32 values.
// The model spec travels in a JSON sidecar at <path>.json.

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const Model& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write("CHMP", 4);
    auto write_u32 = [&](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    write_u32(kCheckpointVersion);
    write_u32(static_cast<std::uint32_t>(m.params.size()));
    for (double v : m.params) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_u32(bits);
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
    out.close();

    nlohmann::json j = m.spec;
    std::ofstream side(path + ".json");
    if (!side) throw std::runtime_error("cannot write checkpoint sidecar: " + path + ".json");
    side << j.dump(2) << "\n";
}

inline Model load_checkpoint(const std::string& path) {
    std::ifstream side(path + ".json");
    if (!side) throw std::runtime_error("missing checkpoint sidecar: " + path + ".json");
    nlohmann::json j;
    side >> j;
    ModelSpec spec = j.get<ModelSpec>();

    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "CHMP", 4) != 0)
        throw std::runtime_error("bad checkpoint magic in " + path);
    auto read_u32 = [&]() {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in) throw std::runtime_error("truncated checkpoint: " + path);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) |
               (static_cast<std::uint32_t>(b[3]) << 24);
    };
    const std::uint32_t version = read_u32();
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t k = read_u32();
    if (static_cast<std::int64_t>(k) != spec.param_count())
        throw std::runtime_error("checkpoint K=" + std::to_string(k) +
                                 " does not match spec parameter count " +
                                 std::to_string(spec.param_count()));
    ParamVector params(k);
    for (std::uint32_t i = 0; i < k; ++i) {
        const std::uint32_t bits = read_u32();
        float f;
        std::memcpy(&f, &bits, 4);
        params[i] = static_cast<double>(f);
    }
    return {std::move(spec), std::move(params)};
}

}  // namespace champ::nn
