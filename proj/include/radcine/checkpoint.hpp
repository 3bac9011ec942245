#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "radcine/errors.hpp"
#include "radcine/unet.hpp"

namespace radcine {

// Weight checkpoint: magic "RADW", one version byte, u32-LE manifest length,
// JSON manifest (config, tensor names/shapes/byte offsets), then the raw
// little-endian float32 buffers. Offsets are relative to the payload start.
inline void save_checkpoint(const std::string& path, const ParamSet& ps) {
    nlohmann::json manifest;
    manifest["config"] = {{"n_f", ps.cfg.n_f},
                          {"stages", ps.cfg.stages},
                          {"convs_per_stage", ps.cfg.convs_per_stage},
                          {"kernel", ps.cfg.kernel},
                          {"leaky_slope", ps.cfg.leaky_slope},
                          {"in_channels", ps.cfg.in_channels},
                          {"out_channels", ps.cfg.out_channels}};
    nlohmann::json tensors = nlohmann::json::array();
    uint64_t offset = 0;
    auto add = [&](const std::string& name, const Tensor& t) {
        tensors.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
        offset += static_cast<uint64_t>(t.numel()) * sizeof(float);
    };
    for (const auto& [name, t] : ps.weights) add(name, t);
    add("lambda_raw", ps.lambda_raw);
    manifest["tensors"] = tensors;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    f.write("RADW", 4);
    const uint8_t version = 1;
    f.write(reinterpret_cast<const char*>(&version), 1);
    const std::string m = manifest.dump();
    const uint32_t mlen = static_cast<uint32_t>(m.size());
    f.write(reinterpret_cast<const char*>(&mlen), 4);
    f.write(m.data(), static_cast<std::streamsize>(m.size()));
    for (const auto& [name, t] : ps.weights)
        f.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(float)));
    f.write(reinterpret_cast<const char*>(ps.lambda_raw.data()),
            static_cast<std::streamsize>(sizeof(float)));
    if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline ParamSet load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MissingArtifactError("load_checkpoint: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "RADW", 4) != 0)
        throw FormatError("load_checkpoint: bad magic in " + path);
    uint8_t version = 0;
    f.read(reinterpret_cast<char*>(&version), 1);
    if (version != 1) throw FormatError("load_checkpoint: unsupported version");
    uint32_t mlen = 0;
    f.read(reinterpret_cast<char*>(&mlen), 4);
    if (!f || mlen == 0 || mlen > (1u << 24)) throw FormatError("load_checkpoint: bad manifest");
    std::string m(mlen, '\0');
    f.read(m.data(), mlen);
    nlohmann::json manifest = nlohmann::json::parse(m);

    UNetConfig cfg;
    const auto& c = manifest["config"];
    cfg.n_f = c["n_f"];
    cfg.stages = c["stages"];
    cfg.convs_per_stage = c["convs_per_stage"];
    cfg.kernel = c["kernel"];
    cfg.leaky_slope = c["leaky_slope"];
    cfg.in_channels = c["in_channels"];
    cfg.out_channels = c["out_channels"];

    ParamSet ps = make_param_set(cfg, 0);  // shapes only; data overwritten below
    const std::streampos payload_start = f.tellg();
    for (const auto& entry : manifest["tensors"]) {
        const std::string name = entry["name"];
        const Shape shape = entry["shape"].get<Shape>();
        const uint64_t offset = entry["offset"];
        Tensor* dst = nullptr;
        if (name == "lambda_raw") {
            dst = &ps.lambda_raw;
        } else {
            dst = &ps.find(name);
        }
        if (dst->shape() != shape)
            throw FormatError("load_checkpoint: shape mismatch for " + name);
        f.seekg(payload_start + static_cast<std::streamoff>(offset));
        f.read(reinterpret_cast<char*>(dst->mutable_data()),
               static_cast<std::streamsize>(dst->numel() * sizeof(float)));
        if (!f) throw FormatError("load_checkpoint: truncated payload in " + path);
    }
    return ps;
}

}  // namespace radcine
