#pragma once

#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "radcine/errors.hpp"

namespace radcine::io {

using json = nlohmann::json;

// All binary artifacts share one container: a little-endian u32 header
// length, the UTF-8 JSON header, then a raw little-endian float32 payload.
// The exact layouts are documented in FORMATS.md.

inline void write_blob(const std::string& path, const json& header,
                       const std::vector<float>& payload) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_blob: cannot open " + path);
    const std::string h = header.dump();
    const uint32_t len = static_cast<uint32_t>(h.size());
    f.write(reinterpret_cast<const char*>(&len), 4);
    f.write(h.data(), static_cast<std::streamsize>(h.size()));
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!f) throw std::runtime_error("write_blob: write failed for " + path);
}

inline json read_blob(const std::string& path, std::vector<float>& payload) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MissingArtifactError("read_blob: cannot open " + path);
    uint32_t len = 0;
    f.read(reinterpret_cast<char*>(&len), 4);
    if (!f || len == 0 || len > (1u << 24)) throw FormatError("read_blob: bad header in " + path);
    std::string h(len, '\0');
    f.read(h.data(), len);
    json header = json::parse(h, nullptr, false);
    if (header.is_discarded()) throw FormatError("read_blob: invalid JSON header in " + path);
    const auto pos = f.tellg();
    f.seekg(0, std::ios::end);
    const auto end = f.tellg();
    f.seekg(pos);
    const size_t bytes = static_cast<size_t>(end - pos);
    if (bytes % sizeof(float) != 0) throw FormatError("read_blob: truncated payload in " + path);
    payload.resize(bytes / sizeof(float));
    f.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(bytes));
    if (!f) throw std::runtime_error("read_blob: read failed for " + path);
    return header;
}

// --- CSV ------------------------------------------------------------------

inline void write_csv(const std::string& path, const std::string& header_line,
                      const std::vector<std::string>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_csv: cannot open " + path);
    f << header_line << "\n";
    for (const auto& r : rows) f << r << "\n";
}

// --- PNG (8-bit grayscale, zlib-compressed) ---------------------------------

namespace detail {

inline void png_chunk(std::ofstream& f, const char type[4], const std::vector<uint8_t>& data) {
    auto be32 = [](uint32_t v) {
        return std::array<uint8_t, 4>{static_cast<uint8_t>(v >> 24), static_cast<uint8_t>(v >> 16),
                                      static_cast<uint8_t>(v >> 8), static_cast<uint8_t>(v)};
    };
    auto len = be32(static_cast<uint32_t>(data.size()));
    f.write(reinterpret_cast<const char*>(len.data()), 4);
    f.write(type, 4);
    if (!data.empty()) f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
    auto c = be32(crc);
    f.write(reinterpret_cast<const char*>(c.data()), 4);
}

}  // namespace detail

inline void write_png_gray8(const std::string& path, const uint8_t* pixels, int w, int h) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_png_gray8: cannot open " + path);
    static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    f.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<uint8_t> ihdr(13);
    auto put32 = [&](int off, uint32_t v) {
        ihdr[static_cast<size_t>(off)] = static_cast<uint8_t>(v >> 24);
        ihdr[static_cast<size_t>(off + 1)] = static_cast<uint8_t>(v >> 16);
        ihdr[static_cast<size_t>(off + 2)] = static_cast<uint8_t>(v >> 8);
        ihdr[static_cast<size_t>(off + 3)] = static_cast<uint8_t>(v);
    };
    put32(0, static_cast<uint32_t>(w));
    put32(4, static_cast<uint32_t>(h));
    ihdr[8] = 8;   // bit depth
    ihdr[9] = 0;   // grayscale
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    detail::png_chunk(f, "IHDR", ihdr);

    std::vector<uint8_t> raw(static_cast<size_t>(h) * (static_cast<size_t>(w) + 1));
    for (int y = 0; y < h; ++y) {
        raw[static_cast<size_t>(y) * (w + 1)] = 0;  // filter: none
        std::memcpy(raw.data() + static_cast<size_t>(y) * (w + 1) + 1,
                    pixels + static_cast<size_t>(y) * w, static_cast<size_t>(w));
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> comp(bound);
    if (compress2(comp.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw std::runtime_error("write_png_gray8: deflate failed");
    comp.resize(bound);
    detail::png_chunk(f, "IDAT", comp);
    detail::png_chunk(f, "IEND", {});
}

}  // namespace radcine::io
