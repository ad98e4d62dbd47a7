#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "anb/model_io.hpp"
#include "anb/tensor.hpp"

// On-disk dataset format (.and):
//   bytes 0..7  magic "ANBDATA1"
//   five little-endian u64: sample count M, channels C, height H, width W,
//   class count
//   M*C*H*W little-endian float32 inputs (NCHW)
//   M little-endian u32 labels, each in [0, class_count)

namespace anb {

struct Dataset {
    Tensor inputs{std::vector<std::int64_t>{1, 1, 1, 1}};  // [M, C, H, W]
    std::vector<int> labels;
    int class_count = 0;
    std::string name;  // in-memory only, not part of the file format

    std::int64_t size() const { return inputs.dim(0); }
};

namespace detail {

constexpr char kDataMagic[8] = {'A', 'N', 'B', 'D', 'A', 'T', 'A', '1'};

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8)
        out.push_back(static_cast<char>((v >> s) & 0xFF));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int s = 0; s < 4; ++s)
        v |= static_cast<std::uint32_t>(p[s]) << (8 * s);
    return v;
}

}  // namespace detail

inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    if (ds.inputs.rank() != 4)
        throw ShapeError("dataset inputs must be [M, C, H, W], got " +
                         shape_str(ds.inputs.shape()));
    if (static_cast<std::int64_t>(ds.labels.size()) != ds.size())
        throw InvalidArgumentError(
            "dataset has " + std::to_string(ds.size()) + " samples but " +
            std::to_string(ds.labels.size()) + " labels");
    if (ds.class_count < 2)
        throw InvalidArgumentError("dataset class_count must be at least 2, got " +
                                   std::to_string(ds.class_count));
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
        if (ds.labels[i] < 0 || ds.labels[i] >= ds.class_count)
            throw InvalidArgumentError(
                "label " + std::to_string(ds.labels[i]) + " at sample " +
                std::to_string(i) + " outside [0, " +
                std::to_string(ds.class_count) + ")");

    std::string payload;
    payload.reserve(48 + ds.inputs.data().size() * 4 + ds.labels.size() * 4);
    payload.append(detail::kDataMagic, 8);
    detail::put_u64(payload, static_cast<std::uint64_t>(ds.inputs.dim(0)));
    detail::put_u64(payload, static_cast<std::uint64_t>(ds.inputs.dim(1)));
    detail::put_u64(payload, static_cast<std::uint64_t>(ds.inputs.dim(2)));
    detail::put_u64(payload, static_cast<std::uint64_t>(ds.inputs.dim(3)));
    detail::put_u64(payload, static_cast<std::uint64_t>(ds.class_count));
    for (float v : ds.inputs.data()) detail::put_f32(payload, v);
    for (int lab : ds.labels)
        detail::put_u32(payload, static_cast<std::uint32_t>(lab));
    detail::atomic_write_file(path, payload);
}

inline Dataset load_dataset(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = detail::read_file(path);
    if (bytes.size() < 48)
        throw TruncatedBlobError("'" + path.string() + "' header", 48,
                                 bytes.size());
    if (!std::equal(detail::kDataMagic, detail::kDataMagic + 8, bytes.begin()))
        throw MagicMismatchError("'" + path.string() +
                                 "': bad magic at byte 0, not an .and dataset");

    const std::uint64_t m = detail::get_u64(bytes.data() + 8);
    const std::uint64_t c = detail::get_u64(bytes.data() + 16);
    const std::uint64_t h = detail::get_u64(bytes.data() + 24);
    const std::uint64_t w = detail::get_u64(bytes.data() + 32);
    const std::uint64_t classes = detail::get_u64(bytes.data() + 40);
    if (m == 0 || c == 0 || h == 0 || w == 0)
        throw FormatError("'" + path.string() + "': zero dimension in header (" +
                          std::to_string(m) + "x" + std::to_string(c) + "x" +
                          std::to_string(h) + "x" + std::to_string(w) + ")");
    if (classes < 2)
        throw FormatError("'" + path.string() + "': class count " +
                          std::to_string(classes) + " below 2");

    const std::uint64_t float_count = m * c * h * w;
    const std::uint64_t expected = 48 + float_count * 4 + m * 4;
    if (bytes.size() != expected) {
        if (bytes.size() < expected)
            throw TruncatedBlobError("'" + path.string() + "' payload", expected,
                                     bytes.size());
        throw FormatError("'" + path.string() + "': " +
                          std::to_string(bytes.size() - expected) +
                          " trailing bytes after payload");
    }

    Dataset ds;
    ds.name = path.stem().string();
    ds.class_count = static_cast<int>(classes);
    ds.inputs = Tensor({static_cast<std::int64_t>(m), static_cast<std::int64_t>(c),
                        static_cast<std::int64_t>(h), static_cast<std::int64_t>(w)});
    const unsigned char* p = bytes.data() + 48;
    for (std::uint64_t i = 0; i < float_count; ++i) {
        ds.inputs[static_cast<std::size_t>(i)] = detail::get_f32(p);
        p += 4;
    }
    ds.labels.resize(m);
    for (std::uint64_t i = 0; i < m; ++i) {
        const std::uint32_t lab = detail::get_u32(p);
        p += 4;
        if (lab >= classes)
            throw FormatError("'" + path.string() + "': label " +
                              std::to_string(lab) + " at sample " +
                              std::to_string(i) + " outside [0, " +
                              std::to_string(classes) + ")");
        ds.labels[static_cast<std::size_t>(i)] = static_cast<int>(lab);
    }
    return ds;
}

}  // namespace anb
