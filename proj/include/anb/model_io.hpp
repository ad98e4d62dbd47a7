#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "anb/model.hpp"

// On-disk model format (.anb):
//   bytes 0..7   magic "ANBMODL1"
//   bytes 8..15  manifest byte length, little-endian u64
//   manifest     UTF-8 JSON: name, input_shape, class_count, nodes with
//                hyperparameters and parameter descriptors (name, shape,
//                byte offset into the blob)
//   blob         raw little-endian float32 values, parameters concatenated
//                in manifest order

namespace anb {

namespace detail {

constexpr char kModelMagic[8] = {'A', 'N', 'B', 'M', 'O', 'D', 'L', '1'};

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int s = 0; s < 64; s += 8)
        out.push_back(static_cast<char>((v >> s) & 0xFF));
}

inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int s = 0; s < 8; ++s)
        v |= static_cast<std::uint64_t>(p[s]) << (8 * s);
    return v;
}

inline void put_f32(std::string& out, float f) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
    for (int s = 0; s < 32; s += 8)
        out.push_back(static_cast<char>((bits >> s) & 0xFF));
}

inline float get_f32(const unsigned char* p) {
    std::uint32_t bits = 0;
    for (int s = 0; s < 4; ++s)
        bits |= static_cast<std::uint32_t>(p[s]) << (8 * s);
    return std::bit_cast<float>(bits);
}

/// Write a whole file through a sibling temp file and a final rename, so a
/// failed save never leaves a partial file at the destination.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& payload) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out.is_open())
            throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(payload.data(),
                  static_cast<std::streamsize>(payload.size()));
        out.flush();
        if (!out.good()) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError("short write to '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::error_code ec2;
        std::filesystem::remove(tmp, ec2);
        throw IoError("cannot move '" + tmp.string() + "' to '" +
                      path.string() + "': " + ec.message());
    }
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) throw IoError("cannot open '" + path.string() + "'");
    std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>()};
    if (in.bad()) throw IoError("read failed on '" + path.string() + "'");
    return bytes;
}

inline LayerKind kind_from_name(const std::string& s) {
    for (LayerKind k :
         {LayerKind::Conv, LayerKind::Dense, LayerKind::BatchNorm,
          LayerKind::ReLU, LayerKind::MaxPool, LayerKind::GlobalAvgPool,
          LayerKind::ResidualAdd, LayerKind::Softmax})
        if (s == kind_name(k)) return k;
    throw FormatError("unknown node kind '" + s + "'");
}

}  // namespace detail

inline void save_model(const ModelGraph& model,
                       const std::filesystem::path& path) {
    validate_model(model);

    nlohmann::json manifest;
    manifest["format"] = 1;
    manifest["name"] = model.name;
    manifest["input_shape"] = model.input_shape;
    manifest["class_count"] = model.class_count;

    std::string blob;
    std::uint64_t offset = 0;
    nlohmann::json jnodes = nlohmann::json::array();
    for (const Node& n : model.nodes) {
        nlohmann::json jn;
        jn["id"] = n.id;
        jn["kind"] = kind_name(n.kind);
        switch (n.kind) {
            case LayerKind::Conv:
                jn["stride"] = n.stride;
                jn["padding"] = n.padding;
                break;
            case LayerKind::MaxPool:
                jn["kernel"] = n.pool_k;
                jn["stride"] = n.pool_stride;
                break;
            case LayerKind::BatchNorm: jn["epsilon"] = n.epsilon; break;
            case LayerKind::ResidualAdd: jn["source"] = n.residual_source; break;
            default: break;
        }
        nlohmann::json jparams = nlohmann::json::array();
        for (const std::string& pname : param_order(n.kind)) {
            if (!n.has_param(pname)) continue;
            const Tensor& t = n.params.at(pname);
            nlohmann::json jp;
            jp["name"] = pname;
            jp["shape"] = t.shape();
            jp["offset"] = offset;
            jparams.push_back(std::move(jp));
            for (float v : t.data()) detail::put_f32(blob, v);
            offset += static_cast<std::uint64_t>(t.numel()) * 4;
        }
        if (!jparams.empty()) jn["params"] = std::move(jparams);
        jnodes.push_back(std::move(jn));
    }
    manifest["nodes"] = std::move(jnodes);

    const std::string mtext = manifest.dump();
    std::string payload;
    payload.reserve(16 + mtext.size() + blob.size());
    payload.append(detail::kModelMagic, 8);
    detail::put_u64(payload, mtext.size());
    payload += mtext;
    payload += blob;
    detail::atomic_write_file(path, payload);
}

inline ModelGraph load_model(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = detail::read_file(path);
    if (bytes.size() < 16)
        throw TruncatedBlobError("'" + path.string() + "' header", 16,
                                 bytes.size());
    if (!std::equal(detail::kModelMagic, detail::kModelMagic + 8, bytes.begin()))
        throw MagicMismatchError("'" + path.string() +
                                 "': bad magic at byte 0, not an .anb model");
    const std::uint64_t mlen = detail::get_u64(bytes.data() + 8);
    if (16 + mlen > bytes.size())
        throw TruncatedBlobError("'" + path.string() + "' manifest",
                                 16 + mlen, bytes.size());

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(bytes.begin() + 16,
                                         bytes.begin() + 16 + mlen);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path.string() + "': manifest is not valid JSON (" +
                          e.what() + ")");
    }

    ModelGraph model;
    std::uint64_t expected_offset = 0;
    try {
        if (manifest.at("format").get<int>() != 1)
            throw VersionError("'" + path.string() + "': manifest format " +
                               manifest["format"].dump() +
                               " unsupported (reader supports 1)");
        model.name = manifest.at("name").get<std::string>();
        model.input_shape =
            manifest.at("input_shape").get<std::vector<std::int64_t>>();
        model.class_count = manifest.at("class_count").get<int>();
        for (const auto& jn : manifest.at("nodes")) {
            Node n;
            n.id = jn.at("id").get<int>();
            n.kind = detail::kind_from_name(jn.at("kind").get<std::string>());
            switch (n.kind) {
                case LayerKind::Conv:
                    n.stride = jn.at("stride").get<int>();
                    n.padding = jn.at("padding").get<int>();
                    break;
                case LayerKind::MaxPool:
                    n.pool_k = jn.at("kernel").get<int>();
                    n.pool_stride = jn.at("stride").get<int>();
                    break;
                case LayerKind::BatchNorm:
                    n.epsilon = jn.at("epsilon").get<float>();
                    break;
                case LayerKind::ResidualAdd:
                    n.residual_source = jn.at("source").get<int>();
                    break;
                default: break;
            }
            if (jn.contains("params")) {
                for (const auto& jp : jn.at("params")) {
                    const auto pname = jp.at("name").get<std::string>();
                    const auto shape =
                        jp.at("shape").get<std::vector<std::int64_t>>();
                    const auto off = jp.at("offset").get<std::uint64_t>();
                    if (off != expected_offset)
                        throw FormatError(
                            "'" + path.string() + "': parameter '" + pname +
                            "' of node " + std::to_string(n.id) +
                            " declares offset " + std::to_string(off) +
                            " but blob order implies " +
                            std::to_string(expected_offset));
                    Tensor t(shape);
                    expected_offset +=
                        static_cast<std::uint64_t>(t.numel()) * 4;
                    n.params.emplace(pname, std::move(t));
                }
            }
            model.nodes.push_back(std::move(n));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path.string() + "': manifest field error: " +
                          e.what());
    }

    const std::uint64_t blob_start = 16 + mlen;
    const std::uint64_t blob_actual = bytes.size() - blob_start;
    if (blob_actual < expected_offset)
        throw TruncatedBlobError("'" + path.string() + "' weight blob",
                                 expected_offset, blob_actual);
    if (blob_actual > expected_offset)
        throw FormatError("'" + path.string() + "': " +
                          std::to_string(blob_actual - expected_offset) +
                          " trailing bytes after weight blob");

    const unsigned char* blob = bytes.data() + blob_start;
    for (Node& n : model.nodes)
        for (const std::string& pname : param_order(n.kind)) {
            if (!n.has_param(pname)) continue;
            Tensor& t = n.params.at(pname);
            for (std::int64_t i = 0; i < t.numel(); ++i) {
                t[static_cast<std::size_t>(i)] = detail::get_f32(blob);
                blob += 4;
            }
        }

    validate_model(model);
    return model;
}

}  // namespace anb
