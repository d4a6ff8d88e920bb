#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempotrack/model.hpp"
#include "tempotrack/tensor.hpp"

namespace tempotrack {

// Tensor archive, a single file:
//   magic "TARC1"
//   u32 little-endian manifest byte length
//   UTF-8 JSON manifest: [{name, shape, dtype:"f32", byte_offset}, ...]
//   payload blob of little-endian row-major float32 data
// byte_offset is relative to the payload start. Round trips are bit exact.

static_assert(std::endian::native == std::endian::little,
              "archive payload is little-endian; big-endian hosts are unsupported");

inline constexpr char kArchiveMagic[5] = {'T', 'A', 'R', 'C', '1'};

inline void save_archive(const ModelParams& model, const std::string& path) {
    nlohmann::json manifest = nlohmann::json::array();
    std::vector<std::uint8_t> blob;
    for_each_tensor(model, [&](const std::string& name, const Tensor& t) {
        nlohmann::json entry;
        entry["name"] = name;
        entry["shape"] = t.shape();
        entry["dtype"] = "f32";
        entry["byte_offset"] = blob.size();
        manifest.push_back(entry);
        const std::size_t bytes = t.size() * sizeof(float);
        const std::size_t off = blob.size();
        blob.resize(off + bytes);
        std::memcpy(blob.data() + off, t.data(), bytes);
    });

    const std::string mtext = manifest.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArchiveError("archive: cannot write " + path);
    out.write(kArchiveMagic, sizeof(kArchiveMagic));
    const std::uint32_t mlen = static_cast<std::uint32_t>(mtext.size());
    const std::uint8_t lenb[4] = {
        static_cast<std::uint8_t>(mlen & 0xff), static_cast<std::uint8_t>((mlen >> 8) & 0xff),
        static_cast<std::uint8_t>((mlen >> 16) & 0xff),
        static_cast<std::uint8_t>((mlen >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(lenb), 4);
    out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
    if (!out) throw ArchiveError("archive: short write to " + path);
}

// Fills an already-built model in place. The archive must cover exactly the
// model's tensors: unknown or missing names are errors that list the names.
inline void load_archive_into(const std::string& path, ModelParams& model) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArchiveError("archive: cannot open " + path);
    std::vector<char> file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (file.size() < sizeof(kArchiveMagic) + 4 ||
        std::memcmp(file.data(), kArchiveMagic, sizeof(kArchiveMagic)) != 0) {
        throw ArchiveError("archive: corrupt magic in " + path);
    }
    const std::uint8_t* lenb =
        reinterpret_cast<const std::uint8_t*>(file.data() + sizeof(kArchiveMagic));
    const std::uint32_t mlen = static_cast<std::uint32_t>(lenb[0]) |
                               (static_cast<std::uint32_t>(lenb[1]) << 8) |
                               (static_cast<std::uint32_t>(lenb[2]) << 16) |
                               (static_cast<std::uint32_t>(lenb[3]) << 24);
    const std::size_t header = sizeof(kArchiveMagic) + 4;
    if (file.size() < header + mlen) throw ArchiveError("archive: truncated manifest in " + path);

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(file.begin() + static_cast<std::ptrdiff_t>(header),
                                         file.begin() + static_cast<std::ptrdiff_t>(header + mlen));
    } catch (const nlohmann::json::exception& e) {
        throw ArchiveError(std::string("archive: manifest parse failure: ") + e.what());
    }
    if (!manifest.is_array()) throw ArchiveError("archive: manifest must be an array");

    const std::size_t blob_off = header + mlen;
    const std::size_t blob_size = file.size() - blob_off;

    struct Entry {
        std::vector<int> shape;
        std::size_t offset = 0;
        std::size_t bytes = 0;
    };
    std::map<std::string, Entry> entries;
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // offset, bytes
    for (const nlohmann::json& e : manifest) {
        Entry entry;
        const std::string name = e.at("name").get<std::string>();
        if (e.at("dtype").get<std::string>() != "f32") {
            throw ArchiveError("archive: unsupported dtype for " + name);
        }
        entry.shape = e.at("shape").get<std::vector<int>>();
        entry.offset = e.at("byte_offset").get<std::size_t>();
        std::size_t count = 1;
        for (int d : entry.shape) {
            if (d <= 0) throw ArchiveError("archive: non-positive extent for " + name);
            count *= static_cast<std::size_t>(d);
        }
        entry.bytes = count * sizeof(float);
        if (entry.offset + entry.bytes > blob_size) {
            throw ArchiveError("archive: entry '" + name + "' extends past end of payload");
        }
        if (!entries.emplace(name, entry).second) {
            throw ArchiveError("archive: duplicate entry '" + name + "'");
        }
        spans.emplace_back(entry.offset, entry.bytes);
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i) {
        if (spans[i - 1].first + spans[i - 1].second > spans[i].first) {
            throw ArchiveError("archive: overlapping payload spans");
        }
    }

    std::vector<std::string> missing;
    const char* blob = file.data() + blob_off;
    for_each_tensor(model, [&](const std::string& name, Tensor& t) {
        auto it = entries.find(name);
        if (it == entries.end()) {
            missing.push_back(name);
            return;
        }
        if (it->second.shape != t.shape()) {
            throw ArchiveError("archive: shape mismatch for '" + name + "'");
        }
        std::memcpy(t.data(), blob + it->second.offset, it->second.bytes);
        entries.erase(it);
    });

    if (!missing.empty()) {
        std::string msg = "archive: missing tensors:";
        for (const std::string& n : missing) msg += " " + n;
        throw ArchiveError(msg);
    }
    if (!entries.empty()) {
        std::string msg = "archive: unknown tensors:";
        for (const auto& [n, e] : entries) msg += " " + n;
        throw ArchiveError(msg);
    }
}

inline ModelParams load_archive(const std::string& path, const TrackerConfig& cfg) {
    ModelParams model = build_model(cfg);
    load_archive_into(path, model);
    return model;
}

}  // namespace tempotrack
