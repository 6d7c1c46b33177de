#include "wcad/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace wcad {

namespace {

void put_u32(std::ostream& out, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
}

void put_u64(std::ostream& out, uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const ParamStore& params, const std::string& config_json, int64_t step,
                     uint64_t rng_state, const std::string& path) {
    nlohmann::json header;
    header["config"] = nlohmann::json::parse(config_json.empty() ? "{}" : config_json);
    header["step"] = step;
    header["rng_state"] = rng_state;
    header["manifest"] = nlohmann::json::array();
    for (const auto& [name, p] : params) {
        nlohmann::json entry;
        entry["name"] = name;
        entry["shape"] = p.shape();
        header["manifest"].push_back(entry);
    }
    std::string header_str = header.dump();

    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("save_checkpoint: cannot open " + tmp);
        out.write("WCAD", 4);
        put_u32(out, kCheckpointVersion);
        put_u64(out, header_str.size());
        out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
        for (const auto& [name, p] : params) {
            out.write(reinterpret_cast<const char*>(p.data()),
                      static_cast<std::streamsize>(p.numel() * sizeof(float)));
        }
        if (!out) throw IoError("save_checkpoint: short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw IoError("save_checkpoint: cannot rename " + tmp + " to " + path);
    }
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_checkpoint: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "WCAD", 4) != 0) {
        throw IoError("load_checkpoint: bad magic in " + path);
    }
    uint32_t version = get_u32(in);
    if (!in) throw IoError("load_checkpoint: truncated header in " + path);
    if (version != kCheckpointVersion) {
        throw IoError("load_checkpoint: version " + std::to_string(version) + " unsupported (want " +
                      std::to_string(kCheckpointVersion) + ")");
    }
    uint64_t header_len = get_u64(in);
    if (!in) throw IoError("load_checkpoint: truncated header in " + path);
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (in.gcount() != static_cast<std::streamsize>(header_len)) {
        throw IoError("load_checkpoint: truncated header in " + path);
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("load_checkpoint: malformed header JSON in " + path + ": " + e.what());
    }

    CheckpointData data;
    data.config_json = header.at("config").dump();
    data.step = header.at("step").get<int64_t>();
    data.rng_state = header.at("rng_state").get<uint64_t>();
    for (const auto& entry : header.at("manifest")) {
        std::string name = entry.at("name").get<std::string>();
        Shape shape = entry.at("shape").get<Shape>();
        Tensor t = Tensor::zeros(shape);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(t.numel() * sizeof(float))) {
            throw IoError("load_checkpoint: payload shorter than manifest shape " +
                          shape_str(shape) + " for parameter " + name);
        }
        data.params.add(name, std::move(t));
    }
    // no trailing bytes allowed
    char extra;
    in.read(&extra, 1);
    if (in.gcount() != 0) {
        throw IoError("load_checkpoint: trailing bytes after payload in " + path);
    }
    return data;
}

}  // namespace wcad
