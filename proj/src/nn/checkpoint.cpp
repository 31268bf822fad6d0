#include "okpose/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace okpose::nn {

namespace {

constexpr char kMagic[8] = {'O', 'K', 'P', 'C', 'H', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.append(b, 4);
}

uint32_t get_u32(const std::string& s, size_t off) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
    return v;
}

uint64_t get_u64(const std::string& s, size_t off) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
    return v;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

nlohmann::json parse_header(const std::string& bytes, size_t& payload_off) {
    if (bytes.size() < 16 + 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
        throw std::runtime_error("checkpoint: bad magic (not a checkpoint file)");
    }
    const uint32_t version = get_u32(bytes, 8);
    if (version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported format version " +
                                 std::to_string(version));
    }
    const uint32_t hlen = get_u32(bytes, 12);
    if (16 + static_cast<size_t>(hlen) + 8 > bytes.size()) {
        throw std::runtime_error("checkpoint: truncated header");
    }
    const uint64_t stored = get_u64(bytes, bytes.size() - 8);
    const uint64_t actual = fnv1a(bytes.data(), bytes.size() - 8);
    if (stored != actual) throw std::runtime_error("checkpoint: checksum mismatch (file corrupted)");
    payload_off = 16 + hlen;
    return nlohmann::json::parse(bytes.substr(16, hlen));
}

CheckpointInfo info_from_header(const nlohmann::json& header) {
    CheckpointInfo info;
    info.seed = header.at("seed").get<uint64_t>();
    if (header.contains("hyperparameters")) {
        for (const auto& [k, v] : header.at("hyperparameters").items())
            info.hyperparams[k] = v.get<double>();
    }
    return info;
}

}  // namespace

uint64_t fnv1a(const void* data, size_t n, uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t param_checksum(const std::vector<NamedParam>& params) {
    uint64_t h = 14695981039346656037ull;
    for (const auto& np : params) {
        h = fnv1a(np.name.data(), np.name.size(), h);
        h = fnv1a(np.tensor->data.data(), np.tensor->data.size() * sizeof(float), h);
    }
    return h;
}

void save_checkpoint(const std::string& path, const std::vector<NamedParam>& params,
                     uint64_t seed, const std::map<std::string, double>& hyperparams) {
    nlohmann::json header;
    header["format"] = "okpose-checkpoint";
    header["version"] = kVersion;
    header["seed"] = seed;
    header["hyperparameters"] = hyperparams;
    auto& tensors = header["tensors"] = nlohmann::json::array();
    for (const auto& np : params) {
        tensors.push_back({{"name", np.name}, {"shape", np.tensor->shape}});
    }
    const std::string hjson = header.dump();

    std::string bytes;
    bytes.append(kMagic, 8);
    put_u32(bytes, kVersion);
    put_u32(bytes, static_cast<uint32_t>(hjson.size()));
    bytes += hjson;
    static_assert(sizeof(float) == 4);
    for (const auto& np : params) {
        bytes.append(reinterpret_cast<const char*>(np.tensor->data.data()),
                     np.tensor->data.size() * sizeof(float));
    }
    const uint64_t checksum = fnv1a(bytes.data(), bytes.size());
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((checksum >> (8 * i)) & 0xff));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

CheckpointInfo load_checkpoint(const std::string& path, std::vector<NamedParam>& params) {
    const std::string bytes = read_file(path);
    size_t off = 0;
    const nlohmann::json header = parse_header(bytes, off);
    const auto& tensors = header.at("tensors");
    if (tensors.size() != params.size()) {
        throw std::runtime_error("checkpoint: file has " + std::to_string(tensors.size()) +
                                 " tensors but the model has " + std::to_string(params.size()));
    }
    const size_t payload_end = bytes.size() - 8;
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& entry = tensors[i];
        const std::string name = entry.at("name").get<std::string>();
        const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        auto& p = *params[i].tensor;
        if (name != params[i].name) {
            throw std::runtime_error("checkpoint: tensor mismatch at index " + std::to_string(i) +
                                     ": file has '" + name + "', model expects '" +
                                     params[i].name + "'");
        }
        if (shape != p.shape) {
            throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': file has " +
                                     shape_str(shape) + ", model expects " + shape_str(p.shape));
        }
        const size_t nbytes = p.data.size() * sizeof(float);
        if (off + nbytes > payload_end) throw std::runtime_error("checkpoint: truncated payload");
        std::memcpy(p.data.data(), bytes.data() + off, nbytes);
        off += nbytes;
    }
    if (off != payload_end) throw std::runtime_error("checkpoint: trailing bytes after payload");
    return info_from_header(header);
}

CheckpointInfo read_checkpoint_info(const std::string& path) {
    const std::string bytes = read_file(path);
    size_t off = 0;
    return info_from_header(parse_header(bytes, off));
}

}  // namespace okpose::nn
