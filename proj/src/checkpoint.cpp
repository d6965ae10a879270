// SPDX-License-Identifier: Apache-2.0
#include "nacn2n/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "nacn2n/errors.hpp"
#include "nacn2n/noise.hpp"

namespace nacn2n {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'N', 'A', 'C', 'K'};
constexpr std::uint8_t kBlobVersion = 0x01;

std::string encode(const std::vector<float>& values) {
    std::string out(4 + 1 + 8 + values.size() * 4, '\0');
    std::memcpy(out.data(), kMagic, 4);
    out[4] = static_cast<char>(kBlobVersion);
    const std::uint64_t n = values.size();
    for (int b = 0; b < 8; ++b) out[5 + b] = static_cast<char>((n >> (8 * b)) & 0xff);
    char* p = out.data() + 13;
    for (float f : values) {
        const auto u = std::bit_cast<std::uint32_t>(f);
        for (int b = 0; b < 4; ++b) *p++ = static_cast<char>((u >> (8 * b)) & 0xff);
    }
    return out;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<float> decode(const std::string& bytes, const fs::path& path) {
    if (bytes.size() < 13 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError(path.string() + ": not a parameter blob (bad magic)");
    }
    if (static_cast<std::uint8_t>(bytes[4]) != kBlobVersion) {
        throw FormatError(path.string() + ": unsupported blob version " +
                          std::to_string(static_cast<int>(static_cast<std::uint8_t>(bytes[4]))));
    }
    std::uint64_t n = 0;
    for (int b = 0; b < 8; ++b) n |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes[5 + b])) << (8 * b);
    if (bytes.size() != 13 + n * 4) {
        throw FormatError(path.string() + ": blob declares " + std::to_string(n) +
                          " values but holds " + std::to_string((bytes.size() - 13) / 4));
    }
    std::vector<float> out(n);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + 13);
    for (std::uint64_t i = 0; i < n; ++i, p += 4) {
        const std::uint32_t u = p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
        out[i] = std::bit_cast<float>(u);
    }
    return out;
}

std::string hex64(std::uint64_t v) {
    static const char* d = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[i] = d[v & 0xf];
    return s;
}

void write_bytes(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

void write_blob(const fs::path& path, const std::vector<float>& values) {
    write_bytes(path, encode(values));
}

std::vector<float> read_blob(const fs::path& path) { return decode(slurp(path), path); }

void save_checkpoint(const fs::path& dir, const ChainModel<float>& chain, const TrainState& state,
                     const nlohmann::json& train_config) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());

    const std::vector<float> theta(chain.theta().begin(), chain.theta().end());
    const std::string params = encode(theta);
    const std::string m = encode(state.adam_m);
    const std::string v = encode(state.adam_v);

    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : chain.backbone().layout().tensors()) {
        tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"dtype", "float32"},
                           {"offset", t.offset}, {"size", t.size}});
    }
    const auto& bc = chain.config();
    nlohmann::json man;
    man["format"] = "nacn2n-checkpoint";
    man["version"] = kCheckpointVersion;
    man["backbone"] = {{"name", bc.name}, {"base_channels", bc.base_channels},
                       {"depth", bc.depth}, {"kernel_size", bc.kernel_size},
                       {"residual", bc.residual}};
    man["T"] = chain.modules();
    man["init_seed"] = chain.init_seed();
    man["step"] = state.step;
    man["epoch"] = state.epoch;
    man["parameter_count"] = theta.size();
    man["tensors"] = tensors;
    man["train_config"] = train_config;
    man["history"] = state.history.to_json();
    man["blobs"] = {{"params", {{"file", "params.bin"}, {"fnv1a64", hex64(fnv1a64(params))}}},
                    {"adam_m", {{"file", "adam_m.bin"}, {"fnv1a64", hex64(fnv1a64(m))}}},
                    {"adam_v", {{"file", "adam_v.bin"}, {"fnv1a64", hex64(fnv1a64(v))}}}};
    write_bytes(dir / "params.bin", params);
    write_bytes(dir / "adam_m.bin", m);
    write_bytes(dir / "adam_v.bin", v);
    write_bytes(dir / "manifest.json", man.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json")) throw IoError("checkpoint not found: " + dir.string());
    nlohmann::json man;
    try {
        man = nlohmann::json::parse(slurp(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint manifest is not valid JSON: " + std::string(e.what()));
    }
    if (man.value("format", "") != "nacn2n-checkpoint") {
        throw FormatError("not a checkpoint manifest: " + (dir / "manifest.json").string());
    }
    if (man.value("version", -1) != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + man["version"].dump());
    }
    auto blob = [&](const char* key) {
        const auto& b = man.at("blobs").at(key);
        const fs::path p = dir / b.at("file").get<std::string>();
        const std::string bytes = slurp(p);
        if (hex64(fnv1a64(bytes)) != b.at("fnv1a64").get<std::string>()) {
            throw FormatError(p.string() + ": checksum mismatch (corrupt blob)");
        }
        return decode(bytes, p);
    };
    Checkpoint c;
    const auto& bj = man.at("backbone");
    c.backbone.name = bj.at("name").get<std::string>();
    c.backbone.base_channels = bj.at("base_channels").get<int>();
    c.backbone.depth = bj.at("depth").get<int>();
    c.backbone.kernel_size = bj.at("kernel_size").get<int>();
    c.backbone.residual = bj.value("residual", true);
    c.modules = man.at("T").get<int>();
    c.init_seed = man.at("init_seed").get<std::uint64_t>();
    c.theta = blob("params");
    c.state.adam_m = blob("adam_m");
    c.state.adam_v = blob("adam_v");
    c.state.step = man.at("step").get<std::uint64_t>();
    c.state.epoch = man.at("epoch").get<int>();
    c.state.history = TrainHistory::from_json(man.at("history"));
    c.train_config = man.value("train_config", nlohmann::json::object());
    const auto count = man.at("parameter_count").get<std::size_t>();
    if (c.theta.size() != count || c.state.adam_m.size() != count ||
        c.state.adam_v.size() != count) {
        throw FormatError("checkpoint blobs disagree with parameter_count " + std::to_string(count));
    }
    return c;
}

ChainModel<float> restore_chain(const Checkpoint& ckpt) {
    ChainModel<float> chain(build_backbone<float>(ckpt.backbone), ckpt.modules, ckpt.init_seed);
    chain.set_theta(ckpt.theta);
    return chain;
}

}  // namespace nacn2n
