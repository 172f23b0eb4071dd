#include "mgan/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "mgan/error.hpp"

namespace mgan {

namespace {

constexpr std::array<char, 8> magic = {'M', 'G', 'A', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t format_version = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) throw DataError("checkpoint is truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

nlohmann::ordered_json config_to_json(const ModelConfig& c) {
    return {{"lambda", c.lambda},
            {"pool_size", c.pool_size},
            {"num_layers", c.num_layers},
            {"embed_dim", c.embed_dim},
            {"hidden_size", c.hidden_size},
            {"conv_kernel_width", c.conv_kernel_width},
            {"max_query_len", c.max_query_len},
            {"use_gcn", c.use_gcn},
            {"use_attention", c.use_attention},
            {"use_query_encoder", c.use_query_encoder}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.lambda = j.at("lambda").get<double>();
    c.pool_size = j.at("pool_size").get<std::size_t>();
    c.num_layers = j.at("num_layers").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.hidden_size = j.at("hidden_size").get<std::size_t>();
    c.conv_kernel_width = j.at("conv_kernel_width").get<std::size_t>();
    c.max_query_len = j.at("max_query_len").get<std::size_t>();
    c.use_gcn = j.at("use_gcn").get<bool>();
    c.use_attention = j.at("use_attention").get<bool>();
    c.use_query_encoder = j.at("use_query_encoder").get<bool>();
    c.validate();
    return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    nlohmann::ordered_json manifest;
    manifest["config"] = config_to_json(checkpoint.config);
    manifest["metadata"] = checkpoint.metadata;
    manifest["params"] = nlohmann::ordered_json::array();
    const auto named = checkpoint.params.named();
    std::size_t offset = 0;
    for (const auto& [name, t] : named) {
        manifest["params"].push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
        offset += t.size();
    }
    const std::string text = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(magic.data(), magic.size());
    write_le<std::uint32_t>(out, format_version);
    write_le<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, t] : named)
        for (double v : t.values()) write_le<double>(out, v);
    if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read checkpoint " + path.string());
    std::array<char, 8> head{};
    if (!in.read(head.data(), head.size()) || head != magic) throw DataError(path.string() + " is not a checkpoint file");
    if (read_le<std::uint32_t>(in) != format_version) throw DataError("unsupported checkpoint version in " + path.string());
    const auto length = read_le<std::uint64_t>(in);
    if (length > (std::uint64_t{1} << 32)) throw DataError("checkpoint manifest length is implausible");
    std::string text(length, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(length))) throw DataError("checkpoint is truncated");

    Checkpoint cp;
    try {
        const auto manifest = nlohmann::json::parse(text);
        cp.config = config_from_json(manifest.at("config"));
        cp.metadata = manifest.at("metadata").get<std::map<std::string, std::string>>();
        cp.params = ModelParams::init(cp.config, 0);
        const auto named = cp.params.named();
        const auto& entries = manifest.at("params");
        if (entries.size() != named.size()) throw DataError("checkpoint parameter count does not match its config");
        for (std::size_t i = 0; i < named.size(); ++i) {
            const auto& e = entries[i];
            if (e.at("name").get<std::string>() != named[i].first || e.at("shape").get<Shape>() != named[i].second.shape())
                throw DataError("checkpoint entry \"" + e.at("name").get<std::string>() + "\" does not match the model layout");
        }
        for (const auto& [name, t] : named) {
            auto values = Tensor(t).mutable_values();
            for (auto& v : values) v = read_le<double>(in);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed checkpoint manifest in " + path.string() + ": " + e.what());
    }
    if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes after checkpoint values");
    return cp;
}

}  // namespace mgan
