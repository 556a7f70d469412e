#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpl/config.hpp"
#include "dpl/model.hpp"

namespace dpl
{

class CheckpointError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Full training state. Random streams are derived from (seed, iteration),
/// so the iteration counter doubles as the stream cursor.
struct Checkpoint
{
    RunConfig config;
    Model model;
    std::vector<Vector> momentum; // one buffer per Model::tensors() entry
    int iteration = 0;
    std::uint64_t rng_cursor = 0;
    std::uint64_t config_hash = 0;
};

namespace detail
{
inline constexpr char b64_alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes)
{
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3)
    {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += b64_alphabet[(v >> 18) & 63];
        out += b64_alphabet[(v >> 12) & 63];
        out += b64_alphabet[(v >> 6) & 63];
        out += b64_alphabet[v & 63];
    }
    if (i < bytes.size())
    {
        std::uint32_t v = bytes[i] << 16;
        if (i + 1 < bytes.size())
            v |= bytes[i + 1] << 8;
        out += b64_alphabet[(v >> 18) & 63];
        out += b64_alphabet[(v >> 12) & 63];
        out += i + 1 < bytes.size() ? b64_alphabet[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

inline std::vector<std::uint8_t> base64_decode(const std::string& text)
{
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z')
            return c - 'A';
        if (c >= 'a' && c <= 'z')
            return c - 'a' + 26;
        if (c >= '0' && c <= '9')
            return c - '0' + 52;
        if (c == '+')
            return 62;
        if (c == '/')
            return 63;
        return -1;
    };
    if (text.size() % 4 != 0)
        throw CheckpointError("base64 payload has invalid length");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4)
    {
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k)
        {
            const char c = text[i + k];
            if (c == '=' && i + 4 == text.size() && k >= 2)
            {
                v[k] = 0;
                ++pad;
                continue;
            }
            if (pad > 0 || (v[k] = value(c)) < 0)
                throw CheckpointError("base64 payload contains invalid characters");
        }
        const std::uint32_t w = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
        out.push_back(static_cast<std::uint8_t>((w >> 16) & 0xFF));
        if (pad < 2)
            out.push_back(static_cast<std::uint8_t>((w >> 8) & 0xFF));
        if (pad < 1)
            out.push_back(static_cast<std::uint8_t>(w & 0xFF));
    }
    return out;
}

inline std::string encode_doubles(std::span<const double> values)
{
    std::vector<std::uint8_t> bytes(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        const auto v = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b)
            bytes[i * 8 + b] = static_cast<std::uint8_t>((v >> (8 * b)) & 0xFF);
    }
    return base64_encode(bytes);
}

inline void decode_doubles(const std::string& text, std::span<double> out, const std::string& name)
{
    const auto bytes = base64_decode(text);
    if (bytes.size() != out.size() * 8)
        throw CheckpointError("tensor " + name + ": payload holds " + std::to_string(bytes.size() / 8) +
                              " values, expected " + std::to_string(out.size()));
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b)
            v |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
        out[i] = std::bit_cast<double>(v);
    }
}

inline std::string shape_string(const std::vector<std::size_t>& shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i)
        s += (i ? "," : "") + std::to_string(shape[i]);
    return s + "]";
}
} // namespace detail

inline nlohmann::json checkpoint_to_json(const Checkpoint& ckpt)
{
    Model model = ckpt.model; // tensors() needs mutable access
    auto tensors = model.tensors();
    nlohmann::json params = nlohmann::json::object();
    nlohmann::json momentum = nlohmann::json::object();
    for (std::size_t i = 0; i < tensors.size(); ++i)
    {
        const auto& t = tensors[i];
        params[t.name] = {{"shape", t.shape}, {"data", detail::encode_doubles(t.values)}};
        if (i < ckpt.momentum.size())
            momentum[t.name] = {{"shape", t.shape}, {"data", detail::encode_doubles(ckpt.momentum[i])}};
    }
    return {{"format", "dpl-checkpoint/1"},
            {"config_hash", hash_hex(ckpt.config_hash)},
            {"config", ckpt.config},
            {"iteration", ckpt.iteration},
            {"rng_cursor", ckpt.rng_cursor},
            {"tensors", params},
            {"momentum", momentum}};
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw CheckpointError("cannot write checkpoint " + path);
    out << checkpoint_to_json(ckpt).dump(1) << '\n';
    if (!out)
        throw CheckpointError("failed writing checkpoint " + path);
}

/// Validates shapes against `expected` (or the embedded config when absent)
/// before the config hash, so a checkpoint for a different D fails naming
/// the first mismatching tensor.
inline Checkpoint checkpoint_from_json(const nlohmann::json& j, const std::optional<ModelConfig>& expected = {})
{
    Checkpoint ckpt;
    try
    {
        if (j.value("format", "") != "dpl-checkpoint/1")
            throw CheckpointError("not a dpl checkpoint (missing or unknown format tag)");
        ckpt.config = j.at("config").get<RunConfig>();
        ckpt.iteration = j.at("iteration").get<int>();
        ckpt.rng_cursor = j.at("rng_cursor").get<std::uint64_t>();
        const std::string stored_hash = j.at("config_hash").get<std::string>();

        const ModelConfig target = expected.value_or(ckpt.config.model);
        ckpt.model = Model(target);
        auto tensors = ckpt.model.tensors();
        const auto& params = j.at("tensors");
        const auto& momentum = j.at("momentum");
        for (const auto& t : tensors)
        {
            if (!params.contains(t.name))
                throw CheckpointError("tensor " + t.name + " missing from checkpoint");
            const auto shape = params.at(t.name).at("shape").get<std::vector<std::size_t>>();
            if (shape != t.shape)
                throw CheckpointError("tensor " + t.name + ": shape " + detail::shape_string(shape) +
                                      " does not match expected " + detail::shape_string(t.shape));
            detail::decode_doubles(params.at(t.name).at("data").get<std::string>(), t.values, t.name);
            Vector buf(t.values.size(), 0.0);
            if (momentum.contains(t.name))
                detail::decode_doubles(momentum.at(t.name).at("data").get<std::string>(), buf,
                                       "momentum." + t.name);
            ckpt.momentum.push_back(std::move(buf));
        }
        ckpt.config_hash = config_hash(ckpt.config.model);
        if (hash_hex(ckpt.config_hash) != stored_hash)
            throw CheckpointError("config hash mismatch: file says " + stored_hash + ", embedded config hashes to " +
                                  hash_hex(ckpt.config_hash));
        if (expected && config_hash(*expected) != ckpt.config_hash)
            throw CheckpointError("config hash mismatch: checkpoint " + stored_hash + " vs requested " +
                                  hash_hex(config_hash(*expected)));
    }
    catch (const CheckpointError&)
    {
        throw;
    }
    catch (const std::exception& e)
    {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
    return ckpt;
}

inline Checkpoint load_checkpoint(const std::string& path, const std::optional<ModelConfig>& expected = {})
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CheckpointError("cannot open checkpoint " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(ss.str());
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw CheckpointError("checkpoint parse error in " + path + ": " + e.what());
    }
    return checkpoint_from_json(j, expected);
}

} // namespace dpl
